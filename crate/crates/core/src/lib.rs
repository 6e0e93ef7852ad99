//! Pointwise Kähler geometry: curvature from Kähler potentials, the Bochner
//! curvature tensor, and homothety certificates for holomorphic linear maps
//! that preserve it.
//!
//! All tensors live in a real 2n-dimensional tangent space described by a
//! [`HermitianFrame`] (metric `g` and complex structure `J` in a working
//! basis). Charts produce frames and curvature tensors at points; the
//! [`bochner`] module projects curvature onto its Bochner part; the
//! [`homothety`] module turns a Bochner-preserving J-linear map into a
//! certificate carrying its conformal factor.

pub mod bochner;
pub mod chart;
pub mod eigen;
mod error;
pub mod fd;
pub mod homothety;
pub mod poly;
pub mod rng;
pub mod tensor;

pub use bochner::{BochnerTensor, CurvatureBundle};
pub use chart::{CatalogName, ChartPoint, KaehlerChart};
pub use eigen::{EigenPair, EigenPairList, JAdaptedEigenbasis};
pub use error::{Error, Result};
pub use homothety::{HolomorphicLinearMap, HomothetyReport, PointData, Verdict};
pub use tensor::{Endomorphism, HermitianFrame, SymBilinear, SymmetryResiduals, Tensor4};

/// Dense real matrix used for metrics, complex structures and linear maps.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real tangent vector.
pub type Vector = nalgebra::DVector<f64>;

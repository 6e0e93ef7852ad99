//! The Bochner curvature tensor: the part of a Kähler curvature tensor left
//! after removing its Ricci and scalar contributions.

use serde::{Deserialize, Serialize};

use crate::chart::{ChartPoint, KaehlerChart, EXACT_TOLERANCE};
use crate::eigen::symmetric_jacobi;
use crate::poly::Polynomial;
use crate::rng::seeded_rng;
use crate::tensor::{
    contract_ricci, curvature_symmetry_residuals, max_abs, raise_index, scalar_curvature, Endomorphism,
    HermitianFrame, SymBilinear, SymmetryResiduals, Tensor4,
};
use crate::{Error, Matrix, Result, Vector};

const CONSISTENCY_TOL: f64 = 1e-10;
const RANDOM_DEGREE: u32 = 4;
const RANDOM_BOUND: f64 = 0.1;
const RANDOM_MARGIN: f64 = 0.5;
const RANDOM_ATTEMPTS: usize = 10;

/// Default relative threshold below which a Bochner tensor counts as zero.
pub const FLATNESS_TOL: f64 = 1e-6;

/// Relative residuals of a tensor below unit size are measured against 1, so
/// finite-difference noise on a flat chart is not mistaken for asymmetry.
pub fn symmetric_within(sym: &SymmetryResiduals, t: &Tensor4, tolerance: f64) -> bool {
    let scale = t.norm();
    sym.max() * scale <= tolerance * scale.max(1.0)
}

/// Curvature `R`, Ricci `S` in both index positions and scalar curvature `τ`
/// at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBundle {
    pub frame: HermitianFrame,
    pub r: Tensor4,
    pub s: SymBilinear,
    pub s_endo: Endomorphism,
    pub tau: f64,
    /// Relative symmetry tolerance the curvature is held to.
    pub tolerance: f64,
}

impl CurvatureBundle {
    /// Contracts `r` and checks its curvature symmetries at `tolerance`.
    pub fn new(frame: HermitianFrame, r: Tensor4, tolerance: f64) -> Result<Self> {
        let sym = curvature_symmetry_residuals(&r, &frame);
        if !symmetric_within(&sym, &r, tolerance) {
            return Err(Error::InconsistentBundle(format!(
                "curvature symmetry residual {:e} exceeds {tolerance:e}",
                sym.max()
            )));
        }
        let s = contract_ricci(&r, &frame)?;
        let tau = scalar_curvature(&s, &frame)?;
        let s_endo = raise_index(&s, &frame)?;
        Ok(Self { frame, r, s, s_endo, tau, tolerance })
    }

    pub fn at(chart: &KaehlerChart, p: &ChartPoint) -> Result<Self> {
        let (frame, r) = chart.frame_and_curvature_at(p)?;
        Self::new(frame, r, chart.curvature_tolerance())
    }

    /// Largest relative mismatch between the stored `S`, `S♯`, `τ` and the
    /// values recomputed from `R`.
    pub fn consistency_residual(&self) -> Result<f64> {
        let s = contract_ricci(&self.r, &self.frame)?;
        let tau = scalar_curvature(&s, &self.frame)?;
        let s_endo = raise_index(&self.s, &self.frame)?;
        let rel = |diff: f64, scale: f64| if scale > 0.0 { diff / scale } else { diff };
        let s_scale = s.norm().max(self.s.norm()).max(self.r.norm());
        Ok([
            rel(max_abs(&(&s.m - &self.s.m)), s_scale),
            rel((tau - self.tau).abs(), tau.abs().max(self.tau.abs()).max(s_scale)),
            rel(max_abs(&(&s_endo.m - &self.s_endo.m)), s_endo.norm().max(self.s_endo.norm())),
        ]
        .into_iter()
        .fold(0.0, f64::max))
    }

    /// Transports the bundle along a change of basis `u` (columns are the new
    /// basis vectors expressed in the old one). For `u` g-orthogonal and
    /// J-commuting the frame is unchanged.
    pub fn pullback(&self, u: &Matrix) -> Result<Self> {
        let g = u.transpose() * self.frame.metric() * u;
        let g = (&g + g.transpose()) * 0.5;
        let j = u.clone().try_inverse().ok_or(Error::SingularMap)? * self.frame.complex_structure() * u;
        let frame = HermitianFrame::new(self.frame.n(), g, j)?;
        Self::new(frame, self.r.pullback(u), self.tolerance)
    }
}

/// A Bochner tensor of type (0,4) with the frame it is expressed in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BochnerTensor {
    pub frame: HermitianFrame,
    pub tensor: Tensor4,
    /// `|R|∞` of the curvature it was projected from, when known.
    pub curvature_scale: Option<f64>,
}

impl BochnerTensor {
    pub fn norm(&self) -> f64 {
        self.tensor.norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            frame: self.frame.clone(),
            tensor: self.tensor.scaled(s),
            curvature_scale: self.curvature_scale.map(|c| c * s.abs()),
        }
    }

    /// The vector `B(x, y)z`.
    pub fn apply(&self, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        self.frame.metric_inverse() * self.tensor.covector(x, y, z)
    }
}

/// The Bochner formula on raw `(R, S, S♯, τ)`:
///
/// ```text
/// B(x,y)z = R(x,y)z
///   - 1/(2(n+2)) { S(y,z)x - S(x,z)y + g(y,z)Sx - g(x,z)Sy
///                  + S(Jy,z)Jx - S(Jx,z)Jy + g(Jy,z)SJx - g(Jx,z)SJy
///                  - 2S(Jx,y)Jz - 2g(Jx,y)SJz }
///   + τ/(4(n+1)(n+2)) { g(y,z)x - g(x,z)y + g(Jy,z)Jx - g(Jx,z)Jy - 2g(Jx,y)Jz }
/// ```
///
/// Scalar terms use `S` of type (0,2), vector terms `S♯ = g⁻¹S`. The result is
/// lowered with `g`. Linear in `(R, S, S♯, τ)` jointly.
pub fn bochner_formula(frame: &HermitianFrame, r: &Tensor4, s: &SymBilinear, s_endo: &Endomorphism, tau: f64) -> Tensor4 {
    let n = frame.n();
    let d = frame.dim();
    let nf = n as f64;
    let ricci_coef = 1.0 / (2.0 * (nf + 2.0));
    let scalar_coef = tau / (4.0 * (nf + 1.0) * (nf + 2.0));

    let g = frame.metric();
    let gi = frame.metric_inverse();
    let j = frame.complex_structure();
    let s = &s.m;
    // (Jᵀ M)[a][b] = M(Je_a, e_b)
    let jt_s = j.transpose() * s;
    let jt_g = j.transpose() * g;
    let s_j = &s_endo.m * j;

    let mut out = Tensor4::zeros(n);
    let mut v = Vector::zeros(d);
    for a in 0..d {
        let x = |k: usize| if k == a { 1.0 } else { 0.0 };
        for b in 0..d {
            let y = |k: usize| if k == b { 1.0 } else { 0.0 };
            for c in 0..d {
                for k in 0..d {
                    // R(x,y)z with the last index raised
                    let mut rv = 0.0;
                    for e in 0..d {
                        rv += gi[(k, e)] * r[[a, b, c, e]];
                    }
                    let ricci = s[(b, c)] * x(k) - s[(a, c)] * y(k) + g[(b, c)] * s_endo.m[(k, a)]
                        - g[(a, c)] * s_endo.m[(k, b)]
                        + jt_s[(b, c)] * j[(k, a)]
                        - jt_s[(a, c)] * j[(k, b)]
                        + jt_g[(b, c)] * s_j[(k, a)]
                        - jt_g[(a, c)] * s_j[(k, b)]
                        - 2.0 * jt_s[(a, b)] * j[(k, c)]
                        - 2.0 * jt_g[(a, b)] * s_j[(k, c)];
                    let scalar = g[(b, c)] * x(k) - g[(a, c)] * y(k) + jt_g[(b, c)] * j[(k, a)]
                        - jt_g[(a, c)] * j[(k, b)]
                        - 2.0 * jt_g[(a, b)] * j[(k, c)];
                    v[k] = rv - ricci_coef * ricci + scalar_coef * scalar;
                }
                let lowered = g * &v;
                for e in 0..d {
                    out[[a, b, c, e]] = lowered[e];
                }
            }
        }
    }
    out
}

pub fn bochner_from_curvature(bundle: &CurvatureBundle) -> Result<BochnerTensor> {
    let sym = curvature_symmetry_residuals(&bundle.r, &bundle.frame);
    if !symmetric_within(&sym, &bundle.r, bundle.tolerance) {
        return Err(Error::InconsistentBundle(format!("curvature symmetry residual {:e}", sym.max())));
    }
    let consistency = bundle.consistency_residual()?;
    if consistency > CONSISTENCY_TOL {
        return Err(Error::InconsistentBundle(format!("Ricci/scalar mismatch {consistency:e}")));
    }
    let tensor = bochner_formula(&bundle.frame, &bundle.r, &bundle.s, &bundle.s_endo, bundle.tau);
    Ok(BochnerTensor { frame: bundle.frame.clone(), tensor, curvature_scale: Some(bundle.r.norm()) })
}

/// `|Σᵢ B(eᵢ, Jeᵢ)x|_g / (|B|∞ |x|_g)` for a J-adapted orthonormal basis built
/// from the coordinate vectors.
pub fn trace_identity_residual(b: &BochnerTensor, x: &Vector) -> f64 {
    let es = b.frame.j_adapted_basis(std::iter::empty());
    trace_identity_residual_in_basis(b, x, &es)
}

/// As [`trace_identity_residual`], with `es = [e₁..eₙ]` supplied.
pub fn trace_identity_residual_in_basis(b: &BochnerTensor, x: &Vector, es: &[Vector]) -> f64 {
    let scale = b.norm() * b.frame.norm(x);
    if scale == 0.0 {
        return 0.0;
    }
    let mut sum = Vector::zeros(b.frame.dim());
    for e in es {
        sum += b.apply(e, &b.frame.apply_j(e), x);
    }
    b.frame.norm(&sum) / scale
}

/// `|B(bundle(B)) - B| / |B|`: the formula applied to `B` itself returns `B`.
pub fn bochner_idempotence_residual(b: &BochnerTensor) -> Result<f64> {
    let scale = b.norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let s = contract_ricci(&b.tensor, &b.frame)?;
    let tau = scalar_curvature(&s, &b.frame)?;
    let s_endo = raise_index(&s, &b.frame)?;
    let again = bochner_formula(&b.frame, &b.tensor, &s, &s_endo, tau);
    Ok((&again - &b.tensor).norm() / scale)
}

/// `|Ric(B)|∞ / |B|∞`.
pub fn ricci_residual(b: &BochnerTensor) -> Result<f64> {
    let scale = b.norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(contract_ricci(&b.tensor, &b.frame)?.norm() / scale)
}

/// `|B|∞ ≤ tol · max(|R|∞, 1)`, falling back to an absolute threshold when the
/// curvature scale is unknown.
pub fn is_bochner_flat(b: &BochnerTensor, tol: f64) -> bool {
    b.norm() <= tol * b.curvature_scale.unwrap_or(1.0).max(1.0)
}

/// Every algebraic identity a Bochner tensor must satisfy, as relative residuals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BochnerResiduals {
    pub symmetries: SymmetryResiduals,
    pub ricci_contraction: f64,
    /// Max over the normalized coordinate vectors `x`.
    pub trace_identity: f64,
    pub idempotence: f64,
}

pub fn bochner_residuals(b: &BochnerTensor) -> Result<BochnerResiduals> {
    let es = b.frame.j_adapted_basis(std::iter::empty());
    let d = b.frame.dim();
    let trace_identity = (0..d)
        .map(|a| {
            let x = Vector::from_fn(d, |i, _| if i == a { 1.0 } else { 0.0 });
            trace_identity_residual_in_basis(b, &x, &es)
        })
        .fold(0.0, f64::max);
    Ok(BochnerResiduals {
        symmetries: curvature_symmetry_residuals(&b.tensor, &b.frame),
        ricci_contraction: ricci_residual(b)?,
        trace_identity,
        idempotence: bochner_idempotence_residual(b)?,
    })
}

/// Curvature at the origin of a random polynomial potential
/// `Σ|z|² + Re P`, deg P ≤ 4, coefficients of modulus ≤ 0.1. Draws are
/// repeated (from the same stream) while the smallest eigenvalue of `h_{αβ̄}`
/// at the origin is below 0.5.
pub fn random_kaehler_curvature(seed: u64, n: usize) -> Result<CurvatureBundle> {
    if !(2..=4).contains(&n) {
        return Err(Error::UnsupportedDimension { what: "random Kähler curvature".into(), n });
    }
    let mut rng = seeded_rng(seed);
    let origin = ChartPoint::origin(n);
    for _ in 0..RANDOM_ATTEMPTS {
        let k = Polynomial::random_potential(n, RANDOM_DEGREE, RANDOM_BOUND, &mut rng);
        let chart = KaehlerChart::polynomial("random-poly", k, None)?;
        let jet = chart.jet_at(&origin)?;
        let g = jet.real_metric();
        let (vals, _) = symmetric_jacobi(&g)?;
        // eigenvalues of the real metric are twice those of h
        let margin = vals.iter().copied().fold(f64::INFINITY, f64::min) / 2.0;
        if margin < RANDOM_MARGIN {
            continue;
        }
        let frame = HermitianFrame::standard(n, g)?;
        let r = jet.real_curvature().ok_or(Error::DegenerateDraw(RANDOM_ATTEMPTS))?;
        return CurvatureBundle::new(frame, r, EXACT_TOLERANCE);
    }
    Err(Error::DegenerateDraw(RANDOM_ATTEMPTS))
}

/// Bochner tensor of [`random_kaehler_curvature`].
pub fn random_bochner(seed: u64, n: usize) -> Result<BochnerTensor> {
    bochner_from_curvature(&random_kaehler_curvature(seed, n)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{catalog_chart, CatalogName};

    #[test]
    fn zero_curvature_gives_zero_bochner() {
        let frame = HermitianFrame::euclidean(2);
        let bundle = CurvatureBundle::new(frame, Tensor4::zeros(2), EXACT_TOLERANCE).unwrap();
        let b = bochner_from_curvature(&bundle).unwrap();
        assert_eq!(b.norm(), 0.0);
        assert_eq!(trace_identity_residual(&b, &Vector::from_element(4, 1.0)), 0.0);
        assert_eq!(bochner_idempotence_residual(&b).unwrap(), 0.0);
        assert!(is_bochner_flat(&b, FLATNESS_TOL));
    }

    #[test]
    fn inconsistent_bundle_is_rejected() {
        let frame = HermitianFrame::euclidean(2);
        let mut bundle = CurvatureBundle::new(frame, Tensor4::zeros(2), EXACT_TOLERANCE).unwrap();
        bundle.tau = 1.0;
        assert!(matches!(bochner_from_curvature(&bundle), Err(Error::InconsistentBundle(_))));
    }

    #[test]
    fn asymmetric_curvature_is_rejected() {
        let frame = HermitianFrame::euclidean(2);
        let mut r = Tensor4::zeros(2);
        r[[0, 0, 0, 0]] = 1.0;
        assert!(matches!(CurvatureBundle::new(frame, r, EXACT_TOLERANCE), Err(Error::InconsistentBundle(_))));
    }

    #[test]
    fn random_curvature_is_deterministic() {
        let a = random_kaehler_curvature(0, 2).unwrap();
        let b = random_kaehler_curvature(0, 2).unwrap();
        assert_eq!(a, b);
        assert!(curvature_symmetry_residuals(&a.r, &a.frame).max() <= 1e-10);
    }

    #[test]
    fn random_curvature_dimension_bounds() {
        assert!(matches!(random_kaehler_curvature(0, 1), Err(Error::UnsupportedDimension { n: 1, .. })));
        assert!(matches!(random_kaehler_curvature(0, 5), Err(Error::UnsupportedDimension { n: 5, .. })));
    }

    #[test]
    fn generic_potential_is_not_bochner_flat() {
        let bundle = random_kaehler_curvature(1, 2).unwrap();
        let b = bochner_from_curvature(&bundle).unwrap();
        assert!(b.norm() > 1e-6 * bundle.r.norm());
    }

    #[test]
    fn fubini_study_curvature_violates_trace_identity() {
        let chart = catalog_chart(&CatalogName::FubiniStudy, 2).unwrap();
        let bundle = CurvatureBundle::at(&chart, &ChartPoint::origin(2)).unwrap();
        let as_bochner = BochnerTensor { frame: bundle.frame.clone(), tensor: bundle.r.clone(), curvature_scale: None };
        let x = Vector::from_vec(vec![0.3, -0.5, 0.2, 0.7]);
        assert!(trace_identity_residual(&as_bochner, &x) > 0.01);
    }

    #[test]
    fn flatness_classification_of_catalog_charts() {
        let origin = ChartPoint::origin(2);
        let flat = |name: CatalogName| {
            let chart = catalog_chart(&name, 2).unwrap();
            let b = bochner_from_curvature(&CurvatureBundle::at(&chart, &origin).unwrap()).unwrap();
            is_bochner_flat(&b, FLATNESS_TOL)
        };
        assert!(flat(CatalogName::Flat));
        assert!(flat(CatalogName::FubiniStudy));
        assert!(!flat(CatalogName::ProductCp1Cp1));
    }
}

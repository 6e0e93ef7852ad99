//! Real tensor algebra on a single tangent space of real dimension 2n.
//!
//! Everything here is expressed in a working basis of `T_pM` that need not be
//! orthonormal: the metric and complex structure of that basis are carried by
//! a [`HermitianFrame`], and contractions raise indices with `g⁻¹`.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::homothety::HolomorphicLinearMap;
use crate::{Error, Matrix, Result, Vector};

const FRAME_TOL: f64 = 1e-12;

/// Largest absolute entry of a matrix.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// The standard complex structure `[[0, -I], [I, 0]]` on `R^{2n}` with basis
/// ordered `(x¹..xⁿ, y¹..yⁿ)`, so that `J ∂/∂xᵅ = ∂/∂yᵅ`.
pub fn standard_complex_structure(n: usize) -> Matrix {
    let mut j = Matrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        j[(n + a, a)] = 1.0;
        j[(a, n + a)] = -1.0;
    }
    j
}

/// Metric and complex structure of a working basis of `T_pM`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianFrame {
    n: usize,
    g: Matrix,
    j: Matrix,
    g_inv: Matrix,
}

impl HermitianFrame {
    /// Validates `J² = -I`, `JᵀgJ = g`, symmetry and positive definiteness.
    pub fn new(n: usize, g: Matrix, j: Matrix) -> Result<Self> {
        let dim = 2 * n;
        if n == 0 {
            return Err(Error::FrameInvalid("complex dimension must be positive".into()));
        }
        for m in [&g, &j] {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: m.nrows().max(m.ncols()) });
            }
        }
        let scale = max_abs(&g).max(1.0);
        let asym = max_abs(&(&g - g.transpose()));
        if asym > FRAME_TOL * scale {
            return Err(Error::FrameInvalid(format!("metric not symmetric (residual {asym:e})")));
        }
        let jj = max_abs(&(&j * &j + Matrix::identity(dim, dim)));
        if jj > FRAME_TOL * max_abs(&j).max(1.0).powi(2) {
            return Err(Error::FrameInvalid(format!("J² ≠ -I (residual {jj:e})")));
        }
        let compat = max_abs(&(j.transpose() * &g * &j - &g));
        if compat > FRAME_TOL * scale * max_abs(&j).max(1.0).powi(2) {
            return Err(Error::FrameInvalid(format!("metric not J-invariant (residual {compat:e})")));
        }
        let g = (&g + g.transpose()) * 0.5;
        let chol = Cholesky::new(g.clone())
            .ok_or_else(|| Error::FrameInvalid("metric not positive definite".into()))?;
        let g_inv = chol.inverse();
        let g_inv = (&g_inv + g_inv.transpose()) * 0.5;
        Ok(Self { n, g, j, g_inv })
    }

    /// Frame with the standard complex structure.
    pub fn standard(n: usize, g: Matrix) -> Result<Self> {
        Self::new(n, g, standard_complex_structure(n))
    }

    /// Orthonormal frame with the standard complex structure.
    pub fn euclidean(n: usize) -> Self {
        Self::standard(n, Matrix::identity(2 * n, 2 * n)).expect("identity frame is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn metric(&self) -> &Matrix {
        &self.g
    }

    pub fn metric_inverse(&self) -> &Matrix {
        &self.g_inv
    }

    pub fn complex_structure(&self) -> &Matrix {
        &self.j
    }

    pub fn metric_form(&self) -> SymBilinear {
        SymBilinear { n: self.n, m: self.g.clone() }
    }

    pub fn inner(&self, u: &Vector, v: &Vector) -> f64 {
        u.dot(&(&self.g * v))
    }

    pub fn norm(&self, v: &Vector) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    pub fn apply_j(&self, v: &Vector) -> Vector {
        &self.j * v
    }

    /// Rescales `v` to unit length; `None` for the zero vector.
    pub fn normalize(&self, v: &Vector) -> Option<Vector> {
        let len = self.norm(v);
        (len > 0.0).then(|| v / len)
    }

    /// Gram–Schmidt with J-pairing: each accepted unit vector `e` brings its
    /// partner `Je`, and both are projected out of later candidates. Returns
    /// `e₁..eₙ`; candidates are taken from `seeds` first, then from the
    /// coordinate basis until the frame is complete.
    pub fn j_adapted_basis<I>(&self, seeds: I) -> Vec<Vector>
    where
        I: IntoIterator<Item = Vector>,
    {
        let dim = self.dim();
        let coords = (0..dim).map(|a| Vector::from_fn(dim, |i, _| if i == a { 1.0 } else { 0.0 }));
        let mut accepted: Vec<Vector> = Vec::with_capacity(dim);
        let mut es = Vec::with_capacity(self.n);
        for cand in seeds.into_iter().chain(coords) {
            if es.len() == self.n {
                break;
            }
            let start = self.norm(&cand);
            if start == 0.0 {
                continue;
            }
            let mut v = cand;
            // two passes keep orthogonality at machine precision
            for _ in 0..2 {
                for b in &accepted {
                    let c = self.inner(&v, b);
                    v -= b * c;
                }
            }
            let len = self.norm(&v);
            if len <= 1e-8 * start {
                continue;
            }
            let e = v / len;
            let je = self.apply_j(&e);
            accepted.push(e.clone());
            accepted.push(je);
            es.push(e);
        }
        es
    }

    /// `[e₁..eₙ, Je₁..Jeₙ]` from the output of [`Self::j_adapted_basis`].
    pub fn complete_j_pairs(&self, es: &[Vector]) -> Vec<Vector> {
        es.iter().cloned().chain(es.iter().map(|e| self.apply_j(e))).collect()
    }

    /// Matrix whose columns are the full J-adapted orthonormal basis built
    /// from the coordinate vectors. Pulling tensors back along it expresses
    /// them in an orthonormal frame with the standard complex structure.
    pub fn orthonormal_change_of_basis(&self) -> Matrix {
        let basis = self.complete_j_pairs(&self.j_adapted_basis(std::iter::empty()));
        Matrix::from_columns(&basis)
    }
}

/// Dense covariant 4-tensor on `R^{2n}`, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        let d = 2 * n;
        Self { n, data: vec![0.0; d * d * d * d] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let d = 2 * n;
        let mut data = Vec::with_capacity(d * d * d * d);
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        data.push(f(a, b, c, e));
                    }
                }
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn offset(&self, [a, b, c, e]: [usize; 4]) -> usize {
        let d = self.dim();
        ((a * d + b) * d + c) * d + e
    }

    /// Max-abs entry norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// Nested `[a][b][c][d]` arrays for serialization.
    pub fn to_nested(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        let d = self.dim();
        (0..d)
            .map(|a| {
                (0..d)
                    .map(|b| (0..d).map(|c| (0..d).map(|e| self[[a, b, c, e]]).collect()).collect())
                    .collect()
            })
            .collect()
    }

    /// `w ↦ T(x, y, z, w)` as a covector.
    pub fn covector(&self, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        let d = self.dim();
        let mut out = Vector::zeros(d);
        for a in 0..d {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..d {
                let xy = x[a] * y[b];
                if xy == 0.0 {
                    continue;
                }
                for c in 0..d {
                    let xyz = xy * z[c];
                    if xyz == 0.0 {
                        continue;
                    }
                    let base = self.offset([a, b, c, 0]);
                    for e in 0..d {
                        out[e] += xyz * self.data[base + e];
                    }
                }
            }
        }
        out
    }

    pub fn value(&self, x: &Vector, y: &Vector, z: &Vector, w: &Vector) -> f64 {
        self.covector(x, y, z).dot(w)
    }

    /// The endomorphism `z ↦ T(x, y)z`, with the last slot raised by `g⁻¹`.
    pub fn endomorphism(&self, frame: &HermitianFrame, x: &Vector, y: &Vector) -> Endomorphism {
        let d = self.dim();
        let mut lowered = Matrix::zeros(d, d);
        for c in 0..d {
            let zc = Vector::from_fn(d, |i, _| if i == c { 1.0 } else { 0.0 });
            lowered.set_column(c, &self.covector(x, y, &zc));
        }
        Endomorphism { n: self.n, m: frame.metric_inverse() * lowered }
    }

    /// Applies `m` to the chosen slot: `T'(.., v, ..) = T(.., m v, ..)`.
    fn transform_slot(&self, slot: usize, m: &Matrix) -> Self {
        let d = self.dim();
        let mut out = Self::zeros(self.n);
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let idx = [a, b, c, e];
                        let mut acc = 0.0;
                        for k in 0..d {
                            let mk = m[(k, idx[slot])];
                            if mk != 0.0 {
                                let mut src = idx;
                                src[slot] = k;
                                acc += mk * self[src];
                            }
                        }
                        out[idx] = acc;
                    }
                }
            }
        }
        out
    }

    /// `(Fᵀ T)(x, y, z, w) = T(Fx, Fy, Fz, Fw)`.
    pub fn pullback(&self, f: &Matrix) -> Self {
        (0..4).fold(self.clone(), |t, slot| t.transform_slot(slot, f))
    }
}

impl Index<[usize; 4]> for Tensor4 {
    type Output = f64;

    fn index(&self, idx: [usize; 4]) -> &f64 {
        &self.data[self.offset(idx)]
    }
}

impl IndexMut<[usize; 4]> for Tensor4 {
    fn index_mut(&mut self, idx: [usize; 4]) -> &mut f64 {
        let o = self.offset(idx);
        &mut self.data[o]
    }
}

impl Add for &Tensor4 {
    type Output = Tensor4;

    fn add(self, rhs: &Tensor4) -> Tensor4 {
        assert_eq!(self.n, rhs.n, "tensor dimensions differ");
        Tensor4 { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Tensor4 {
    type Output = Tensor4;

    fn sub(self, rhs: &Tensor4) -> Tensor4 {
        assert_eq!(self.n, rhs.n, "tensor dimensions differ");
        Tensor4 { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &Tensor4 {
    type Output = Tensor4;

    fn neg(self) -> Tensor4 {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &Tensor4 {
    type Output = Tensor4;

    fn mul(self, s: f64) -> Tensor4 {
        self.scaled(s)
    }
}

/// Symmetric bilinear form (Ricci tensor of type (0,2), metrics, pullbacks).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymBilinear {
    pub n: usize,
    pub m: Matrix,
}

impl SymBilinear {
    pub fn new(n: usize, m: Matrix) -> Result<Self> {
        if m.nrows() != 2 * n || m.ncols() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: m.nrows() });
        }
        let asym = max_abs(&(&m - m.transpose()));
        if asym > FRAME_TOL * max_abs(&m).max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self { n, m })
    }

    pub fn eval(&self, u: &Vector, v: &Vector) -> f64 {
        u.dot(&(&self.m * v))
    }

    pub fn norm(&self) -> f64 {
        max_abs(&self.m)
    }
}

/// Linear map of the tangent space (Ricci of type (1,1), `B(x,Jy)∘J`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Endomorphism {
    pub n: usize,
    pub m: Matrix,
}

impl Endomorphism {
    pub fn new(n: usize, m: Matrix) -> Result<Self> {
        if m.nrows() != 2 * n || m.ncols() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: m.nrows() });
        }
        Ok(Self { n, m })
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.m * v
    }

    pub fn norm(&self) -> f64 {
        max_abs(&self.m)
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    /// `max |g(Av, w) - g(v, Aw)|` over basis vectors, i.e. `|gA - Aᵀg|∞`.
    pub fn g_symmetry_residual(&self, frame: &HermitianFrame) -> f64 {
        let ga = frame.metric() * &self.m;
        max_abs(&(&ga - ga.transpose()))
    }

    /// `|AJ - JA|∞`.
    pub fn j_commutator_residual(&self, frame: &HermitianFrame) -> f64 {
        let j = frame.complex_structure();
        max_abs(&(&self.m * j - j * &self.m))
    }
}

/// Relative deviations of a 4-tensor from each algebraic curvature symmetry.
///
/// Each entry is the max-abs distance from `T` to its projection onto the
/// symmetric (or skew) part, divided by `|T|∞`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymmetryResiduals {
    pub skew_first_pair: f64,
    pub skew_second_pair: f64,
    pub pair_symmetry: f64,
    pub first_bianchi: f64,
    pub j_invariance_last_pair: f64,
    pub j_invariance_first_pair: f64,
}

impl SymmetryResiduals {
    pub fn max(&self) -> f64 {
        [
            self.skew_first_pair,
            self.skew_second_pair,
            self.pair_symmetry,
            self.first_bianchi,
            self.j_invariance_last_pair,
            self.j_invariance_first_pair,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn curvature_symmetry_residuals(t: &Tensor4, frame: &HermitianFrame) -> SymmetryResiduals {
    let scale = t.norm();
    if scale == 0.0 {
        return SymmetryResiduals::default();
    }
    let d = t.dim();
    let mut r = SymmetryResiduals::default();
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    let v = t[[a, b, c, e]];
                    r.skew_first_pair = r.skew_first_pair.max((v + t[[b, a, c, e]]).abs() / 2.0);
                    r.skew_second_pair = r.skew_second_pair.max((v + t[[a, b, e, c]]).abs() / 2.0);
                    r.pair_symmetry = r.pair_symmetry.max((v - t[[c, e, a, b]]).abs() / 2.0);
                    let cyc = v + t[[b, c, a, e]] + t[[c, a, b, e]];
                    r.first_bianchi = r.first_bianchi.max(cyc.abs() / 3.0);
                }
            }
        }
    }
    let j = frame.complex_structure();
    let last = t.transform_slot(2, j).transform_slot(3, j);
    let first = t.transform_slot(0, j).transform_slot(1, j);
    r.j_invariance_last_pair = (&last - t).norm() / 2.0;
    r.j_invariance_first_pair = (&first - t).norm() / 2.0;
    r.skew_first_pair /= scale;
    r.skew_second_pair /= scale;
    r.pair_symmetry /= scale;
    r.first_bianchi /= scale;
    r.j_invariance_last_pair /= scale;
    r.j_invariance_first_pair /= scale;
    r
}

/// Ricci contraction `S(y,z) = Σₐ R(Eₐ, y, z, Eₐ)` over a g-orthonormal basis,
/// computed as `g^{ad} R_{abcd}`.
pub fn contract_ricci(r: &Tensor4, frame: &HermitianFrame) -> Result<SymBilinear> {
    check_dim(frame, r.n())?;
    let d = frame.dim();
    let gi = frame.metric_inverse();
    let mut s = Matrix::zeros(d, d);
    for b in 0..d {
        for c in 0..d {
            let mut acc = 0.0;
            for a in 0..d {
                for e in 0..d {
                    acc += gi[(a, e)] * r[[a, b, c, e]];
                }
            }
            s[(b, c)] = acc;
        }
    }
    let s = (&s + s.transpose()) * 0.5;
    Ok(SymBilinear { n: frame.n(), m: s })
}

/// Trace of `S` against `g⁻¹`.
pub fn scalar_curvature(s: &SymBilinear, frame: &HermitianFrame) -> Result<f64> {
    check_dim(frame, s.n)?;
    Ok(frame.metric_inverse().component_mul(&s.m).sum())
}

/// Raises the second index of a symmetric form: `g(Sx, w) = S(x, w)`.
pub fn raise_index(s: &SymBilinear, frame: &HermitianFrame) -> Result<Endomorphism> {
    check_dim(frame, s.n)?;
    Ok(Endomorphism { n: s.n, m: frame.metric_inverse() * &s.m })
}

/// `(F*T)(x,y,z,w) = T(Fx, Fy, Fz, Fw)`.
pub fn pullback4(target: &Tensor4, map: &HolomorphicLinearMap) -> Result<Tensor4> {
    let f = map.matrix();
    if target.dim() != f.nrows() {
        return Err(Error::DimensionMismatch { expected: f.nrows(), found: target.dim() });
    }
    Ok(target.pullback(f))
}

/// `(F*g)(u, v) = g(Fu, Fv)`.
pub fn pullback_metric(target: &SymBilinear, map: &HolomorphicLinearMap) -> Result<SymBilinear> {
    let f = map.matrix();
    if target.m.nrows() != f.nrows() {
        return Err(Error::DimensionMismatch { expected: f.nrows(), found: target.m.nrows() });
    }
    let m = f.transpose() * &target.m * f;
    let m = (&m + m.transpose()) * 0.5;
    Ok(SymBilinear { n: target.n, m })
}

fn check_dim(frame: &HermitianFrame, n: usize) -> Result<()> {
    if frame.n() != n {
        return Err(Error::DimensionMismatch { expected: frame.dim(), found: 2 * n });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_structure_squares_to_minus_identity() {
        for n in 1..4 {
            let j = standard_complex_structure(n);
            let jj = &j * &j + Matrix::identity(2 * n, 2 * n);
            assert_eq!(max_abs(&jj), 0.0);
        }
    }

    #[test]
    fn frame_rejects_non_invariant_metric() {
        let g = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 2.0, 1.0, 1.0]));
        assert!(matches!(HermitianFrame::standard(2, g), Err(Error::FrameInvalid(_))));
    }

    #[test]
    fn frame_rejects_indefinite_metric() {
        let g = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -1.0, 1.0, -1.0]));
        assert!(matches!(HermitianFrame::standard(2, g), Err(Error::FrameInvalid(_))));
    }

    #[test]
    fn zero_tensor_has_zero_residuals_and_ricci() {
        let f = HermitianFrame::euclidean(2);
        let t = Tensor4::zeros(2);
        assert_eq!(curvature_symmetry_residuals(&t, &f), SymmetryResiduals::default());
        let s = contract_ricci(&t, &f).unwrap();
        assert_eq!(s.norm(), 0.0);
        assert_eq!(scalar_curvature(&s, &f).unwrap(), 0.0);
    }

    #[test]
    fn single_entry_tensor_is_maximally_asymmetric() {
        let f = HermitianFrame::euclidean(2);
        let mut t = Tensor4::zeros(2);
        t[[0, 0, 0, 0]] = 1.0;
        let r = curvature_symmetry_residuals(&t, &f);
        assert_eq!(r.skew_first_pair, 1.0);
        assert_eq!(r.skew_second_pair, 1.0);
    }

    #[test]
    fn scalar_curvature_of_metric_is_dimension() {
        let f = HermitianFrame::euclidean(2);
        let s = f.metric_form();
        assert!((scalar_curvature(&s, &f).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn j_adapted_basis_is_orthonormal() {
        let g = Matrix::from_row_slice(4, 4, &[3.0, 0.5, 0.0, 0.2, 0.5, 2.0, -0.2, 0.0, 0.0, -0.2, 3.0, 0.5, 0.2, 0.0, 0.5, 2.0]);
        let f = HermitianFrame::standard(2, g).unwrap();
        let basis = f.complete_j_pairs(&f.j_adapted_basis(std::iter::empty()));
        for (i, u) in basis.iter().enumerate() {
            for (k, v) in basis.iter().enumerate() {
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((f.inner(u, v) - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn pullback_by_scalar_multiple_scales_quartically() {
        let t = Tensor4::from_fn(2, |a, b, c, d| (a + 2 * b) as f64 - (c * d) as f64);
        let f = Matrix::identity(4, 4) * 3.0;
        let p = t.pullback(&f);
        assert!((&p - &t.scaled(81.0)).norm() < 1e-12);
    }
}

//! Homothety certificates for Bochner-preserving holomorphic linear maps in
//! complex dimension two.
//!
//! Given the Bochner tensors at `p` and `q = f(p)` and the differential
//! `F = f_*` at `p`, [`homothety_certificate`] checks that `F` is J-linear and
//! preserves the Bochner tensor, then runs the eigenvalue argument: pick
//! `x, y` with `B(x,Jy) ≠ 0`, diagonalize `A = B(x,Jy)∘J` in a J-adapted
//! orthonormal basis `{e₁, e₂, Je₁, Je₂}` with eigenvalues `λ₁ = -λ₂ ≠ 0`,
//! and show that `h = F*g_q` satisfies `h(e₁,e₁) = h(e₂,e₂)`,
//! `h(e₁,e₂) = 0`, hence `h = μ g_p`.
//!
//! "Preserves B" means `F*B_q = B_p` for the (0,4) tensors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bochner::{is_bochner_flat, BochnerTensor, CurvatureBundle};
use crate::chart::{ChartPoint, KaehlerChart};
use crate::eigen::{j_adapted_eigenbasis, metric_roots, symmetric_jacobi};
use crate::rng::{random_unit_vector, seeded_rng};
use crate::tensor::{max_abs, pullback4, pullback_metric, Endomorphism, HermitianFrame};
use crate::{bochner, Error, Matrix, Result, Vector};

/// Relative J-linearity tolerance `|FJ - JF| ≤ 1e-10 |F|`.
pub const J_LINEARITY_TOL: f64 = 1e-10;
/// Certificate tolerance for closed-form and polynomial data.
pub const EXACT_CERTIFICATE_TOL: f64 = 1e-7;
/// Certificate tolerance for finite-difference data.
pub const NUMERIC_CERTIFICATE_TOL: f64 = 1e-3;

const PROBE_FLATNESS_TOL: f64 = 1e-8;
const PROBE_THRESHOLD: f64 = 1e-6;
const PROBE_CANDIDATES: usize = 32;
const PROBE_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

/// Differential of a holomorphic map at a point: a linear map from the source
/// tangent space to the target one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolomorphicLinearMap {
    source: HermitianFrame,
    target: HermitianFrame,
    f: Matrix,
}

impl HolomorphicLinearMap {
    /// Checks dimensions, invertibility and J-linearity.
    pub fn new(source: HermitianFrame, target: HermitianFrame, f: Matrix) -> Result<Self> {
        let map = Self::unchecked(source, target, f)?;
        let res = map.j_linearity_residual();
        if res > J_LINEARITY_TOL {
            return Err(Error::NotJLinear(res));
        }
        Ok(map)
    }

    /// Checks dimensions and invertibility only; used where a failed
    /// J-linearity check is a reportable outcome rather than an error.
    pub fn unchecked(source: HermitianFrame, target: HermitianFrame, f: Matrix) -> Result<Self> {
        let d = source.dim();
        if target.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: target.dim() });
        }
        if f.nrows() != d || f.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: f.nrows().max(f.ncols()) });
        }
        let det = f.determinant();
        if !det.is_finite() || det.abs() <= 1e-12 * max_abs(&f).powi(d as i32) {
            return Err(Error::SingularMap);
        }
        Ok(Self { source, target, f })
    }

    pub fn identity(frame: &HermitianFrame) -> Self {
        let d = frame.dim();
        Self::new(frame.clone(), frame.clone(), Matrix::identity(d, d)).expect("identity is holomorphic")
    }

    pub fn matrix(&self) -> &Matrix {
        &self.f
    }

    pub fn source(&self) -> &HermitianFrame {
        &self.source
    }

    pub fn target(&self) -> &HermitianFrame {
        &self.target
    }

    pub fn inverse(&self) -> Self {
        let inv = self.f.clone().try_inverse().expect("validated invertible");
        Self { source: self.target.clone(), target: self.source.clone(), f: inv }
    }

    /// `|F J_source - J_target F|∞ / |F|∞`.
    pub fn j_linearity_residual(&self) -> f64 {
        let lhs = &self.f * self.source.complex_structure();
        let rhs = self.target.complex_structure() * &self.f;
        max_abs(&(lhs - rhs)) / max_abs(&self.f)
    }

    /// `|F*g_target - (tr/2n) g_source|∞`, zero exactly for conformal maps.
    pub fn conformality_defect(&self) -> f64 {
        let h = self.f.transpose() * self.target.metric() * &self.f;
        let mu = (self.source.metric_inverse() * &h).trace() / self.source.dim() as f64;
        max_abs(&(h - self.source.metric() * mu))
    }
}

/// Frame and Bochner tensor at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointData {
    pub frame: HermitianFrame,
    pub bochner: BochnerTensor,
}

impl PointData {
    pub fn new(bochner: BochnerTensor) -> Self {
        Self { frame: bochner.frame.clone(), bochner }
    }

    pub fn from_bundle(bundle: &CurvatureBundle) -> Result<Self> {
        Ok(Self::new(bochner::bochner_from_curvature(bundle)?))
    }

    pub fn at(chart: &KaehlerChart, p: &ChartPoint) -> Result<Self> {
        Self::from_bundle(&CurvatureBundle::at(chart, p)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Homothety,
    BochnerFlat,
    NotPreserving,
    NotJLinear,
    ProbeSearchFailed,
    InternalInconsistency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomothetyReport {
    pub verdict: Verdict,
    /// Conformal factor; present iff the verdict is `Homothety`.
    pub mu: Option<f64>,
    /// `(λ₁, λ₂)`, `λ₁ ≥ λ₂`.
    pub lambda: Option<[f64; 2]>,
    pub probe: Option<[Vec<f64>; 2]>,
    pub basis: Option<[Vec<f64>; 2]>,
    pub tolerance: f64,
    pub residuals: BTreeMap<String, f64>,
}

impl HomothetyReport {
    fn new(tolerance: f64) -> Self {
        Self {
            verdict: Verdict::InternalInconsistency,
            mu: None,
            lambda: None,
            probe: None,
            basis: None,
            tolerance,
            residuals: BTreeMap::new(),
        }
    }

    fn finish(mut self, verdict: Verdict) -> Self {
        self.verdict = verdict;
        if verdict != Verdict::Homothety {
            self.mu = None;
        }
        self
    }
}

fn check_maps(p: &PointData, q: &PointData, map: &HolomorphicLinearMap) -> Result<()> {
    let d = map.matrix().nrows();
    for dim in [p.frame.dim(), q.frame.dim(), p.bochner.tensor.dim(), q.bochner.tensor.dim()] {
        if dim != d {
            return Err(Error::DimensionMismatch { expected: d, found: dim });
        }
    }
    Ok(())
}

/// `|F*B_q - B_p|∞ / max(|B_p|∞, |B_q|∞ |F|∞⁴)`.
pub fn preservation_residual(p: &PointData, q: &PointData, map: &HolomorphicLinearMap) -> Result<f64> {
    check_maps(p, q, map)?;
    let jres = map.j_linearity_residual();
    if jres > J_LINEARITY_TOL {
        return Err(Error::NotJLinear(jres));
    }
    let pulled = pullback4(&q.bochner.tensor, map)?;
    let scale = p.bochner.norm().max(q.bochner.norm() * max_abs(map.matrix()).powi(4));
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((&pulled - &p.bochner.tensor).norm() / scale)
}

/// `A = B(x,Jy)∘J`, i.e. `z ↦ B(x,Jy)Jz`.
pub fn probe_endomorphism(b: &BochnerTensor, x: &Vector, y: &Vector) -> Endomorphism {
    let jy = b.frame.apply_j(y);
    let bxy = b.tensor.endomorphism(&b.frame, x, &jy);
    Endomorphism { n: bxy.n, m: bxy.m * b.frame.complex_structure() }
}

struct SpectralNorm {
    root: Matrix,
    inv_root: Matrix,
}

impl SpectralNorm {
    fn new(frame: &HermitianFrame) -> Result<Self> {
        let (root, inv_root) = metric_roots(frame.metric())?;
        Ok(Self { root, inv_root })
    }

    /// g-operator norm of a g-symmetric endomorphism.
    fn of(&self, a: &Endomorphism) -> Result<f64> {
        let m = &self.root * &a.m * &self.inv_root;
        let (vals, _) = symmetric_jacobi(&((&m + m.transpose()) * 0.5))?;
        Ok(vals.into_iter().fold(0.0, |acc, v| acc.max(v.abs())))
    }
}

/// Unit vectors `(x, y)` maximizing the operator norm of `B(x,Jy)` among the
/// normalized coordinate vectors and 32 fixed pseudo-random unit vectors.
pub fn select_probe_pair(p: &PointData) -> Result<(Vector, Vector)> {
    let b = &p.bochner;
    if is_bochner_flat(b, PROBE_FLATNESS_TOL) {
        return Err(Error::BochnerFlat);
    }
    let frame = &p.frame;
    let d = frame.dim();
    let mut rng = seeded_rng(PROBE_SEED);
    let candidates: Vec<Vector> = (0..d)
        .map(|a| frame.normalize(&Vector::from_fn(d, |i, _| if i == a { 1.0 } else { 0.0 })).expect("basis vector"))
        .chain((0..PROBE_CANDIDATES).map(|_| random_unit_vector(frame, &mut rng)))
        .collect();
    let norm = SpectralNorm::new(frame)?;
    let mut best: Option<(f64, usize, usize)> = None;
    for (i, x) in candidates.iter().enumerate() {
        for (k, y) in candidates.iter().enumerate() {
            // J is an isometry, so B(x,Jy)∘J has the operator norm of B(x,Jy)
            let v = norm.of(&probe_endomorphism(b, x, y))?;
            if best.is_none_or(|(bv, _, _)| v > bv) {
                best = Some((v, i, k));
            }
        }
    }
    let (value, i, k) = best.expect("candidate set is nonempty");
    let threshold = PROBE_THRESHOLD * b.norm();
    if value < threshold {
        return Err(Error::ProbeSearchFailed { best: value, threshold });
    }
    Ok((candidates[i].clone(), candidates[k].clone()))
}

fn ensure_dimension_two(n: usize) -> Result<()> {
    if n != 2 {
        return Err(Error::UnsupportedDimension { what: "homothety certificate".into(), n });
    }
    Ok(())
}

/// Runs the certificate; see the module documentation for the steps.
pub fn homothety_certificate(
    p: &PointData,
    q: &PointData,
    map: &HolomorphicLinearMap,
    tol: f64,
) -> Result<HomothetyReport> {
    ensure_dimension_two(p.frame.n())?;
    check_maps(p, q, map)?;
    let mut report = HomothetyReport::new(tol);

    let jres = map.j_linearity_residual();
    report.residuals.insert("j_linearity".into(), jres);
    if jres > J_LINEARITY_TOL {
        return Ok(report.finish(Verdict::NotJLinear));
    }

    report.residuals.insert("bochner_norm_p".into(), p.bochner.norm());
    if is_bochner_flat(&p.bochner, tol) {
        return Ok(report.finish(Verdict::BochnerFlat));
    }

    let pres = preservation_residual(p, q, map)?;
    report.residuals.insert("preservation".into(), pres);
    if pres > tol {
        return Ok(report.finish(Verdict::NotPreserving));
    }

    let (x, y) = match select_probe_pair(p) {
        Ok(pair) => pair,
        Err(Error::ProbeSearchFailed { best, .. }) => {
            report.residuals.insert("probe_norm".into(), best);
            return Ok(report.finish(Verdict::ProbeSearchFailed));
        }
        Err(Error::BochnerFlat) => return Ok(report.finish(Verdict::BochnerFlat)),
        Err(e) => return Err(e),
    };
    report.probe = Some([x.as_slice().to_vec(), y.as_slice().to_vec()]);

    let frame = &p.frame;
    let a = probe_endomorphism(&p.bochner, &x, &y);
    let a_norm = a.norm();
    report.residuals.insert("probe_norm".into(), a_norm);
    report.residuals.insert("probe_g_symmetry".into(), a.g_symmetry_residual(frame) / a_norm);
    report.residuals.insert("probe_j_commutator".into(), a.j_commutator_residual(frame) / a_norm);
    let eig = match j_adapted_eigenbasis(&a, frame) {
        Ok(e) => e,
        Err(Error::NotSymmetric(_) | Error::NotJCommuting(_)) => {
            return Ok(report.finish(Verdict::InternalInconsistency));
        }
        Err(e) => return Err(e),
    };
    let (l1, l2) = (eig.values[0], eig.values[1]);
    let (e1, e2) = (&eig.vectors[0], &eig.vectors[1]);
    report.lambda = Some([l1, l2]);
    report.basis = Some([e1.as_slice().to_vec(), e2.as_slice().to_vec()]);

    let mut consistent = true;
    let lambda_sum = (l1 + l2).abs() / a_norm;
    report.residuals.insert("lambda_sum".into(), lambda_sum);
    consistent &= lambda_sum <= tol;
    consistent &= l1.abs().max(l2.abs()) > tol * a_norm;

    let h = pullback_metric(&q.frame.metric_form(), map)?;
    let h_norm = h.norm();
    let equal_diag = (h.eval(e1, e1) - h.eval(e2, e2)).abs() / h_norm;
    let off_diag = h.eval(e1, e2).abs() / h_norm;
    let off_diag_argument = (2.0 * l1 * h.eval(e1, e2)).abs() / (a_norm * h_norm);
    let mu = (frame.metric_inverse() * &h.m).trace() / frame.dim() as f64;
    let conformal = max_abs(&(&h.m - frame.metric() * mu)) / h_norm;
    report.residuals.insert("diagonal_equality".into(), equal_diag);
    report.residuals.insert("off_diagonal".into(), off_diag);
    report.residuals.insert("off_diagonal_argument".into(), off_diag_argument);
    report.residuals.insert("conformality".into(), conformal);
    consistent &= equal_diag <= tol && off_diag <= tol && off_diag_argument <= tol && conformal <= tol;
    consistent &= mu > 0.0;

    report.mu = Some(mu);
    Ok(report.finish(if consistent { Verdict::Homothety } else { Verdict::InternalInconsistency }))
}

/// Max of `|λ₁ + λ₂| / |A|∞` over random unit probes `(x, y)` for which
/// `|A|∞ ≥ 1e-6 |B|∞`.
pub fn eigen_sum_check(b: &BochnerTensor, trials: usize, seed: u64) -> Result<f64> {
    ensure_dimension_two(b.frame.n())?;
    if is_bochner_flat(b, PROBE_FLATNESS_TOL) {
        return Err(Error::BochnerFlat);
    }
    let mut rng = seeded_rng(seed);
    let threshold = PROBE_THRESHOLD * b.norm();
    let mut worst: Option<f64> = None;
    for _ in 0..trials {
        let x = random_unit_vector(&b.frame, &mut rng);
        let y = random_unit_vector(&b.frame, &mut rng);
        let a = probe_endomorphism(b, &x, &y);
        if a.norm() < threshold {
            continue;
        }
        let eig = j_adapted_eigenbasis(&a, &b.frame)?;
        let r = (eig.values[0] + eig.values[1]).abs() / a.norm();
        worst = Some(worst.map_or(r, |w| w.max(r)));
    }
    worst.ok_or(Error::ProbeSearchFailed { best: 0.0, threshold })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstancyReport {
    pub reports: Vec<HomothetyReport>,
    pub mus: Vec<Option<f64>>,
    pub constant: bool,
    /// First tuple whose certificate was not a homothety.
    pub failing_index: Option<usize>,
    pub spread: Option<f64>,
}

/// Certifies every tuple; `constant` iff all are homotheties and
/// `max μ - min μ ≤ tol · mean μ`.
pub fn multi_point_constancy(
    points: &[(PointData, PointData, HolomorphicLinearMap)],
    tol: f64,
) -> Result<ConstancyReport> {
    let reports = points
        .iter()
        .map(|(p, q, f)| homothety_certificate(p, q, f, tol))
        .collect::<Result<Vec<_>>>()?;
    let mus: Vec<Option<f64>> = reports.iter().map(|r| r.mu).collect();
    let failing_index = reports.iter().position(|r| r.verdict != Verdict::Homothety);
    let (constant, spread) = match failing_index {
        Some(_) => (false, None),
        None if mus.is_empty() => (false, None),
        None => {
            let vals: Vec<f64> = mus.iter().flatten().copied().collect();
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            (max - min <= tol * mean, Some(max - min))
        }
    };
    Ok(ConstancyReport { reports, mus, constant, failing_index, spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{catalog_chart, CatalogName};
    use crate::tensor::standard_complex_structure;

    fn product_fixture() -> PointData {
        let chart = catalog_chart(&CatalogName::ProductCp1Cp1, 2).unwrap();
        PointData::at(&chart, &ChartPoint::origin(2)).unwrap()
    }

    fn map(p: &PointData, f: Matrix) -> HolomorphicLinearMap {
        HolomorphicLinearMap::unchecked(p.frame.clone(), p.frame.clone(), f).unwrap()
    }

    #[test]
    fn identity_preserves() {
        let p = product_fixture();
        assert_eq!(preservation_residual(&p, &p, &map(&p, Matrix::identity(4, 4))).unwrap(), 0.0);
    }

    #[test]
    fn doubling_does_not_preserve() {
        let p = product_fixture();
        let r = preservation_residual(&p, &p, &map(&p, Matrix::identity(4, 4) * 2.0)).unwrap();
        assert!((r - 15.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn non_j_linear_map_is_reported() {
        let p = product_fixture();
        let f = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 1.0, 1.0, 1.0]));
        assert!(matches!(preservation_residual(&p, &p, &map(&p, f.clone())), Err(Error::NotJLinear(_))));
        let report = homothety_certificate(&p, &p, &map(&p, f), EXACT_CERTIFICATE_TOL).unwrap();
        assert_eq!(report.verdict, Verdict::NotJLinear);
        assert!(report.mu.is_none());
    }

    #[test]
    fn singular_map_rejected() {
        let p = product_fixture();
        let f = Matrix::zeros(4, 4);
        assert_eq!(HolomorphicLinearMap::unchecked(p.frame.clone(), p.frame.clone(), f), Err(Error::SingularMap));
    }

    #[test]
    fn flat_data_has_no_probe() {
        let chart = catalog_chart(&CatalogName::Flat, 2).unwrap();
        let p = PointData::at(&chart, &ChartPoint::origin(2)).unwrap();
        assert_eq!(select_probe_pair(&p), Err(Error::BochnerFlat));
        assert_eq!(eigen_sum_check(&p.bochner, 10, 0), Err(Error::BochnerFlat));
        let report = homothety_certificate(&p, &p, &HolomorphicLinearMap::identity(&p.frame), 1e-7).unwrap();
        assert_eq!(report.verdict, Verdict::BochnerFlat);
    }

    #[test]
    fn certificate_requires_dimension_two() {
        let chart = catalog_chart(&CatalogName::RandomPoly { seed: 3, degree: 4 }, 3).unwrap();
        let p = PointData::at(&chart, &ChartPoint::origin(3)).unwrap();
        let err = homothety_certificate(&p, &p, &HolomorphicLinearMap::identity(&p.frame), 1e-7).unwrap_err();
        assert!(matches!(err, Error::UnsupportedDimension { n: 3, .. }));
    }

    #[test]
    fn j_map_certifies_with_unit_factor() {
        let p = product_fixture();
        let report = homothety_certificate(&p, &p, &map(&p, standard_complex_structure(2)), 1e-7).unwrap();
        assert_eq!(report.verdict, Verdict::Homothety);
        assert!((report.mu.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn probe_is_deterministic() {
        let p = product_fixture();
        assert_eq!(select_probe_pair(&p).unwrap(), select_probe_pair(&p).unwrap());
    }
}

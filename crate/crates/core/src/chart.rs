//! Kähler charts: metric and curvature at points of a coordinate patch.
//!
//! A chart carries one of three backends. Closed-form charts evaluate the
//! Hermitian metric and its derivatives from formulas; polynomial charts
//! differentiate an exact sparse potential; numeric charts apply finite
//! differences to an arbitrary potential callable. All three feed the same
//! [`MetricJet`], from which the real metric and the real (0,4) curvature
//! tensor are assembled.
//!
//! Conventions: `zᵅ = xᵅ + i yᵅ`, real basis ordered `(∂x¹..∂xⁿ, ∂y¹..∂yⁿ)`,
//! `J = [[0, -I], [I, 0]]`, and `g(∂xᵅ, ∂xᵝ) = 2 Re h_{αβ̄}`,
//! `g(∂xᵅ, ∂yᵝ) = 2 Im h_{αβ̄}`. Points are given in the same coordinate
//! order. Curvature follows `R(x,y)z = ∇ₓ∇ᵧz - ∇ᵧ∇ₓz - ∇_{[x,y]}z` and
//! `R(x,y,z,w) = g(R(x,y)z, w)`, so complex projective space has positive
//! holomorphic sectional curvature.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::fd::{self, CURVATURE_STEP, METRIC_STEP};
use crate::poly::{complex_coordinates, Monomial, Polynomial, Var, C64};
use crate::rng::seeded_rng;
use crate::tensor::{HermitianFrame, Tensor4};
use crate::{Error, Matrix, Result};

pub type CMatrix = DMatrix<C64>;

/// Curvature symmetry tolerance for closed-form and polynomial backends.
pub const EXACT_TOLERANCE: f64 = 1e-8;
/// Curvature symmetry tolerance for the finite-difference backend.
pub const NUMERIC_TOLERANCE: f64 = 1e-4;

const RANDOM_POLY_RADIUS: f64 = 0.5;
const RANDOM_POLY_BOUND: f64 = 0.1;

/// Real coordinates `(x¹..xⁿ, y¹..yⁿ)` of a chart point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub coords: Vec<f64>,
}

impl ChartPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn origin(n: usize) -> Self {
        Self { coords: vec![0.0; 2 * n] }
    }
}

impl FromStr for ChartPoint {
    type Err = String;

    /// Comma-separated reals.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad coordinate `{}`: {e}", t.trim())))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Self::new)
    }
}

/// Hermitian metric `h_{αβ̄}` with its holomorphic derivatives at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricJet {
    /// `h[(α, β)] = h_{αβ̄}`
    pub h: CMatrix,
    /// `dh[γ][(α, β)] = ∂_γ h_{αβ̄}`
    pub dh: Vec<CMatrix>,
    /// `ddh[γ][δ][(α, β)] = ∂_γ ∂_δ̄ h_{αβ̄}`
    pub ddh: Vec<Vec<CMatrix>>,
}

impl MetricJet {
    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    pub fn real_metric(&self) -> Matrix {
        realify_hermitian(&self.h)
    }

    /// `R_{αβ̄γδ̄} = -∂_α∂_β̄ h_{γδ̄} + h^{ρμ̄} (∂_α h_{γμ̄})(∂_β̄ h_{ρδ̄})`, flattened
    /// row-major over `[α, β, γ, δ]`.
    pub fn complex_curvature(&self) -> Option<Vec<C64>> {
        let n = self.n();
        let h_inv = self.h.clone().try_inverse()?;
        let mut out = Vec::with_capacity(n * n * n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut acc = -self.ddh[a][b][(c, d)];
                        for rho in 0..n {
                            // ∂_β̄ h_{ρδ̄} = conj(∂_β h_{δρ̄})
                            let dbar = self.dh[b][(d, rho)].conj();
                            for mu in 0..n {
                                acc += h_inv[(mu, rho)] * self.dh[a][(c, mu)] * dbar;
                            }
                        }
                        out.push(acc);
                    }
                }
            }
        }
        Some(out)
    }

    /// Real (0,4) curvature tensor in the coordinate basis.
    pub fn real_curvature(&self) -> Option<Tensor4> {
        let n = self.n();
        let rc = self.complex_curvature()?;
        let at = |a: usize, b: usize, c: usize, d: usize| rc[((a * n + b) * n + c) * n + d];
        // ∂xᵅ has holomorphic component 1, ∂yᵅ has i
        let comp = |a: usize| if a < n { (a, C64::new(1.0, 0.0)) } else { (a - n, C64::new(0.0, 1.0)) };
        Some(Tensor4::from_fn(n, |a, b, c, d| {
            let (ia, ca) = comp(a);
            let (ib, cb) = comp(b);
            let (ic, cc) = comp(c);
            let (id, cd) = comp(d);
            let v = ca * cb.conj() * cc * cd.conj() * at(ia, ib, ic, id)
                - ca * cb.conj() * cd * cc.conj() * at(ia, ib, id, ic)
                - cb * ca.conj() * cc * cd.conj() * at(ib, ia, ic, id)
                + cb * ca.conj() * cd * cc.conj() * at(ib, ia, id, ic);
            v.re
        }))
    }
}

/// `[[2 Re h, 2 Im h], [-2 Im h, 2 Re h]]`.
pub fn realify_hermitian(h: &CMatrix) -> Matrix {
    let n = h.nrows();
    let mut g = Matrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            let v = h[(a, b)];
            g[(a, b)] = 2.0 * v.re;
            g[(n + a, n + b)] = 2.0 * v.re;
            g[(a, n + b)] = 2.0 * v.im;
            g[(n + a, b)] = -2.0 * v.im;
        }
    }
    (&g + g.transpose()) * 0.5
}

/// Metrics with closed-form jets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClosedForm {
    Flat,
    /// `K = log(1 + κ|z|²)/κ`: Fubini–Study for κ = 1, complex hyperbolic for κ = -1.
    SpaceForm { kappa: f64 },
    /// `K = log(1 + |z¹|²) + log(1 + |z²|²)`.
    ProductCp1Cp1,
}

impl ClosedForm {
    fn potential(self, x: &[f64]) -> f64 {
        let z = complex_coordinates(x);
        match self {
            ClosedForm::Flat => z.iter().map(|v| v.norm_sqr()).sum(),
            ClosedForm::SpaceForm { kappa } => {
                (1.0 + kappa * z.iter().map(|v| v.norm_sqr()).sum::<f64>()).ln() / kappa
            }
            ClosedForm::ProductCp1Cp1 => z.iter().map(|v| (1.0 + v.norm_sqr()).ln()).sum(),
        }
    }

    fn jet(self, n: usize, x: &[f64]) -> MetricJet {
        let z = complex_coordinates(x);
        match self {
            ClosedForm::Flat => MetricJet {
                h: CMatrix::identity(n, n),
                dh: vec![CMatrix::zeros(n, n); n],
                ddh: vec![vec![CMatrix::zeros(n, n); n]; n],
            },
            ClosedForm::SpaceForm { kappa } => space_form_jet(kappa, &z),
            ClosedForm::ProductCp1Cp1 => {
                let mut jet = MetricJet {
                    h: CMatrix::zeros(n, n),
                    dh: vec![CMatrix::zeros(n, n); n],
                    ddh: vec![vec![CMatrix::zeros(n, n); n]; n],
                };
                for (a, za) in z.iter().enumerate() {
                    let one = space_form_jet(1.0, std::slice::from_ref(za));
                    jet.h[(a, a)] = one.h[(0, 0)];
                    jet.dh[a][(a, a)] = one.dh[0][(0, 0)];
                    jet.ddh[a][a][(a, a)] = one.ddh[0][0][(0, 0)];
                }
                jet
            }
        }
    }
}

fn space_form_jet(kappa: f64, z: &[C64]) -> MetricJet {
    let n = z.len();
    let k = C64::from(kappa);
    let s = C64::from(1.0 + kappa * z.iter().map(|v| v.norm_sqr()).sum::<f64>());
    let delta = |i: usize, j: usize| C64::from(if i == j { 1.0 } else { 0.0 });
    let zb: Vec<C64> = z.iter().map(|v| v.conj()).collect();

    let h = CMatrix::from_fn(n, n, |a, b| delta(a, b) / s - k * zb[a] * z[b] / (s * s));
    let dh = (0..n)
        .map(|g| {
            CMatrix::from_fn(n, n, |a, b| {
                -k * delta(a, b) * zb[g] / (s * s) - k * zb[a] * delta(b, g) / (s * s)
                    + C64::from(2.0) * k * k * zb[a] * z[b] * zb[g] / s.powi(3)
            })
        })
        .collect();
    let ddh = (0..n)
        .map(|g| {
            (0..n)
                .map(|d| {
                    CMatrix::from_fn(n, n, |a, b| {
                        let t1 = -k * delta(a, b) * (delta(g, d) / s.powi(2) - C64::from(2.0) * k * zb[g] * z[d] / s.powi(3));
                        let t2 = -k * delta(b, g) * (delta(a, d) / s.powi(2) - C64::from(2.0) * k * zb[a] * z[d] / s.powi(3));
                        let t3 = C64::from(2.0) * k * k * z[b]
                            * ((delta(a, d) * zb[g] + zb[a] * delta(g, d)) / s.powi(3)
                                - C64::from(3.0) * k * zb[a] * zb[g] * z[d] / s.powi(4));
                        t1 + t2 + t3
                    })
                })
                .collect()
        })
        .collect();
    MetricJet { h, dh, ddh }
}

pub type PotentialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Potential evaluated only pointwise; derivatives by finite differences.
#[derive(Clone)]
pub struct NumericPotential {
    pub potential: PotentialFn,
    pub metric_step: f64,
    pub curvature_step: f64,
}

impl fmt::Debug for NumericPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumericPotential")
            .field("metric_step", &self.metric_step)
            .field("curvature_step", &self.curvature_step)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum Backend {
    ClosedForm(ClosedForm),
    Polynomial(Arc<Polynomial>),
    Numeric(NumericPotential),
}

#[derive(Clone, Debug)]
pub struct KaehlerChart {
    name: String,
    n: usize,
    backend: Backend,
    /// Admitted points satisfy `|z| < radius`.
    domain_radius: Option<f64>,
}

impl KaehlerChart {
    pub fn closed_form(name: impl Into<String>, n: usize, form: ClosedForm, domain_radius: Option<f64>) -> Self {
        Self { name: name.into(), n, backend: Backend::ClosedForm(form), domain_radius }
    }

    /// Chart of an exact polynomial potential; rejects non-real potentials.
    pub fn polynomial(name: impl Into<String>, potential: Polynomial, domain_radius: Option<f64>) -> Result<Self> {
        potential.check_real(1e-12)?;
        Ok(Self { name: name.into(), n: potential.n(), backend: Backend::Polynomial(Arc::new(potential)), domain_radius })
    }

    pub fn numeric(name: impl Into<String>, n: usize, potential: PotentialFn, domain_radius: Option<f64>) -> Self {
        Self {
            name: name.into(),
            n,
            backend: Backend::Numeric(NumericPotential { potential, metric_step: METRIC_STEP, curvature_step: CURVATURE_STEP }),
            domain_radius,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn domain_radius(&self) -> Option<f64> {
        self.domain_radius
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.backend, Backend::Numeric(_))
    }

    /// Symmetry tolerance the backend's curvature is expected to meet.
    pub fn curvature_tolerance(&self) -> f64 {
        if self.is_numeric() {
            NUMERIC_TOLERANCE
        } else {
            EXACT_TOLERANCE
        }
    }

    pub fn potential(&self) -> PotentialFn {
        match &self.backend {
            Backend::ClosedForm(form) => {
                let form = *form;
                Arc::new(move |x: &[f64]| form.potential(x))
            }
            Backend::Polynomial(p) => {
                let p = Arc::clone(p);
                Arc::new(move |x: &[f64]| p.eval_real(x))
            }
            Backend::Numeric(num) => Arc::clone(&num.potential),
        }
    }

    /// Same potential and domain, evaluated by finite differences.
    pub fn to_numeric(&self) -> Self {
        Self::numeric(format!("{} (numeric)", self.name), self.n, self.potential(), self.domain_radius)
    }

    pub fn contains(&self, p: &ChartPoint) -> bool {
        p.coords.len() == 2 * self.n
            && p.coords.iter().all(|c| c.is_finite())
            && self.domain_radius.is_none_or(|r| p.coords.iter().map(|c| c * c).sum::<f64>() < r * r)
    }

    fn check_point(&self, p: &ChartPoint) -> Result<()> {
        if p.coords.len() != 2 * self.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, found: p.coords.len() });
        }
        if !self.contains(p) {
            return Err(Error::OutsideDomain(p.coords.clone()));
        }
        Ok(())
    }

    pub fn jet_at(&self, p: &ChartPoint) -> Result<MetricJet> {
        self.check_point(p)?;
        let x = &p.coords;
        let jet = match &self.backend {
            Backend::ClosedForm(form) => form.jet(self.n, x),
            Backend::Polynomial(poly) => polynomial_jet(poly, x),
            Backend::Numeric(num) => fd::numeric_jet(&*num.potential, x, num.metric_step, num.curvature_step),
        };
        Ok(jet)
    }

    /// Real metric and the standard complex structure at `p`.
    pub fn metric_at(&self, p: &ChartPoint) -> Result<HermitianFrame> {
        let h = match &self.backend {
            Backend::Numeric(num) => {
                self.check_point(p)?;
                fd::numeric_hermitian_metric(&*num.potential, &p.coords, num.metric_step)
            }
            _ => self.jet_at(p)?.h,
        };
        HermitianFrame::standard(self.n, realify_hermitian(&h)).map_err(|_| Error::NotPositiveDefinite(p.coords.clone()))
    }

    pub fn curvature_at(&self, p: &ChartPoint) -> Result<Tensor4> {
        let jet = self.jet_at(p)?;
        HermitianFrame::standard(self.n, jet.real_metric()).map_err(|_| Error::NotPositiveDefinite(p.coords.clone()))?;
        jet.real_curvature().ok_or_else(|| Error::NotPositiveDefinite(p.coords.clone()))
    }

    /// Frame and curvature from a single jet evaluation.
    pub fn frame_and_curvature_at(&self, p: &ChartPoint) -> Result<(HermitianFrame, Tensor4)> {
        let jet = self.jet_at(p)?;
        let frame = HermitianFrame::standard(self.n, jet.real_metric())
            .map_err(|_| Error::NotPositiveDefinite(p.coords.clone()))?;
        let r = jet.real_curvature().ok_or_else(|| Error::NotPositiveDefinite(p.coords.clone()))?;
        Ok((frame, r))
    }
}

fn polynomial_jet(k: &Polynomial, x: &[f64]) -> MetricJet {
    let n = k.n();
    let z = complex_coordinates(x);
    let mut h = CMatrix::zeros(n, n);
    let mut dh = vec![CMatrix::zeros(n, n); n];
    let mut ddh = vec![vec![CMatrix::zeros(n, n); n]; n];
    for a in 0..n {
        let ka = k.derivative(Var::Z(a));
        for b in 0..n {
            let kab = ka.derivative(Var::ZBar(b));
            h[(a, b)] = kab.eval(&z);
            for g in 0..n {
                let kabg = kab.derivative(Var::Z(g));
                dh[g][(a, b)] = kabg.eval(&z);
                for d in 0..n {
                    ddh[g][d][(a, b)] = kabg.derivative(Var::ZBar(d)).eval(&z);
                }
            }
        }
    }
    MetricJet { h, dh, ddh }
}

/// Names accepted by [`catalog_chart`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CatalogName {
    Flat,
    FubiniStudy,
    ComplexHyperbolic,
    ProductCp1Cp1,
    RandomPoly { seed: u64, degree: u32 },
}

impl FromStr for CatalogName {
    type Err = Error;

    /// `random-poly` parses with seed 0 and degree 4.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(Self::Flat),
            "fubini-study" => Ok(Self::FubiniStudy),
            "complex-hyperbolic" => Ok(Self::ComplexHyperbolic),
            "product-cp1-cp1" => Ok(Self::ProductCp1Cp1),
            "random-poly" => Ok(Self::RandomPoly { seed: 0, degree: 4 }),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }
}

impl fmt::Display for CatalogName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Flat => f.write_str("flat"),
            Self::FubiniStudy => f.write_str("fubini-study"),
            Self::ComplexHyperbolic => f.write_str("complex-hyperbolic"),
            Self::ProductCp1Cp1 => f.write_str("product-cp1-cp1"),
            Self::RandomPoly { .. } => f.write_str("random-poly"),
        }
    }
}

pub fn catalog_chart(name: &CatalogName, n: usize) -> Result<KaehlerChart> {
    if n == 0 {
        return Err(Error::UnsupportedDimension { what: name.to_string(), n });
    }
    let chart = match name {
        CatalogName::Flat => KaehlerChart::closed_form("flat", n, ClosedForm::Flat, None),
        CatalogName::FubiniStudy => {
            KaehlerChart::closed_form("fubini-study", n, ClosedForm::SpaceForm { kappa: 1.0 }, None)
        }
        CatalogName::ComplexHyperbolic => {
            KaehlerChart::closed_form("complex-hyperbolic", n, ClosedForm::SpaceForm { kappa: -1.0 }, Some(1.0))
        }
        CatalogName::ProductCp1Cp1 => {
            if n != 2 {
                return Err(Error::UnsupportedDimension { what: name.to_string(), n });
            }
            KaehlerChart::closed_form("product-cp1-cp1", 2, ClosedForm::ProductCp1Cp1, None)
        }
        CatalogName::RandomPoly { seed, degree } => {
            let mut rng = seeded_rng(*seed);
            let k = Polynomial::random_potential(n, *degree, RANDOM_POLY_BOUND, &mut rng);
            KaehlerChart::polynomial("random-poly", k, Some(RANDOM_POLY_RADIUS))?
        }
    };
    Ok(chart)
}

/// Parsed chart specification document.
///
/// ```text
/// # comment
/// name = random-poly        # flat | fubini-study | complex-hyperbolic |
///                           # product-cp1-cp1 | random-poly | polynomial
/// n = 2
/// seed = 7                  # random-poly only
/// degree = 4                # random-poly only
/// backend = exact           # exact | numeric
/// radius = 0.5              # polynomial only
/// 1,0|1,0 1.0 0.0           # polynomial term: z-exponents|z̄-exponents re im
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct ChartSpec {
    pub name: String,
    pub n: usize,
    pub seed: u64,
    pub degree: u32,
    pub numeric: bool,
    pub radius: Option<f64>,
    pub terms: Vec<(usize, Monomial, C64)>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_exponents(line: usize, s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|_| parse_err(line, format!("bad exponent `{t}`"))))
        .collect()
}

impl ChartSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut name = None;
        let mut n = 2usize;
        let mut seed = 0u64;
        let mut degree = 4u32;
        let mut numeric = false;
        let mut radius = None;
        let mut terms = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some((key, value)) = content.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "name" => name = Some(value.to_string()),
                    "n" => n = value.parse().map_err(|_| parse_err(line, format!("bad dimension `{value}`")))?,
                    "seed" => seed = value.parse().map_err(|_| parse_err(line, format!("bad seed `{value}`")))?,
                    "degree" => degree = value.parse().map_err(|_| parse_err(line, format!("bad degree `{value}`")))?,
                    "radius" => {
                        radius = Some(value.parse().map_err(|_| parse_err(line, format!("bad radius `{value}`")))?)
                    }
                    "backend" => {
                        numeric = match value {
                            "exact" => false,
                            "numeric" => true,
                            other => return Err(parse_err(line, format!("unknown backend `{other}`"))),
                        }
                    }
                    other => return Err(parse_err(line, format!("unknown key `{other}`"))),
                }
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let [mono, re, im] = fields[..] else {
                return Err(parse_err(line, "expected `key = value` or `z-exps|zbar-exps re im`"));
            };
            let (zs, zbs) = mono.split_once('|').ok_or_else(|| parse_err(line, "monomial needs `|`"))?;
            let (zs, zbs) = (parse_exponents(line, zs)?, parse_exponents(line, zbs)?);
            if zs.len() != zbs.len() {
                return Err(parse_err(line, "exponent lists differ in length"));
            }
            let re: f64 = re.parse().map_err(|_| parse_err(line, format!("bad real part `{re}`")))?;
            let im: f64 = im.parse().map_err(|_| parse_err(line, format!("bad imaginary part `{im}`")))?;
            terms.push((line, Monomial::new(zs, zbs), C64::new(re, im)));
        }
        let name = name.ok_or_else(|| parse_err(0, "missing `name`"))?;
        for (line, m, _) in &terms {
            if m.z.len() != n {
                return Err(parse_err(*line, format!("monomial has {} variables, expected {n}", m.z.len())));
            }
        }
        Ok(Self { name, n, seed, degree, numeric, radius, terms })
    }

    pub fn build(&self) -> Result<KaehlerChart> {
        let chart = if self.name == "polynomial" {
            let mut p = Polynomial::zero(self.n);
            for (_, m, c) in &self.terms {
                p.add_term(m.clone(), *c);
            }
            if let Err(Error::NonRealPotential(mono)) = p.check_real(1e-12) {
                let line = self.terms.iter().find(|(_, m, _)| m.to_string() == mono).map_or(0, |t| t.0);
                return Err(parse_err(line, format!("potential is not real at monomial {mono}")));
            }
            KaehlerChart::polynomial("polynomial", p, self.radius)?
        } else {
            let mut name: CatalogName = self.name.parse()?;
            if let CatalogName::RandomPoly { seed, degree } = &mut name {
                *seed = self.seed;
                *degree = self.degree;
            }
            catalog_chart(&name, self.n)?
        };
        Ok(if self.numeric { chart.to_numeric() } else { chart })
    }
}

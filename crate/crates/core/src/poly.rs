//! Sparse polynomials in `z¹..zⁿ` and their conjugates, with exact partial
//! derivatives `∂/∂zᵅ` and `∂/∂z̄ᵅ` computed by exponent bookkeeping.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Complex;
use rand::Rng;

use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// Exponents of `z` and `z̄` in a monomial `z^a z̄^b`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub z: Vec<u32>,
    pub zbar: Vec<u32>,
}

impl Monomial {
    pub fn new(z: Vec<u32>, zbar: Vec<u32>) -> Self {
        assert_eq!(z.len(), zbar.len(), "holomorphic and antiholomorphic exponent lengths differ");
        Self { z, zbar }
    }

    pub fn degree(&self) -> u32 {
        self.z.iter().chain(&self.zbar).sum()
    }

    /// The monomial obtained by complex conjugation, `z^b z̄^a`.
    pub fn mirror(&self) -> Self {
        Self { z: self.zbar.clone(), zbar: self.z.clone() }
    }

    fn eval(&self, z: &[C64]) -> C64 {
        let mut acc = C64::new(1.0, 0.0);
        for (i, zi) in z.iter().enumerate() {
            if self.z[i] > 0 {
                acc *= zi.powu(self.z[i]);
            }
            if self.zbar[i] > 0 {
                acc *= zi.conj().powu(self.zbar[i]);
            }
        }
        acc
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        write!(f, "{}|{}", join(&self.z), join(&self.zbar))
    }
}

/// Variable of differentiation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    Z(usize),
    ZBar(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Monomial, C64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: C64) {
        assert_eq!(m.z.len(), self.n, "monomial has wrong number of variables");
        let entry = self.terms.entry(m).or_insert(C64::new(0.0, 0.0));
        *entry += c;
    }

    /// `Σ |zᵅ|²`.
    pub fn norm_squared(n: usize) -> Self {
        let mut p = Self::zero(n);
        for a in 0..n {
            let mut e = vec![0; n];
            e[a] = 1;
            p.add_term(Monomial::new(e.clone(), e), C64::new(1.0, 0.0));
        }
        p
    }

    /// Adds `Re(c · z^a z̄^b)` as the pair `c/2 · z^a z̄^b + c̄/2 · z^b z̄^a`.
    pub fn add_real_part(&mut self, m: Monomial, c: C64) {
        let mirror = m.mirror();
        self.add_term(m, c * 0.5);
        self.add_term(mirror, c.conj() * 0.5);
    }

    /// Checks that the polynomial takes real values: every coefficient is the
    /// conjugate of the coefficient of its mirror monomial.
    pub fn check_real(&self, tol: f64) -> Result<()> {
        let zero = C64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let other = self.terms.get(&m.mirror()).copied().unwrap_or(zero);
            if (c - other.conj()).norm() > tol * c.norm().max(1.0) {
                return Err(Error::NonRealPotential(m.to_string()));
            }
        }
        Ok(())
    }

    pub fn derivative(&self, var: Var) -> Self {
        let mut out = Self::zero(self.n);
        for (m, c) in &self.terms {
            let (exps, idx) = match var {
                Var::Z(i) => (&m.z, i),
                Var::ZBar(i) => (&m.zbar, i),
            };
            let k = exps[idx];
            if k == 0 {
                continue;
            }
            let mut dm = m.clone();
            match var {
                Var::Z(i) => dm.z[i] -= 1,
                Var::ZBar(i) => dm.zbar[i] -= 1,
            }
            out.add_term(dm, c * k as f64);
        }
        out
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        self.terms.iter().map(|(m, c)| c * m.eval(z)).sum()
    }

    /// Real part of the value at real coordinates `(x¹..xⁿ, y¹..yⁿ)`.
    pub fn eval_real(&self, coords: &[f64]) -> f64 {
        self.eval(&complex_coordinates(coords)).re
    }

    /// `Σ|z|² + Re(P)` with `P` a random polynomial of total degree in
    /// `2..=degree` whose coefficients have modulus at most `bound`.
    pub fn random_potential<R: Rng>(n: usize, degree: u32, bound: f64, rng: &mut R) -> Self {
        let mut p = Self::norm_squared(n);
        for m in monomials(n, degree) {
            if m.degree() < 2 {
                continue;
            }
            let r = bound * rng.random::<f64>();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            p.add_real_part(m, C64::from_polar(r, theta));
        }
        p
    }
}

/// `zᵅ = xᵅ + i yᵅ` from coordinates ordered `(x¹..xⁿ, y¹..yⁿ)`.
pub fn complex_coordinates(coords: &[f64]) -> Vec<C64> {
    let n = coords.len() / 2;
    (0..n).map(|a| C64::new(coords[a], coords[n + a])).collect()
}

/// All monomials `z^a z̄^b` in `n` variables with total degree `≤ degree`, in
/// a fixed order.
pub fn monomials(n: usize, degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut exps = vec![0u32; 2 * n];
    fill(&mut exps, 0, degree, &mut out, n);
    out
}

fn fill(exps: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<Monomial>, n: usize) {
    if pos == exps.len() {
        out.push(Monomial::new(exps[..n].to_vec(), exps[n..].to_vec()));
        return;
    }
    for k in 0..=left {
        exps[pos] = k;
        fill(exps, pos + 1, left - k, out, n);
    }
    exps[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_norm_squared() {
        let p = Polynomial::norm_squared(2);
        let d = p.derivative(Var::Z(0)).derivative(Var::ZBar(0));
        let z = [C64::new(0.3, -0.2), C64::new(1.0, 2.0)];
        assert_eq!(d.eval(&z), C64::new(1.0, 0.0));
        assert!(p.derivative(Var::Z(0)).derivative(Var::ZBar(1)).is_empty());
    }

    #[test]
    fn power_rule() {
        // ∂/∂z̄ of 2 z² z̄³ is 6 z² z̄²
        let mut p = Polynomial::zero(1);
        p.add_term(Monomial::new(vec![2], vec![3]), C64::new(2.0, 0.0));
        let d = p.derivative(Var::ZBar(0));
        let (m, c) = d.terms().next().unwrap();
        assert_eq!(m, &Monomial::new(vec![2], vec![2]));
        assert_eq!(*c, C64::new(6.0, 0.0));
    }

    #[test]
    fn real_part_terms_are_real() {
        let mut p = Polynomial::zero(2);
        p.add_real_part(Monomial::new(vec![1, 1], vec![0, 2]), C64::new(0.3, -0.7));
        p.check_real(1e-15).unwrap();
        let v = p.eval(&[C64::new(0.2, 0.1), C64::new(-0.4, 0.3)]);
        assert!(v.im.abs() < 1e-16);
    }

    #[test]
    fn non_real_polynomial_rejected() {
        let mut p = Polynomial::zero(1);
        p.add_term(Monomial::new(vec![2], vec![0]), C64::new(1.0, 0.0));
        assert!(matches!(p.check_real(1e-12), Err(Error::NonRealPotential(_))));
    }

    #[test]
    fn monomial_count_matches_binomial() {
        // degree ≤ 4 in 4 real-count variables: C(8, 4) = 70
        assert_eq!(monomials(2, 4).len(), 70);
        assert_eq!(monomials(3, 4).len(), 210);
    }
}

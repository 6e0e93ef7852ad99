//! Eigen-decomposition of g-symmetric endomorphisms by cyclic Jacobi
//! rotations, and extraction of J-adapted eigenbases.

use serde::{Deserialize, Serialize};

use crate::tensor::{max_abs, Endomorphism, HermitianFrame};
use crate::{Error, Matrix, Result, Vector};

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-13;
const SYMMETRY_TOL: f64 = 1e-8;
const CLUSTER_GAP: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPairList {
    /// Sorted by descending eigenvalue.
    pub pairs: Vec<EigenPair>,
    pub orthonormal: bool,
}

impl EigenPairList {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }
}

/// Symmetric Euclidean eigenproblem. Returns eigenvalues (unsorted) and the
/// matrix whose columns are the corresponding orthonormal eigenvectors.
pub fn symmetric_jacobi(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let d = m.nrows();
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = Matrix::identity(d, d);
    let threshold = OFF_DIAGONAL_TOL * max_abs(&a);
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            return Ok(((0..d).map(|i| a[(i, i)]).collect(), v));
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }
    if off_diagonal_norm(&a) <= threshold {
        return Ok(((0..d).map(|i| a[(i, i)]).collect(), v));
    }
    Err(Error::NoConvergence(MAX_SWEEPS))
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let d = a.nrows();
    let mut acc = 0.0;
    for i in 0..d {
        for k in 0..d {
            if i != k {
                acc += a[(i, k)] * a[(i, k)];
            }
        }
    }
    acc.sqrt()
}

// A ← RᵀAR, V ← VR with R the Givens rotation in the (p, q) plane.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let d = a.nrows();
    for k in 0..d {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..d {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    for k in 0..d {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// `G^{1/2}` and `G^{-1/2}` for a symmetric positive definite `G`.
pub(crate) fn metric_roots(g: &Matrix) -> Result<(Matrix, Matrix)> {
    let (vals, q) = symmetric_jacobi(g)?;
    let d = g.nrows();
    let sqrt = Matrix::from_fn(d, d, |i, k| if i == k { vals[i].sqrt() } else { 0.0 });
    let inv_sqrt = Matrix::from_fn(d, d, |i, k| if i == k { 1.0 / vals[i].sqrt() } else { 0.0 });
    Ok((&q * sqrt * q.transpose(), &q * inv_sqrt * q.transpose()))
}

/// Flips `v` so that its first non-negligible component is positive.
fn canonical_sign(v: Vector) -> Vector {
    let scale = v.amax();
    match v.iter().find(|c| c.abs() > 1e-10 * scale) {
        Some(c) if *c < 0.0 => -v,
        _ => v,
    }
}

/// Full g-orthonormal eigenbasis of a g-symmetric endomorphism, sorted by
/// descending eigenvalue.
pub fn jacobi_eigen(a: &Endomorphism, frame: &HermitianFrame) -> Result<EigenPairList> {
    let ga = frame.metric() * &a.m;
    let asym = max_abs(&(&ga - ga.transpose()));
    if asym > SYMMETRY_TOL * max_abs(&ga) {
        return Err(Error::NotSymmetric(asym));
    }
    let (root, inv_root) = metric_roots(frame.metric())?;
    let sym = &root * &a.m * &inv_root;
    let (vals, u) = symmetric_jacobi(&sym)?;
    let mut pairs: Vec<EigenPair> = vals
        .into_iter()
        .enumerate()
        .map(|(i, value)| {
            let v = &inv_root * u.column(i);
            EigenPair { value, vector: canonical_sign(v) }
        })
        .collect();
    pairs.sort_by(|x, y| y.value.total_cmp(&x.value));
    Ok(EigenPairList { pairs, orthonormal: true })
}

/// `{e₁..eₙ}` with `A eᵢ = λᵢ eᵢ` and `{eᵢ, Jeᵢ}` g-orthonormal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JAdaptedEigenbasis {
    pub vectors: Vec<Vector>,
    /// Descending.
    pub values: Vec<f64>,
}

/// Eigenbasis of a g-symmetric, J-commuting endomorphism in the form
/// `{e₁, .., eₙ, Je₁, .., Jeₙ}`.
///
/// Each eigenspace of such an endomorphism is J-invariant; inside every
/// cluster of (numerically) equal eigenvalues a unit vector `e` is chosen and
/// `e`, `Je` are projected out of the rest of the cluster before repeating.
pub fn j_adapted_eigenbasis(a: &Endomorphism, frame: &HermitianFrame) -> Result<JAdaptedEigenbasis> {
    let scale = a.norm();
    let comm = a.j_commutator_residual(frame);
    if comm > SYMMETRY_TOL * scale {
        // symmetric failure takes precedence so that callers see NotSymmetric for J itself
        let asym = a.g_symmetry_residual(frame);
        if asym > SYMMETRY_TOL * max_abs(&(frame.metric() * &a.m)) {
            return Err(Error::NotSymmetric(asym));
        }
        return Err(Error::NotJCommuting(comm));
    }
    let eig = jacobi_eigen(a, frame)?;

    let mut clusters: Vec<Vec<&EigenPair>> = Vec::new();
    for pair in &eig.pairs {
        match clusters.last_mut() {
            Some(cluster) if cluster.last().unwrap().value - pair.value <= CLUSTER_GAP * scale => {
                cluster.push(pair)
            }
            _ => clusters.push(vec![pair]),
        }
    }

    let mut vectors = Vec::with_capacity(frame.n());
    let mut values = Vec::with_capacity(frame.n());
    for cluster in clusters {
        if cluster.len() % 2 != 0 {
            return Err(Error::NotJCommuting(comm));
        }
        let mut remaining: Vec<Vector> = cluster.iter().map(|p| p.vector.clone()).collect();
        let mut found = 0;
        while let Some(first) = remaining.first().cloned() {
            let e = canonical_sign(frame.normalize(&first).ok_or(Error::NotJCommuting(comm))?);
            let je = frame.apply_j(&e);
            let mut next = Vec::with_capacity(remaining.len());
            for mut r in remaining.into_iter().skip(1) {
                let before = frame.norm(&r);
                for _ in 0..2 {
                    for b in [&e, &je].into_iter().chain(next.iter()) {
                        let c = frame.inner(&r, b);
                        r -= b * c;
                    }
                }
                let len = frame.norm(&r);
                if len > 1e-6 * before {
                    next.push(r / len);
                }
            }
            let ae = a.apply(&e);
            values.push(frame.inner(&ae, &e));
            vectors.push(e);
            found += 2;
            remaining = next;
        }
        if found != cluster.len() {
            return Err(Error::NotJCommuting(comm));
        }
    }
    Ok(JAdaptedEigenbasis { vectors, values })
}

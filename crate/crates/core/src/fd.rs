//! Central finite differences for potentials given only as callables.
//!
//! The Hermitian metric comes from second differences of the potential with a
//! small step; its holomorphic derivatives come from first and second
//! differences of that computed metric with a larger step.

use nalgebra::DMatrix;

use crate::chart::MetricJet;
use crate::poly::C64;
use crate::Matrix;

pub const METRIC_STEP: f64 = 1e-3;
pub const CURVATURE_STEP: f64 = 1e-2;

type CMatrix = DMatrix<C64>;

fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &(i, d) in moves {
        y[i] += d;
    }
    y
}

/// Real Hessian by central differences: 3-point stencils on the diagonal,
/// 4-corner stencils off it.
pub fn hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Matrix {
    let d = x.len();
    let f0 = f(x);
    let mut out = Matrix::zeros(d, d);
    for i in 0..d {
        let fp = f(&shifted(x, &[(i, h)]));
        let fm = f(&shifted(x, &[(i, -h)]));
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let fpp = f(&shifted(x, &[(i, h), (j, h)]));
            let fpm = f(&shifted(x, &[(i, h), (j, -h)]));
            let fmp = f(&shifted(x, &[(i, -h), (j, h)]));
            let fmm = f(&shifted(x, &[(i, -h), (j, -h)]));
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// `h_{αβ̄} = ∂²K/∂zᵅ∂z̄ᵝ = ¼(K_{xx} + K_{yy} + i(K_{xy} - K_{yx}))`.
pub fn hermitian_from_hessian(hess: &Matrix) -> CMatrix {
    let n = hess.nrows() / 2;
    CMatrix::from_fn(n, n, |a, b| {
        C64::new(
            0.25 * (hess[(a, b)] + hess[(n + a, n + b)]),
            0.25 * (hess[(a, n + b)] - hess[(n + a, b)]),
        )
    })
}

/// Hermitian metric at `x` from the potential alone.
pub fn numeric_hermitian_metric(f: &dyn Fn(&[f64]) -> f64, x: &[f64], metric_step: f64) -> CMatrix {
    hermitian_from_hessian(&hessian(f, x, metric_step))
}

/// Metric together with its first and mixed second holomorphic derivatives.
pub fn numeric_jet(f: &dyn Fn(&[f64]) -> f64, x: &[f64], metric_step: f64, curvature_step: f64) -> MetricJet {
    let d = x.len();
    let n = d / 2;
    let h = curvature_step;
    let metric = |moves: &[(usize, f64)]| numeric_hermitian_metric(f, &shifted(x, moves), metric_step);

    let h0 = metric(&[]);
    let plus: Vec<CMatrix> = (0..d).map(|i| metric(&[(i, h)])).collect();
    let minus: Vec<CMatrix> = (0..d).map(|i| metric(&[(i, -h)])).collect();

    let first: Vec<CMatrix> = (0..d).map(|i| (&plus[i] - &minus[i]) / C64::from(2.0 * h)).collect();
    let mut second = vec![vec![CMatrix::zeros(n, n); d]; d];
    for i in 0..d {
        second[i][i] = (&plus[i] - &h0 * C64::from(2.0) + &minus[i]) / C64::from(h * h);
        for j in 0..i {
            let pp = metric(&[(i, h), (j, h)]);
            let pm = metric(&[(i, h), (j, -h)]);
            let mp = metric(&[(i, -h), (j, h)]);
            let mm = metric(&[(i, -h), (j, -h)]);
            let v = (pp - pm - mp + mm) / C64::from(4.0 * h * h);
            second[j][i] = v.clone();
            second[i][j] = v;
        }
    }

    let i_unit = C64::new(0.0, 1.0);
    // ∂_γ = ½(∂_{xγ} - i∂_{yγ})
    let dh = (0..n).map(|g| (&first[g] - &first[n + g] * i_unit) * C64::from(0.5)).collect();
    // ∂_γ∂_δ̄ = ¼(∂_{xγ}∂_{xδ} + ∂_{yγ}∂_{yδ} + i(∂_{xγ}∂_{yδ} - ∂_{yγ}∂_{xδ}))
    let ddh = (0..n)
        .map(|g| {
            (0..n)
                .map(|e| {
                    let re = &second[g][e] + &second[n + g][n + e];
                    let im = &second[g][n + e] - &second[n + g][e];
                    (re + im * i_unit) * C64::from(0.25)
                })
                .collect()
        })
        .collect();
    MetricJet { h: h0, dh, ddh }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hessian_of_quadratic_is_exact() {
        let f = |x: &[f64]| 3.0 * x[0] * x[0] + x[0] * x[1] - 2.0 * x[1] * x[1];
        let h = hessian(&f, &[0.3, -0.1], 1e-3);
        let want = Matrix::from_row_slice(2, 2, &[6.0, 1.0, 1.0, -4.0]);
        assert!((h - want).amax() < 1e-8);
    }

    #[test]
    fn flat_potential_gives_identity_metric() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let jet = numeric_jet(&f, &[0.1, 0.2, 0.3, -0.4], METRIC_STEP, CURVATURE_STEP);
        let id = CMatrix::identity(2, 2);
        assert!((&jet.h - id).camax() < 1e-8);
        assert!(jet.dh.iter().all(|m| m.camax() < 1e-6));
    }
}

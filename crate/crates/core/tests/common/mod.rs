#![allow(dead_code)]

use bochner::chart::{catalog_chart, CatalogName, ChartPoint, KaehlerChart};
use bochner::{HolomorphicLinearMap, Matrix, PointData};

pub fn product_chart() -> KaehlerChart {
    catalog_chart(&CatalogName::ProductCp1Cp1, 2).unwrap()
}

pub fn product_origin() -> PointData {
    PointData::at(&product_chart(), &ChartPoint::origin(2)).unwrap()
}

/// `(z₁, z₂) ↦ (z₂, z₁)` in real coordinates `(x₁, x₂, y₁, y₂)`.
pub fn swap(x: &[f64]) -> Vec<f64> {
    vec![x[1], x[0], x[3], x[2]]
}

/// Jacobian of `f` at `x` by central differences; exact for linear `f`.
pub fn jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> Matrix {
    let d = x.len();
    let h = 1e-4;
    let mut out = Matrix::zeros(d, d);
    for k in 0..d {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[k] += h;
        minus[k] -= h;
        let (fp, fm) = (f(&plus), f(&minus));
        for i in 0..d {
            out[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    out
}

/// Point data at `p` and `swap(p)` on the product chart together with the
/// differential of the swap.
pub fn swap_fixture(p: &[f64]) -> (PointData, PointData, HolomorphicLinearMap) {
    let chart = product_chart();
    let q = swap(p);
    let dp = PointData::at(&chart, &ChartPoint::new(p.to_vec())).unwrap();
    let dq = PointData::at(&chart, &ChartPoint::new(q)).unwrap();
    let f = jacobian(swap, p);
    let map = HolomorphicLinearMap::new(dp.frame.clone(), dq.frame.clone(), f).unwrap();
    (dp, dq, map)
}

pub fn same_point(p: &PointData, f: Matrix) -> HolomorphicLinearMap {
    HolomorphicLinearMap::new(p.frame.clone(), p.frame.clone(), f).unwrap()
}

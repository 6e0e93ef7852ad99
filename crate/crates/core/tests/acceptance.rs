//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use bochner::bochner::{bochner_from_curvature, bochner_residuals, random_bochner};
use bochner::chart::{catalog_chart, CatalogName, ChartPoint};
use bochner::homothety::{
    eigen_sum_check, homothety_certificate, multi_point_constancy, preservation_residual, EXACT_CERTIFICATE_TOL,
};
use bochner::rng::{random_vector, seeded_rng};
use bochner::tensor::{max_abs, standard_complex_structure};
use bochner::{CurvatureBundle, HolomorphicLinearMap, Matrix, PointData, Verdict};
use common::{product_origin, same_point, swap_fixture};
use rand::Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_point(seed: u64, radius: f64) -> ChartPoint {
    let mut rng = seeded_rng(seed);
    let dir = random_vector(4, &mut rng).normalize();
    let r = radius * rng.random::<f64>();
    ChartPoint::new((dir * r).as_slice().to_vec())
}

fn bochner_identities() -> Outcome {
    let (mut sym, mut ricci, mut trace, mut idem) = (0f64, 0f64, 0f64, 0f64);
    for n in [2, 3] {
        for seed in 0..200 {
            let b = match random_bochner(seed, n) {
                Ok(b) => b,
                Err(e) => return outcome(false, format!("seed {seed}, n = {n}: {e}")),
            };
            let res = bochner_residuals(&b).expect("residuals");
            sym = sym.max(res.symmetries.max());
            ricci = ricci.max(res.ricci_contraction);
            trace = trace.max(res.trace_identity);
            idem = idem.max(res.idempotence);
        }
    }
    let pass = sym <= 1e-8 && ricci <= 1e-8 && trace <= 1e-8 && idem <= 1e-9;
    outcome(
        pass,
        format!("400 bundles: symmetry {sym:.2e}, ricci {ricci:.2e}, trace identity {trace:.2e}, idempotence {idem:.2e}"),
    )
}

fn space_forms_flat() -> Outcome {
    let mut flat_worst = 0f64;
    let mut ratios = Vec::new();
    for (name, radius) in [
        (CatalogName::Flat, 2.0),
        (CatalogName::FubiniStudy, 2.0),
        (CatalogName::ComplexHyperbolic, 0.9),
    ] {
        let chart = catalog_chart(&name, 2).expect("catalog chart");
        let mut worst = 0f64;
        for k in 0..5 {
            let bundle = CurvatureBundle::at(&chart, &random_point(100 + k, radius)).expect("bundle");
            let b = bochner_from_curvature(&bundle).expect("bochner");
            if name == CatalogName::Flat {
                flat_worst = flat_worst.max(b.norm());
            } else {
                worst = worst.max(b.norm() / bundle.r.norm());
            }
        }
        if name != CatalogName::Flat {
            ratios.push((name, worst));
        }
    }
    let pass = flat_worst <= 1e-10 && ratios.iter().all(|(_, r)| *r <= 1e-6);
    let detail = ratios.iter().map(|(n, r)| format!("{n} |B|/|R| {r:.2e}")).collect::<Vec<_>>().join(", ");
    outcome(pass, format!("flat |B| {flat_worst:.2e}, {detail}"))
}

fn product_nonflat() -> Outcome {
    let b = product_origin().bochner;
    let ratio = b.norm() / b.curvature_scale.expect("curvature scale");
    outcome(ratio > 0.01, format!("product-cp1-cp1 at origin |B|/|R| = {ratio:.4}"))
}

fn eigenvalue_trace_law() -> Outcome {
    let mut worst = 0f64;
    for seed in 0..100 {
        let b = random_bochner(seed, 2).expect("random Bochner tensor");
        match eigen_sum_check(&b, 10, seed) {
            Ok(r) => worst = worst.max(r),
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        }
    }
    outcome(worst <= 1e-9, format!("100 tensors x 10 probes: max |l1+l2|/|A| = {worst:.2e}"))
}

fn certificate_positive_path() -> Outcome {
    let p = product_origin();
    let maps = [
        ("I", Matrix::identity(4, 4)),
        ("-I", -Matrix::identity(4, 4)),
        ("J", standard_complex_structure(2)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, f) in maps {
        let report = homothety_certificate(&p, &p, &same_point(&p, f), EXACT_CERTIFICATE_TOL).expect("certificate");
        let mu = report.mu.unwrap_or(f64::NAN);
        pass &= report.verdict == Verdict::Homothety && (mu - 1.0).abs() <= 1e-8;
        parts.push(format!("{label}: {:?} mu-1 = {:.1e}", report.verdict, mu - 1.0));
    }
    outcome(pass, parts.join(", "))
}

fn random_j_linear(rng: &mut impl Rng) -> Matrix {
    let a = Matrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
    let b = Matrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
    let mut f = Matrix::zeros(4, 4);
    f.view_mut((0, 0), (2, 2)).copy_from(&a);
    f.view_mut((0, 2), (2, 2)).copy_from(&(-&b));
    f.view_mut((2, 0), (2, 2)).copy_from(&b);
    f.view_mut((2, 2), (2, 2)).copy_from(&a);
    f
}

fn contrapositive_fuzz() -> Outcome {
    let mut rng = seeded_rng(0xacce);
    let mut least = f64::INFINITY;
    let mut counterexamples = Vec::new();
    for trial in 0..1000u64 {
        let b = random_bochner(10_000 + trial, 2).expect("random Bochner tensor");
        let p = PointData::new(b);
        let map = loop {
            let f = random_j_linear(&mut rng);
            if let Ok(m) = HolomorphicLinearMap::new(p.frame.clone(), p.frame.clone(), f) {
                if m.conformality_defect() > 0.1 {
                    break m;
                }
            }
        };
        let r = preservation_residual(&p, &p, &map).expect("preservation residual");
        least = least.min(r);
        if r <= 1e-6 {
            counterexamples.push(trial);
        }
    }
    outcome(
        counterexamples.is_empty(),
        format!("1000 trials: min preservation residual {least:.3e}, counterexamples {counterexamples:?}"),
    )
}

fn backend_cross_validation() -> Outcome {
    let origin = ChartPoint::origin(2);
    let (mut g_worst, mut r_worst) = (0f64, 0f64);
    for seed in 0..50 {
        let chart = catalog_chart(&CatalogName::RandomPoly { seed, degree: 4 }, 2).expect("random chart");
        let (ge, re) = chart.frame_and_curvature_at(&origin).expect("exact");
        let (gn, rn) = chart.to_numeric().frame_and_curvature_at(&origin).expect("numeric");
        g_worst = g_worst.max(max_abs(&(ge.metric() - gn.metric())));
        r_worst = r_worst.max((&re - &rn).norm() / re.norm());
    }
    outcome(
        g_worst <= 1e-6 && r_worst <= 1e-4,
        format!("50 potentials: metric {g_worst:.2e}, curvature relative {r_worst:.2e}"),
    )
}

fn mu_constancy() -> Outcome {
    let tuples: Vec<_> = [[0.0, 0.0, 0.0, 0.0], [0.3, 0.3, -0.2, -0.2], [-0.5, -0.5, 0.4, 0.4]]
        .iter()
        .map(|p| swap_fixture(p))
        .collect();
    let report = multi_point_constancy(&tuples, EXACT_CERTIFICATE_TOL).expect("constancy");
    let mus: Vec<f64> = report.mus.iter().map(|m| m.unwrap_or(f64::NAN)).collect();
    let spread = report.spread.unwrap_or(f64::NAN);
    let pass = report.constant && mus.iter().all(|m| (m - 1.0).abs() <= 1e-8) && spread <= 1e-8;
    outcome(pass, format!("swap at 3 diagonal points: mu {mus:?}, spread {spread:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("bochner algebraic identities", bochner_identities),
        ("space forms are Bochner-flat", space_forms_flat),
        ("non-flat product fixture", product_nonflat),
        ("eigenvalue trace law", eigenvalue_trace_law),
        ("certificate positive path", certificate_positive_path),
        ("non-conformal maps never preserve B", contrapositive_fuzz),
        ("exact vs finite-difference curvature", backend_cross_validation),
        ("conformal factor constancy", mu_constancy),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("acceptance {} [{tag}] {name}: {} ({:.1}s)", i + 1, out.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!out.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

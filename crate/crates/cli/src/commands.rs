//! Subcommands. Each returns a [`RunReport`]; failures that prevent a report
//! are [`CliError`]s carrying their exit code.

use std::fs;
use std::path::PathBuf;

use bochner::bochner::{bochner_from_curvature, bochner_residuals, BochnerResiduals};
use bochner::chart::{ChartPoint, ChartSpec, KaehlerChart};
use bochner::homothety::{
    homothety_certificate, multi_point_constancy, EXACT_CERTIFICATE_TOL, NUMERIC_CERTIFICATE_TOL,
};
use bochner::rng::{random_vector, seeded_rng};
use bochner::tensor::curvature_symmetry_residuals;
use bochner::{
    bochner::random_kaehler_curvature, CurvatureBundle, Error, HolomorphicLinearMap, HomothetyReport, Matrix,
    PointData, Verdict,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::mapfile::{parse_map_file, MapBlock};
use crate::report::{RunReport, Status};

const DEFAULT_RANDOM_TRIALS: usize = 50;
const DEFAULT_CHART_TRIALS: usize = 5;
/// Chart-mode sample points lie within this fraction of the domain radius
/// (or of 1 for unbounded charts).
const SAMPLE_RADIUS: f64 = 0.3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => Status::InvalidInput.exit_code(),
            CliError::Domain(_) => Status::DomainError.exit_code(),
            CliError::Other(_) => Status::OtherVerdict.exit_code(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::OutsideDomain(_) | Error::NotPositiveDefinite(_) => CliError::Domain(msg),
            Error::Parse { .. }
            | Error::UnknownName(_)
            | Error::DimensionMismatch { .. }
            | Error::UnsupportedDimension { .. }
            | Error::NonRealPotential(_)
            | Error::SingularMap
            | Error::FrameInvalid(_) => CliError::Input(msg),
            _ => CliError::Other(msg),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "bochner", version, about = "Bochner curvature and homothety certificates on Kähler charts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Metric, curvature, Ricci, scalar curvature and Bochner tensor at a point.
    Compute(ComputeArgs),
    /// Identity suite over a chart's sample points or a random corpus.
    Check(CheckArgs),
    /// Homothety certificate for every block of a map file.
    Certify(MapArgs),
    /// Certificates at several points and constancy of the conformal factor.
    Constancy(MapArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Exact,
    Numeric,
}

#[derive(Args, Debug, Clone)]
pub struct ChartArgs {
    /// flat, fubini-study, complex-hyperbolic, product-cp1-cp1 or random-poly.
    #[arg(long)]
    pub chart: Option<String>,
    /// Chart specification file; replaces --chart and the chart flags.
    #[arg(long, value_name = "PATH")]
    pub chart_file: Option<PathBuf>,
    /// Complex dimension.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Seed for random-poly charts and random corpora.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Degree for random-poly charts.
    #[arg(long, default_value_t = 4)]
    pub degree: u32,
    #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
    pub backend: BackendArg,
}

impl ChartArgs {
    fn spec(&self) -> CliResult<ChartSpec> {
        if let Some(path) = &self.chart_file {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            return ChartSpec::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())));
        }
        let name = self.chart.clone().ok_or_else(|| CliError::Input("one of --chart or --chart-file is required".into()))?;
        Ok(ChartSpec {
            name,
            n: self.n,
            seed: self.seed,
            degree: self.degree,
            numeric: self.backend == BackendArg::Numeric,
            radius: None,
            terms: Vec::new(),
        })
    }
}

fn spec_json(spec: &ChartSpec) -> Value {
    json!({
        "name": spec.name,
        "n": spec.n,
        "seed": spec.seed,
        "degree": spec.degree,
        "backend": if spec.numeric { "numeric" } else { "exact" },
        "terms": spec.terms.len(),
    })
}

#[derive(Args, Debug)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub chart: ChartArgs,
    /// Real coordinates x¹..xⁿ, y¹..yⁿ, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub chart: ChartArgs,
    /// Use random curvature bundles instead of a chart.
    #[arg(long, conflicts_with_all = ["chart", "chart_file"])]
    pub random: bool,
    /// Corpus size (random) or number of sample points (chart).
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MapArgs {
    /// Map file with one or more point blocks.
    pub map_file: PathBuf,
    /// Certificate tolerance; defaults to 1e-7, or 1e-3 if any block uses the numeric backend.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

/// Runs the command, writes its report, and returns the exit code.
pub fn run(cli: &Cli) -> CliResult<u8> {
    let (report, output) = match &cli.command {
        Command::Compute(a) => (compute(a)?, &a.output),
        Command::Check(a) => (check(a)?, &a.output),
        Command::Certify(a) => (certify(a)?, &a.output),
        Command::Constancy(a) => (constancy(a)?, &a.output),
    };
    let text = report.to_json();
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if report.status != Status::Ok {
        eprintln!("{}: {:?}", report.command, report.status);
    }
    Ok(report.exit_code)
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn parse_point(text: &str, chart: &KaehlerChart) -> CliResult<ChartPoint> {
    let p: ChartPoint = text.parse().map_err(CliError::Input)?;
    if p.coords.len() != 2 * chart.n() {
        return Err(CliError::Input(format!(
            "point has {} coordinates, expected {} for n = {}",
            p.coords.len(),
            2 * chart.n(),
            chart.n()
        )));
    }
    Ok(p)
}

pub fn compute(args: &ComputeArgs) -> CliResult<RunReport> {
    let spec = args.chart.spec()?;
    let chart = spec.build()?;
    let p = parse_point(&args.point, &chart)?;
    let bundle = CurvatureBundle::at(&chart, &p)?;
    let b = bochner_from_curvature(&bundle)?;
    let res = bochner_residuals(&b)?;
    let curvature_norm = bundle.r.norm();
    let bochner_norm = b.norm();
    let results = json!({
        "metric": rows(bundle.frame.metric()),
        "complex_structure": rows(bundle.frame.complex_structure()),
        "curvature": bundle.r.to_nested(),
        "ricci": rows(&bundle.s.m),
        "scalar_curvature": bundle.tau,
        "bochner": b.tensor.to_nested(),
        "curvature_norm": curvature_norm,
        "bochner_norm": bochner_norm,
        "bochner_ratio": if curvature_norm > 0.0 { bochner_norm / curvature_norm } else { 0.0 },
        "curvature_symmetry": curvature_symmetry_residuals(&bundle.r, &bundle.frame),
        "bochner_residuals": res,
    });
    let inputs = json!({ "chart": spec_json(&spec), "point": p.coords });
    Ok(RunReport::new("compute", inputs, results, Status::Ok))
}

/// Turns a residual relative to `scale` into one relative to
/// `max(reference, 1)`.
fn rescaled(relative: f64, scale: f64, reference: f64) -> f64 {
    if scale == 0.0 {
        return relative;
    }
    relative * scale / reference.max(1.0)
}

struct Tolerances {
    symmetry: f64,
    identity: f64,
    idempotence: f64,
}

#[derive(serde::Serialize)]
struct TrialRecord {
    index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    point: Option<Vec<f64>>,
    curvature_norm: f64,
    bochner_norm: f64,
    residuals: Vec<(String, f64)>,
}

/// Finite-difference noise in `R` passes into `B` unchanged in absolute size,
/// so for numeric charts the Bochner residuals are taken relative to `|R|`.
fn trial_residuals(bundle: &CurvatureBundle, numeric: bool) -> CliResult<(f64, Vec<(String, f64)>)> {
    let b = bochner_from_curvature(bundle)?;
    let r_scale = bundle.r.norm();
    let b_scale = b.norm();
    let b_ref = if numeric { b_scale.max(r_scale) } else { b_scale };
    let BochnerResiduals { symmetries, ricci_contraction, trace_identity, idempotence } = bochner_residuals(&b)?;
    let r_sym = curvature_symmetry_residuals(&bundle.r, &bundle.frame).max();
    Ok((
        b_scale,
        vec![
            ("curvature_symmetry".into(), rescaled(r_sym, r_scale, r_scale)),
            ("bochner_symmetry".into(), rescaled(symmetries.max(), b_scale, b_ref)),
            ("ricci_contraction".into(), rescaled(ricci_contraction, b_scale, b_ref)),
            ("trace_identity".into(), rescaled(trace_identity, b_scale, b_ref)),
            ("idempotence".into(), rescaled(idempotence, b_scale, b_ref)),
        ],
    ))
}

fn limit(name: &str, tol: &Tolerances) -> f64 {
    match name {
        "curvature_symmetry" | "bochner_symmetry" => tol.symmetry,
        "idempotence" => tol.idempotence,
        _ => tol.identity,
    }
}

pub fn check(args: &CheckArgs) -> CliResult<RunReport> {
    let default_trials = if args.random { DEFAULT_RANDOM_TRIALS } else { DEFAULT_CHART_TRIALS };
    let trials = args.trials.unwrap_or(default_trials);
    if trials == 0 {
        return Err(CliError::Input("--trials must be positive".into()));
    }
    let (inputs, tol, records) = if args.random {
        let n = args.chart.n;
        let base = args.chart.seed;
        let records = (0..trials)
            .into_par_iter()
            .map(|i| {
                let seed = base.wrapping_add(i as u64);
                let bundle = random_kaehler_curvature(seed, n)?;
                let (bochner_norm, residuals) = trial_residuals(&bundle, false)?;
                Ok(TrialRecord { index: i, seed: Some(seed), point: None, curvature_norm: bundle.r.norm(), bochner_norm, residuals })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let inputs = json!({ "mode": "random", "n": n, "seed": base, "trials": trials, "generator": "ChaCha8" });
        (inputs, Tolerances { symmetry: 1e-8, identity: 1e-8, idempotence: 1e-9 }, records)
    } else {
        let spec = args.chart.spec()?;
        let chart = spec.build()?;
        let d = 2 * chart.n();
        let radius = SAMPLE_RADIUS * chart.domain_radius().unwrap_or(1.0);
        let mut rng = seeded_rng(args.chart.seed);
        let points: Vec<ChartPoint> = (0..trials)
            .map(|i| {
                if i == 0 {
                    ChartPoint::origin(chart.n())
                } else {
                    let v = random_vector(d, &mut rng);
                    ChartPoint::new((v.normalize() * radius * (i as f64 / trials as f64)).as_slice().to_vec())
                }
            })
            .collect();
        let records = points
            .into_par_iter()
            .enumerate()
            .map(|(i, p)| {
                let (frame, r) = chart.frame_and_curvature_at(&p)?;
                // no symmetry gate: a failure here is a breach to report, not an error
                let bundle = CurvatureBundle::new(frame, r, f64::INFINITY)?;
                let (bochner_norm, residuals) = trial_residuals(&bundle, chart.is_numeric())?;
                Ok(TrialRecord { index: i, seed: None, point: Some(p.coords), curvature_norm: bundle.r.norm(), bochner_norm, residuals })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let t = chart.curvature_tolerance();
        let tol = if chart.is_numeric() {
            Tolerances { symmetry: t, identity: t, idempotence: t }
        } else {
            Tolerances { symmetry: t, identity: 1e-8, idempotence: 1e-9 }
        };
        let inputs = json!({ "mode": "chart", "chart": spec_json(&spec), "seed": args.chart.seed, "trials": trials });
        (inputs, tol, records)
    };

    let names: Vec<String> = records[0].residuals.iter().map(|(k, _)| k.clone()).collect();
    let mut max = serde_json::Map::new();
    for (k, name) in names.iter().enumerate() {
        let m = records.iter().map(|r| r.residuals[k].1).fold(0.0, f64::max);
        max.insert(name.clone(), json!(m));
    }
    let mut worst: Option<(f64, &TrialRecord, &str, f64)> = None;
    let mut breaches = 0;
    for r in &records {
        for (name, v) in &r.residuals {
            let ratio = v / limit(name, &tol);
            breaches += usize::from(ratio > 1.0 || v.is_nan());
            if worst.is_none_or(|(w, ..)| ratio > w) {
                worst = Some((ratio, r, name, *v));
            }
        }
    }
    let worst = worst.map(|(ratio, r, name, v)| {
        json!({ "index": r.index, "seed": r.seed, "point": r.point, "residual": name, "value": v, "ratio_to_tolerance": ratio })
    });
    let status = if breaches == 0 { Status::Ok } else { Status::ResidualBreach };
    if status != Status::Ok {
        eprintln!("worst offender: {}", worst.as_ref().map_or(String::new(), Value::to_string));
    }
    let results = json!({
        "tolerances": { "symmetry": tol.symmetry, "identity": tol.identity, "idempotence": tol.idempotence },
        "max": max,
        "breaches": breaches,
        "worst": worst,
        "trials": records,
    });
    Ok(RunReport::new("check", inputs, results, status))
}

fn verdict_status(v: Verdict) -> Status {
    match v {
        Verdict::Homothety => Status::Ok,
        Verdict::NotPreserving => Status::NotPreserving,
        Verdict::BochnerFlat => Status::BochnerFlat,
        _ => Status::OtherVerdict,
    }
}

fn load_map(args: &MapArgs) -> CliResult<Vec<MapBlock>> {
    let text = fs::read_to_string(&args.map_file)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.map_file.display())))?;
    parse_map_file(&text).map_err(|e| CliError::Input(format!("{}: {e}", args.map_file.display())))
}

struct Loaded {
    p: PointData,
    q: PointData,
    map: HolomorphicLinearMap,
    numeric: bool,
}

fn load_block(block: &MapBlock) -> CliResult<Loaded> {
    let at_block = |e: Error| -> CliError {
        let inner = CliError::from(e);
        let msg = format!("block at line {}: {inner}", block.line);
        match inner {
            CliError::Input(_) => CliError::Input(msg),
            CliError::Domain(_) => CliError::Domain(msg),
            CliError::Other(_) => CliError::Other(msg),
        }
    };
    let chart = block.chart.build().map_err(at_block)?;
    let p = PointData::at(&chart, &block.point_p).map_err(at_block)?;
    let q = PointData::at(&chart, &block.point_q).map_err(at_block)?;
    let map = HolomorphicLinearMap::unchecked(p.frame.clone(), q.frame.clone(), block.f.clone()).map_err(at_block)?;
    Ok(Loaded { p, q, map, numeric: chart.is_numeric() })
}

fn default_tol(loaded: &[Loaded], tol: Option<f64>) -> CliResult<f64> {
    let tol = tol.unwrap_or(if loaded.iter().any(|l| l.numeric) { NUMERIC_CERTIFICATE_TOL } else { EXACT_CERTIFICATE_TOL });
    if tol.is_nan() || tol <= 0.0 {
        return Err(CliError::Input("--tol must be positive".into()));
    }
    Ok(tol)
}

fn block_json(block: &MapBlock) -> Value {
    json!({
        "line": block.line,
        "chart": spec_json(&block.chart),
        "point_p": block.point_p.coords,
        "point_q": block.point_q.coords,
        "F": rows(&block.f),
    })
}

pub fn certify(args: &MapArgs) -> CliResult<RunReport> {
    let blocks = load_map(args)?;
    if blocks.is_empty() {
        return Err(CliError::Input(format!("{}: no blocks", args.map_file.display())));
    }
    let loaded = blocks.iter().map(load_block).collect::<CliResult<Vec<_>>>()?;
    let tol = default_tol(&loaded, args.tol)?;
    let reports: Vec<HomothetyReport> = loaded
        .iter()
        .map(|l| homothety_certificate(&l.p, &l.q, &l.map, tol))
        .collect::<Result<_, _>>()?;
    let status = reports.iter().map(|r| verdict_status(r.verdict)).find(|s| *s != Status::Ok).unwrap_or(Status::Ok);
    let inputs = json!({
        "map_file": args.map_file.display().to_string(),
        "tol": tol,
        "blocks": blocks.iter().map(block_json).collect::<Vec<_>>(),
    });
    let results = json!({ "certificates": reports });
    Ok(RunReport::new("certify", inputs, results, status))
}

pub fn constancy(args: &MapArgs) -> CliResult<RunReport> {
    let blocks = load_map(args)?;
    if blocks.len() < 2 {
        return Err(CliError::Input(format!(
            "{}: constancy needs at least 2 blocks, found {}",
            args.map_file.display(),
            blocks.len()
        )));
    }
    let loaded = blocks.iter().map(load_block).collect::<CliResult<Vec<_>>>()?;
    let tol = default_tol(&loaded, args.tol)?;
    let tuples: Vec<_> = loaded.into_iter().map(|l| (l.p, l.q, l.map)).collect();
    let report = multi_point_constancy(&tuples, tol)?;
    let status = match report.failing_index {
        Some(i) => verdict_status(report.reports[i].verdict),
        None if report.constant => Status::Ok,
        None => Status::ResidualBreach,
    };
    if let Some(i) = report.failing_index {
        eprintln!("first failing block: line {} ({:?})", blocks[i].line, report.reports[i].verdict);
    }
    let inputs = json!({
        "map_file": args.map_file.display().to_string(),
        "tol": tol,
        "blocks": blocks.iter().map(block_json).collect::<Vec<_>>(),
    });
    let results = json!({
        "mus": report.mus,
        "constant": report.constant,
        "spread": report.spread,
        "failing_index": report.failing_index,
        "failing_line": report.failing_index.map(|i| blocks[i].line),
        "certificates": report.reports,
    });
    Ok(RunReport::new("constancy", inputs, results, status))
}

//! Command-line front end: every computation of the library behind one
//! binary with machine-readable output.
//!
//! Output contract: stdout carries data in the selected `--format`
//! (`json` is a full run record, `csv` a fixed-header table, `plot`
//! two whitespace-separated columns); stderr carries diagnostics.
//! Exit code 0 means every embedded residual report passed, 1 means a
//! residual failed, 2 a usage or domain error. Reconciliation warnings
//! never fail a run. Identical flags and seed produce byte-identical
//! JSON.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use confstab::conformal::{
    self, ConformalData, ResidualReport, CURVATURE_LAW_TOL_CURVED, CURVATURE_LAW_TOL_FLAT,
    GRAD_LAW_TOL, HESSIAN_LAW_TOL,
};
use confstab::curvature::{pinch_scan, riemann, sectional};
use confstab::ellipsoid::{self, Ellipsoid, RangeBasis};
use confstab::fields::{ChartBox, MetricField, ScalarField, DEFAULT_STEP};
use confstab::stability;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "confstab", version, about = "Numerical conformal-geometry toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master seed; falls back to CONFSTAB_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write the full JSON run record to a file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Plot,
}

#[derive(Subcommand)]
enum Command {
    /// Stability constants for one or more ambient dimensions.
    Constants(ConstantsArgs),
    /// Ellipsoid point data, conformal profile, extremum and pinching.
    Ellipsoid(EllipsoidArgs),
    /// Residual checks of the conformal and Gauss identities.
    Verify(VerifyArgs),
    /// Semi-axis range with conformal second fundamental form below a threshold.
    Range(RangeArgs),
    /// Randomized audit of the functional bound F(II) <= c1 |II|^2.
    Audit(AuditArgs),
}

#[derive(Args)]
struct ConstantsArgs {
    /// Ambient dimension, a single value like `4` or a range like `6..8`.
    #[arg(long)]
    m: String,
}

#[derive(Args)]
struct EllipsoidArgs {
    /// Polar semi-axis.
    #[arg(long)]
    a: f64,
    /// Ellipsoid dimension.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Profile grid size.
    #[arg(long, default_value_t = 1000)]
    grid: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of {grad, hessian, curvature, gauss, pinch}:{sphere, ellipsoid}.
    #[arg(long)]
    case: String,
    /// Ellipsoid semi-axis for the ellipsoid cases.
    #[arg(long, default_value_t = 0.8)]
    a: f64,
    /// Number of sample points (0 picks the per-case default).
    #[arg(long, default_value_t = 0)]
    points: usize,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    step: f64,
    /// Overrides the per-case tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args)]
struct RangeArgs {
    /// Threshold value, or `auto` for the sharp 4-dimensional constant.
    #[arg(long, default_value = "auto")]
    threshold: String,
    /// `paper`, `measured`, or `both`.
    #[arg(long, default_value = "both")]
    basis: String,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long, default_value_t = 100_000)]
    iters: usize,
    /// Extra projected-ascent refinement steps (informational).
    #[arg(long, default_value_t = 0)]
    ascent_steps: usize,
}

#[derive(Serialize)]
struct RunRecord {
    command: String,
    params: BTreeMap<String, Value>,
    results: Value,
    residuals: Vec<ResidualJson>,
    warnings: Vec<String>,
    seed: u64,
    version: String,
}

#[derive(Serialize)]
struct ResidualJson {
    identity_name: String,
    max_abs_residual: f64,
    points: usize,
    step: f64,
    tolerance: f64,
    pass: bool,
}

impl From<&ResidualReport> for ResidualJson {
    fn from(r: &ResidualReport) -> Self {
        Self {
            identity_name: r.identity_name.clone(),
            max_abs_residual: r.max_abs_residual,
            points: r.points,
            step: r.step,
            tolerance: r.tolerance,
            pass: r.pass,
        }
    }
}

/// Lines emitted for the csv / plot formats.
struct Tabular {
    csv_header: String,
    csv_rows: Vec<String>,
    plot_rows: Vec<String>,
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli
        .seed
        .or_else(|| {
            std::env::var("CONFSTAB_SEED")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);

    let built = match &cli.command {
        Command::Constants(args) => cmd_constants(args, seed),
        Command::Ellipsoid(args) => cmd_ellipsoid(args, seed),
        Command::Verify(args) => cmd_verify(args, seed),
        Command::Range(args) => cmd_range(args, seed),
        Command::Audit(args) => cmd_audit(args, seed),
    };
    let (record, tabular) = match built {
        Ok(v) => v,
        Err(msg) => return usage_error(&msg),
    };

    if let Some(path) = &cli.out {
        let body = serde_json::to_string_pretty(&record).expect("record serializes");
        if let Err(e) = std::fs::write(path, body) {
            return usage_error(&format!("cannot write {}: {e}", path.display()));
        }
    }

    match cli.format {
        Format::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&record).expect("record serializes")
            );
        }
        Format::Csv => {
            println!("{}", tabular.csv_header);
            for row in &tabular.csv_rows {
                println!("{row}");
            }
        }
        Format::Plot => {
            for row in &tabular.plot_rows {
                println!("{row}");
            }
        }
    }
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }

    if record.residuals.iter().all(|r| r.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

type Built = Result<(RunRecord, Tabular), String>;

fn parse_m_range(spec: &str) -> Result<Vec<usize>, String> {
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| format!("bad m range `{spec}`"))?;
        let hi: usize = hi.trim().parse().map_err(|_| format!("bad m range `{spec}`"))?;
        if lo > hi {
            return Err(format!("empty m range `{spec}`"));
        }
        Ok((lo..=hi).collect())
    } else {
        Ok(vec![spec
            .trim()
            .parse()
            .map_err(|_| format!("bad m value `{spec}`"))?])
    }
}

fn cmd_constants(args: &ConstantsArgs, seed: u64) -> Built {
    let ms = parse_m_range(&args.m)?;
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    let mut plot_rows = Vec::new();
    for (i, &m) in ms.iter().enumerate() {
        if m < 3 {
            return Err(format!("m must be at least 3, got {m}"));
        }
        for n in 1..=(m - 2) {
            let c = stability::constants(m, n).map_err(|e| e.to_string())?;
            rows.push(json!({
                "m": c.m, "n": c.n, "p": c.p, "xi": c.xi,
                "eps0": c.eps0, "c2": c.c2, "c1": c.c1,
                "c_sharp": c.c_sharp, "c_rough": c.c_rough,
                "c_prime_sharp": c.c_prime_sharp, "c_prime_rough": c.c_prime_rough,
            }));
            csv_rows.push(format!(
                "{},{},{},{},{},{},{},{},{}",
                c.m,
                c.n,
                c.p,
                c.xi,
                fmt17(c.eps0),
                fmt17(c.c2),
                fmt17(c.c1),
                fmt17(c.c_sharp),
                fmt17(c.c_rough)
            ));
            plot_rows.push(format!("{} {}", c.n, fmt17(c.c_sharp)));
        }
        if i + 1 < ms.len() {
            plot_rows.push(String::new());
        }
    }
    let record = RunRecord {
        command: "constants".into(),
        params: BTreeMap::from([("m".into(), json!(args.m))]),
        results: json!({ "rows": rows }),
        residuals: vec![],
        warnings: vec![],
        seed,
        version: VERSION.into(),
    };
    Ok((
        record,
        Tabular {
            csv_header: "m,n,p,xi,eps0,c2,c1,c_sharp,c_rough".into(),
            csv_rows,
            plot_rows,
        },
    ))
}

fn cmd_ellipsoid(args: &EllipsoidArgs, seed: u64) -> Built {
    if args.grid < 2 {
        return Err("grid must be at least 2".into());
    }
    let e = Ellipsoid::new(args.a, args.n).map_err(|err| err.to_string())?;
    let a2 = args.a * args.a;

    let mut samples = Vec::new();
    for frac in [0.1, 0.5, 0.9] {
        let t = a2 * frac;
        let r2 = 1.0 - frac;
        let mut x = vec![0.0; args.n];
        x[0] = r2.sqrt();
        let d = e.point_data(&x).map_err(|err| err.to_string())?;
        samples.push(json!({
            "t": t, "f": d.f, "w": d.w, "gradf_sq": d.gradf_sq,
            "h_trace": d.h_trace, "norm_sq_h": d.norm_sq_h,
            "e_u": d.e_u, "u_normal": d.u_normal, "htilde_sq": d.htilde_sq,
        }));
    }

    let mut grid_rows = Vec::new();
    let mut csv_rows = Vec::new();
    let mut plot_rows = Vec::new();
    for k in 0..=args.grid {
        let t = a2 * k as f64 / args.grid as f64;
        let g = e.rational_profile(t).map_err(|err| err.to_string())?;
        let ht = if k == 0 || k == args.grid {
            e.closed_form_htilde_sq(t).map_err(|err| err.to_string())?
        } else {
            e.oracle_htilde_sq(t).map_err(|err| err.to_string())?
        };
        grid_rows.push(json!([t, g, ht]));
        csv_rows.push(format!("{},{},{}", fmt17(t), fmt17(g), fmt17(ht)));
        plot_rows.push(format!("{} {}", fmt17(t), fmt17(ht)));
    }

    let reconciliation = e.closed_vs_oracle(args.grid.max(16)).map_err(|err| err.to_string())?;
    let max = e.max_conformal_ii();
    let mut warnings = Vec::new();
    if max.agrees == Some(false) {
        warnings.push("paper_closed_form_disagreement".to_string());
    }

    let record = RunRecord {
        command: "ellipsoid".into(),
        params: BTreeMap::from([
            ("a".into(), json!(args.a)),
            ("n".into(), json!(args.n)),
            ("grid".into(), json!(args.grid)),
        ]),
        results: json!({
            "samples": samples,
            "profile": grid_rows,
            "max_conf_ii": {
                "max_value": max.max_value,
                "argmax_t": max.argmax_t,
                "paper_value": max.paper_value,
                "agrees": max.agrees,
            },
            "pinching_delta": e.pinching_delta(),
        }),
        residuals: vec![(&reconciliation).into()],
        warnings,
        seed,
        version: VERSION.into(),
    };
    Ok((
        record,
        Tabular {
            csv_header: "t,G,htilde_sq".into(),
            csv_rows,
            plot_rows,
        },
    ))
}

fn bilinear_field(chart: ChartBox) -> ScalarField {
    let dim = chart.dim();
    ScalarField::new(chart, |x| x[0] * x[1])
        .with_gradient(move |x| {
            let mut g = DVector::zeros(dim);
            g[0] = x[1];
            g[1] = x[0];
            g
        })
        .with_hessian(move |_| {
            let mut h = DMatrix::zeros(dim, dim);
            h[(0, 1)] = 1.0;
            h[(1, 0)] = 1.0;
            h
        })
}

fn cmd_verify(args: &VerifyArgs, seed: u64) -> Built {
    let (check, target) = args
        .case
        .split_once(':')
        .ok_or_else(|| format!("case `{}` is not of the form check:target", args.case))?;
    let step = args.step;
    let mut warnings = Vec::new();

    // Conformal data: flat chart with the stereographic factor for the
    // sphere target, induced ellipsoid metric with the restricted factor
    // otherwise.
    let build_conformal = || -> Result<(ConformalData, ChartBox), String> {
        match target {
            "sphere" => {
                let chart = ChartBox::cube(4, 0.8, 3).map_err(|e| e.to_string())?;
                let u = conformal::stereographic_factor(chart.clone());
                Ok((ConformalData::new(u, MetricField::flat(chart.clone())), chart))
            }
            "ellipsoid" => {
                let e = Ellipsoid::new(args.a, 4).map_err(|e| e.to_string())?;
                let chart = ChartBox::cube(4, 0.45, 3).map_err(|e| e.to_string())?;
                let u = e.conformal_factor_field(0.45).map_err(|e| e.to_string())?;
                let base = e.immersion(0.45).map_err(|e| e.to_string())?.induced_metric();
                Ok((ConformalData::new(u, base), chart))
            }
            other => Err(format!("unknown target `{other}`")),
        }
    };

    let reports: Vec<ResidualReport> = match check {
        "grad" => {
            let points = if args.points == 0 { 50 } else { args.points };
            let tol = args.tolerance.unwrap_or(GRAD_LAW_TOL);
            let (data, chart) = build_conformal()?;
            let f = ScalarField::coordinate(chart, 0);
            vec![data
                .check_grad_law(&f, points, step, seed, tol)
                .map_err(|e| e.to_string())?]
        }
        "hessian" => {
            let points = if args.points == 0 { 25 } else { args.points };
            let tol = args.tolerance.unwrap_or(HESSIAN_LAW_TOL);
            let (data, chart) = build_conformal()?;
            let f = bilinear_field(chart);
            vec![data
                .check_hessian_law(&f, points, step, seed, tol)
                .map_err(|e| e.to_string())?]
        }
        "curvature" => {
            let points = if args.points == 0 { 25 } else { args.points };
            let default_tol = if target == "sphere" {
                CURVATURE_LAW_TOL_FLAT
            } else {
                CURVATURE_LAW_TOL_CURVED
            };
            let tol = args.tolerance.unwrap_or(default_tol);
            let (data, _) = build_conformal()?;
            let mut reports = vec![data
                .check_curvature_law(points, step, seed, tol)
                .map_err(|e| e.to_string())?];
            if target == "sphere" {
                // The rescaled flat metric is the round sphere: sectional
                // curvatures must come out 1.
                let m = data.rescaled_metric();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let pts = m.chart().sample_interior(points.min(10), 0.05, &mut rng);
                let mut worst = 0.0f64;
                for x in &pts {
                    let r = riemann(&m, x, step).map_err(|e| e.to_string())?;
                    let g = m.value(x);
                    for _ in 0..4 {
                        let u = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
                        let v = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
                        match sectional(&r, &g, &u, &v) {
                            Ok(k) => worst = worst.max((k - 1.0).abs()),
                            Err(_) => continue,
                        }
                    }
                }
                reports.push(ResidualReport::new(
                    "sphere_sectional_unit",
                    worst,
                    pts.len(),
                    step,
                    args.tolerance.unwrap_or(1e-4),
                ));
            }
            reports
        }
        "gauss" => {
            let points = if args.points == 0 { 100 } else { args.points };
            let tol = args.tolerance.unwrap_or(1e-5);
            let a = if target == "sphere" { 1.0 } else { args.a };
            let imm = Ellipsoid::new(a, 4)
                .map_err(|e| e.to_string())?
                .immersion(0.45)
                .map_err(|e| e.to_string())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for _ in 0..points {
                let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.35..0.35)).collect();
                worst = worst.max(imm.gauss_residual(&x, step).map_err(|e| e.to_string())?);
            }
            vec![ResidualReport::new("gauss_equation", worst, points, step, tol)]
        }
        "pinch" => {
            let points = if args.points == 0 { 30 } else { args.points };
            let a = if target == "sphere" { 1.0 } else { args.a };
            let e = Ellipsoid::new(a, 4).map_err(|e| e.to_string())?;
            let metric = e
                .immersion(0.45)
                .map_err(|e| e.to_string())?
                .induced_metric();
            let chart = metric.chart().clone();
            let report =
                pinch_scan(&metric, &chart, points, 6, seed).map_err(|e| e.to_string())?;
            if target == "sphere" {
                let resid = report.delta.map_or(f64::INFINITY, |d| (d - 1.0).abs());
                vec![ResidualReport::new(
                    "pinch_round_sphere_delta",
                    resid,
                    points,
                    step,
                    args.tolerance.unwrap_or(1e-5),
                )]
            } else {
                // Containment in the published sectional-curvature interval.
                let (lo, hi) = if a <= 1.0 {
                    (a * a, a.powi(-4))
                } else {
                    (a.powi(-4), a * a)
                };
                let violation = (lo - report.k_min).max(report.k_max - hi).max(0.0);
                if violation > 1e-3 {
                    warnings.push(format!(
                        "pinch_reconciliation: measured K in [{:.6}, {:.6}] vs published [{lo:.6}, {hi:.6}]",
                        report.k_min, report.k_max
                    ));
                }
                vec![ResidualReport::new(
                    "pinch_published_interval",
                    violation,
                    points,
                    step,
                    args.tolerance.unwrap_or(1e-3),
                )]
            }
        }
        other => return Err(format!("unknown check `{other}`")),
    };

    let results = json!({
        "case": args.case,
        "reports": reports.iter().map(|r| json!({
            "identity_name": r.identity_name,
            "max_abs_residual": r.max_abs_residual,
            "pass": r.pass,
        })).collect::<Vec<_>>(),
    });
    let record = RunRecord {
        command: "verify".into(),
        params: BTreeMap::from([
            ("case".into(), json!(args.case)),
            ("a".into(), json!(args.a)),
            ("points".into(), json!(args.points)),
            ("step".into(), json!(args.step)),
        ]),
        results,
        residuals: reports.iter().map(ResidualJson::from).collect(),
        warnings,
        seed,
        version: VERSION.into(),
    };
    let csv_rows = reports
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                r.identity_name,
                fmt17(r.max_abs_residual),
                r.points,
                fmt17(r.step),
                fmt17(r.tolerance),
                r.pass
            )
        })
        .collect();
    let plot_rows = reports
        .iter()
        .map(|r| format!("{} {}", fmt17(r.max_abs_residual), fmt17(r.tolerance)))
        .collect();
    Ok((
        record,
        Tabular {
            csv_header: "identity,max_abs_residual,points,step,tolerance,pass".into(),
            csv_rows,
            plot_rows,
        },
    ))
}

fn cmd_range(args: &RangeArgs, seed: u64) -> Built {
    let threshold = if args.threshold == "auto" {
        stability::c_prime(4).map_err(|e| e.to_string())?
    } else {
        let t: f64 = args
            .threshold
            .parse()
            .map_err(|_| format!("bad threshold `{}`", args.threshold))?;
        if !(t > 0.0) {
            return Err("threshold must be positive".into());
        }
        t
    };
    let bases: Vec<RangeBasis> = match args.basis.as_str() {
        "paper" => vec![RangeBasis::PaperClosedForm],
        "measured" => vec![RangeBasis::MeasuredMax],
        "both" => vec![RangeBasis::PaperClosedForm, RangeBasis::MeasuredMax],
        other => return Err(format!("unknown basis `{other}` (expected paper|measured|both)")),
    };
    let mut results = serde_json::Map::new();
    let mut warnings = Vec::new();
    let mut csv_rows = Vec::new();
    let mut plot_rows = Vec::new();
    for basis in bases {
        let r = ellipsoid::admissible_range(threshold, basis).map_err(|e| e.to_string())?;
        results.insert(
            basis.as_str().to_string(),
            json!({ "a1": r.a1, "a2": r.a2 }),
        );
        if let Some(msg) = r.reconciliation {
            warnings.push(msg);
        }
        csv_rows.push(format!("{},{},{}", basis.as_str(), fmt17(r.a1), fmt17(r.a2)));
        plot_rows.push(format!("{} {}", fmt17(r.a1), fmt17(r.a2)));
    }
    let record = RunRecord {
        command: "range".into(),
        params: BTreeMap::from([
            ("threshold".into(), json!(args.threshold)),
            ("threshold_value".into(), json!(threshold)),
            ("basis".into(), json!(args.basis)),
        ]),
        results: json!({ "ranges": Value::Object(results) }),
        residuals: vec![],
        warnings,
        seed,
        version: VERSION.into(),
    };
    Ok((
        record,
        Tabular {
            csv_header: "basis,a1,a2".into(),
            csv_rows,
            plot_rows,
        },
    ))
}

fn cmd_audit(args: &AuditArgs, seed: u64) -> Built {
    if args.iters == 0 {
        return Err("iteration count must be at least 1".into());
    }
    let audit =
        stability::bound_audit(args.n, args.p, args.q, args.iters, seed).map_err(|e| e.to_string())?;
    let mixed = stability::AlgII::unit_mixed(args.n, args.p, args.q);
    let mixed_ratio = stability::stability_functional(&mixed).map_err(|e| e.to_string())?
        / mixed.norm_sq();
    let ascent_ratio = if args.ascent_steps > 0 {
        Some(
            stability::ratio_ascent(args.n, args.p, args.q, args.ascent_steps, seed)
                .map_err(|e| e.to_string())?,
        )
    } else {
        None
    };
    // The audit is itself the residual check: violations must be zero.
    let report = ResidualReport::new(
        "functional_bound_audit",
        audit.violations as f64,
        args.iters,
        0.0,
        0.5,
    );
    let record = RunRecord {
        command: "audit".into(),
        params: BTreeMap::from([
            ("n".into(), json!(args.n)),
            ("p".into(), json!(args.p)),
            ("q".into(), json!(args.q)),
            ("iters".into(), json!(args.iters)),
        ]),
        results: json!({
            "max_ratio": audit.max_ratio,
            "c1": audit.c1,
            "violations": audit.violations,
            "mixed_ratio": mixed_ratio,
            "ascent_ratio": ascent_ratio,
        }),
        residuals: vec![(&report).into()],
        warnings: vec![],
        seed,
        version: VERSION.into(),
    };
    let csv_rows = vec![format!(
        "{},{},{},{},{},{},{},{}",
        args.n,
        args.p,
        args.q,
        args.iters,
        seed,
        fmt17(audit.max_ratio),
        fmt17(audit.c1),
        audit.violations
    )];
    let plot_rows = vec![format!("{} {}", fmt17(audit.max_ratio), fmt17(audit.c1))];
    Ok((
        record,
        Tabular {
            csv_header: "n,p,q,iters,seed,max_ratio,c1,violations".into(),
            csv_rows,
            plot_rows,
        },
    ))
}

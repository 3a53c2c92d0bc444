//! The `ddestab` command line.
//!
//! Every command prints one JSON document on stdout (or a plain-text table
//! with `--pretty`) and reports diagnostics on stderr. Exit codes:
//!
//! | command    | 0                  | 1                          | 2             |
//! |------------|--------------------|----------------------------|---------------|
//! | `check`    | certified stable   | not certified              | invalid input |
//! | `simulate` | decaying           | not decaying, inconclusive | invalid input |
//! | `sweep`    | outputs written    | (unused)                   | invalid input |
//! | `verify`   | no contradiction   | certified but not decaying | invalid input |

use std::ffi::OsString;
use std::io::Write as _;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::certificate::{Certificate, BOUNDARY_RTOL};
use crate::criteria::{check_all, Analysis, CheckReport, CriterionId};
use crate::eqspec::{CoefficientFn, EquationForm, EquationSpec, NormSettings};
use crate::solver::{
    default_horizon, default_step, estimate_decay, first_order_positivity_probe, fundamental_function, integrate,
    verify_variation_of_constants, DecayEstimate, DecayVerdict, InitialValueProblem, DECAY_THRESHOLD,
    FIXED_POINT_TOL, RESIDUAL_MAX,
};
use crate::sweep::{run_sweep, thread_cap, SweepPlan};


// stdout writes that tolerate a closed pipe (`ddestab check ... | head`)
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = write!(std::io::stdout().lock(), $($arg)*);
    }};
}

macro_rules! outln {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}
pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Forcing used by `verify` for the variation-of-constants check.
const VOC_FORCING: &str = "sin(t)";
/// Length of the variation-of-constants check interval.
const VOC_SPAN: f64 = 5.0;
const VOC_MAX_STEP: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "ddestab", version, about = "Exponential stability certificates for damped second-order delay equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every stability criterion on a spec.
    Check {
        spec: PathBuf,
        #[command(flatten)]
        norms: NormArgs,
        /// Comma-separated criterion ids (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<String>>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Integrate the equation and estimate the decay rate.
    Simulate {
        spec: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Initial value x(t0); the history is constant at this value.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        x0: f64,
        /// Initial derivative x'(t0); the derivative history is zero.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        x0p: f64,
        /// Write the trajectory as CSV (t,x,dx) to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        fmt: OutputArgs,
    },
    /// Sweep two parameters and write grid, boundary and manifest files.
    Sweep {
        plan: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        norms: NormArgs,
        /// Comma-separated criterion ids, overriding the plan's filter.
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<String>>,
        #[command(flatten)]
        fmt: OutputArgs,
    },
    /// Check, simulate and cross-validate one spec.
    Verify {
        spec: PathBuf,
        #[command(flatten)]
        norms: NormArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated criterion ids (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<String>>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct NormArgs {
    /// Sampling window for norms of non-constant coefficients.
    #[arg(long)]
    window: Option<f64>,
    /// Number of sampling points in the window.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Integration step (default: min(0.01, smallest positive lag / 4)).
    #[arg(long)]
    step: Option<f64>,
    /// Final time (default: t0 + 40 characteristic times).
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Print a human-readable table instead of JSON.
    #[arg(long)]
    pretty: bool,
    /// Print the parsed, normalized input and exit.
    #[arg(long)]
    dump_spec: bool,
}

/// Provenance of one run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub input_sha256: String,
    pub tool_version: String,
    pub settings: Value,
    pub timestamp: String,
}

impl RunManifest {
    fn new(command: &str, input: &[u8], settings: Value) -> Self {
        RunManifest {
            command: command.into(),
            input_sha256: hex::encode(Sha256::digest(input)),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            settings,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Check { spec, norms, criteria, out } => cmd_check(&spec, &norms, criteria.as_deref(), &out),
        Command::Simulate { spec, run, x0, x0p, out, fmt } => cmd_simulate(&spec, &run, x0, x0p, out.as_deref(), &fmt),
        Command::Sweep { plan, out, norms, criteria, fmt } => cmd_sweep(&plan, &out, &norms, criteria.as_deref(), &fmt),
        Command::Verify { spec, norms, run, criteria, out } => cmd_verify(&spec, &norms, &run, criteria.as_deref(), &out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("ddestab: {msg}");
            EXIT_INVALID
        }
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(Failure(format!("{}: empty input", path.display())));
    }
    Ok(bytes)
}

fn load_spec(path: &Path, norms: Option<&NormArgs>) -> Result<(Vec<u8>, EquationSpec), Failure> {
    let bytes = read_input(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let mut spec = EquationSpec::from_json_str(text).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    if let Some(n) = norms {
        apply_norm_overrides(&mut spec, n);
    }
    spec.validate().map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    Ok((bytes, spec))
}

fn apply_norm_overrides(spec: &mut EquationSpec, n: &NormArgs) {
    if n.window.is_some() {
        spec.norm_window = n.window;
    }
    if n.grid.is_some() {
        spec.norm_grid = n.grid;
    }
}

fn parse_criteria(list: Option<&[String]>) -> Result<Option<Vec<CriterionId>>, Failure> {
    list.map(|l| l.iter().map(|s| s.parse::<CriterionId>().map_err(Failure)).collect())
        .transpose()
}

fn emit(value: &Value) {
    outln!("{}", serde_json::to_string_pretty(value).expect("JSON values serialize"));
}

fn run_settings(spec: &EquationSpec, run: &RunArgs) -> Result<(f64, f64), Failure> {
    let step = run.step.unwrap_or_else(|| default_step(spec));
    let horizon = run.horizon.unwrap_or_else(|| default_horizon(spec));
    if !(step > 0.0 && step.is_finite()) {
        return Err(Failure(format!("--step must be positive, got {step}")));
    }
    if !(horizon > spec.t0 && horizon.is_finite()) {
        return Err(Failure(format!("--horizon must exceed t0 = {}, got {horizon}", spec.t0)));
    }
    Ok((step, horizon))
}

fn norm_settings_json(s: &NormSettings) -> Value {
    json!({"norm_window": s.window, "norm_grid": s.grid, "boundary_rtol": BOUNDARY_RTOL})
}

fn decay_settings_json() -> Value {
    json!({"decay_threshold": DECAY_THRESHOLD, "residual_max": RESIDUAL_MAX, "fixed_point_tol": FIXED_POINT_TOL})
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Some(m), Value::Object(extra)) = (a.as_object_mut(), b) {
        m.extend(extra);
    }
    a
}

fn cmd_check(path: &Path, norms: &NormArgs, criteria: Option<&[String]>, out: &OutputArgs) -> Result<i32, Failure> {
    let (bytes, spec) = load_spec(path, Some(norms))?;
    if out.dump_spec {
        emit(&spec.to_json());
        return Ok(EXIT_OK);
    }
    let filter = parse_criteria(criteria)?;
    let an = Analysis::new(&spec)?;
    let report = check_all(&an, filter.as_deref());
    let manifest = RunManifest::new("check", &bytes, norm_settings_json(&an.settings));
    if out.pretty {
        out!("{}", check_table(&report));
    } else {
        emit(&json!({
            "manifest": manifest,
            "spec": spec.to_json(),
            "certificates": report.certificates,
            "summary": report.summary,
        }));
    }
    Ok(if report.summary.certified { EXIT_OK } else { EXIT_NEGATIVE })
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "-".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.6}")
    }
}

fn check_table(report: &CheckReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<6} {:<10} {:<9} {:>14} {:<2} {:>14} {:>14} {:<7}",
        "id", "applicable", "satisfied", "lhs", "", "rhs", "margin", "norms"
    );
    for c in &report.certificates {
        let rel = if c.relation == crate::certificate::Relation::Less { "<" } else { "<=" };
        let _ = writeln!(
            s,
            "{:<6} {:<10} {:<9} {:>14} {:<2} {:>14} {:>14} {:<7}",
            c.criterion_id,
            c.applicable,
            c.satisfied,
            fmt_num(c.lhs),
            rel,
            fmt_num(c.rhs),
            fmt_num(c.margin),
            if c.exactness.is_exact() { "exact" } else { "sampled" }
        );
    }
    let sm = &report.summary;
    let _ = writeln!(s, "verdict: {}", sm.verdict);
    if let Some(best) = &sm.best_criterion {
        let margin = if sm.best_margin_unbounded { "unbounded".into() } else { fmt_num(sm.best_margin.unwrap_or(f64::NAN)) };
        let _ = writeln!(s, "best: {best} (margin {margin}{})", if sm.rigorous { "" } else { ", sampled norms" });
    }
    s
}

fn decay_lines(d: &DecayEstimate) -> String {
    format!(
        "verdict: {:?}\nlambda_hat: {}\nM_hat: {}\nfit window: [{}, {}]\nresidual: {}\n",
        d.verdict,
        fmt_num(d.lambda_hat),
        fmt_num(d.m_hat),
        fmt_num(d.fit_window[0]),
        fmt_num(d.fit_window[1]),
        fmt_num(d.residual)
    )
}

fn cmd_simulate(
    path: &Path,
    run: &RunArgs,
    x0: f64,
    x0p: f64,
    out: Option<&Path>,
    fmt: &OutputArgs,
) -> Result<i32, Failure> {
    let (bytes, spec) = load_spec(path, None)?;
    if fmt.dump_spec {
        emit(&spec.to_json());
        return Ok(EXIT_OK);
    }
    let (step, horizon) = run_settings(&spec, run)?;
    let ivp = InitialValueProblem::new(spec, x0, x0p, horizon);
    let traj = integrate(&ivp, step)?;
    let decay = estimate_decay(&traj);
    if let Some(p) = out {
        let file = fs::File::create(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
        traj.write_csv(std::io::BufWriter::new(file))?;
    }
    let settings = merge(
        json!({"x0": x0, "x0p": x0p, "step": traj.step(), "horizon": horizon, "time_scale": traj.time_scale()}),
        decay_settings_json(),
    );
    let manifest = RunManifest::new("simulate", &bytes, settings);
    if fmt.pretty {
        out!("{}", decay_lines(&decay));
    } else {
        emit(&json!({
            "manifest": manifest,
            "decay": decay,
            "nodes": traj.len(),
            "trajectory_csv": out.map(|p| p.display().to_string()),
        }));
    }
    Ok(if decay.verdict == DecayVerdict::Decaying { EXIT_OK } else { EXIT_NEGATIVE })
}

fn cmd_sweep(
    path: &Path,
    out: &Path,
    norms: &NormArgs,
    criteria: Option<&[String]>,
    fmt: &OutputArgs,
) -> Result<i32, Failure> {
    let bytes = read_input(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let mut plan = SweepPlan::from_json_str(text).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    apply_norm_overrides(&mut plan.base, norms);
    if let Some(c) = parse_criteria(criteria)? {
        plan.criteria = Some(c);
    }
    plan.validate()?;
    if fmt.dump_spec {
        emit(&plan.to_json());
        return Ok(EXIT_OK);
    }
    let sweep = run_sweep(&plan)?;
    fs::create_dir_all(out).map_err(|e| Failure(format!("{}: {e}", out.display())))?;
    let write = |name: &str, f: &dyn Fn(fs::File) -> Result<(), csv::Error>| -> Result<PathBuf, Failure> {
        let p = out.join(name);
        let file = fs::File::create(&p).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
        f(file)?;
        Ok(p)
    };
    let grid = write("grid.csv", &|f| sweep.write_grid_csv(std::io::BufWriter::new(f)))?;
    let boundary = write("boundary.csv", &|f| sweep.write_boundary_csv(std::io::BufWriter::new(f)))?;
    let stats = sweep.stats();
    let settings = merge(
        json!({
            "plan": plan.to_json(),
            "threads": thread_cap(),
            "boundary_rtol": BOUNDARY_RTOL,
        }),
        if plan.simulate { decay_settings_json() } else { json!({}) },
    );
    let manifest = RunManifest::new("sweep", &bytes, settings);
    let doc = json!({
        "manifest": manifest,
        "stats": stats,
        "columns": {"axis1": plan.axis1.param.as_str(), "axis2": plan.axis2.param.as_str()},
        "files": {"grid": "grid.csv", "boundary": "boundary.csv"},
    });
    let manifest_path = out.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&doc)? + "\n")
        .map_err(|e| Failure(format!("{}: {e}", manifest_path.display())))?;
    if fmt.pretty {
        outln!(
            "{} points, {} certified, {} errors, {} simulated ({} decaying, {} soundness violations)",
            stats.points, stats.certified, stats.errors, stats.simulated, stats.decaying, stats.soundness_violations
        );
        outln!("wrote {}, {}, {}", grid.display(), boundary.display(), manifest_path.display());
    } else {
        emit(&doc);
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct Agreement {
    certified: bool,
    /// All certifying norms were exact.
    rigorous: bool,
    verdict: DecayVerdict,
    row: &'static str,
    /// Certified stable yet simulated as not decaying.
    soundness_violation: bool,
}

fn agreement(report: &CheckReport, decay: &DecayEstimate) -> Agreement {
    let certified = report.summary.certified;
    let rigorous = report
        .certificates
        .iter()
        .any(|c: &Certificate| c.satisfied && c.exactness.is_exact());
    let row = match (certified, decay.verdict) {
        (true, DecayVerdict::Decaying) => "certified / decaying",
        (true, DecayVerdict::NotDecaying) => "certified / not decaying",
        (true, DecayVerdict::Inconclusive) => "certified / inconclusive",
        (false, DecayVerdict::Decaying) => "not certified / decaying (expected gap: criteria are sufficient only)",
        (false, DecayVerdict::NotDecaying) => "not certified / not decaying",
        (false, DecayVerdict::Inconclusive) => "not certified / inconclusive",
    };
    Agreement {
        certified,
        rigorous,
        verdict: decay.verdict,
        row,
        soundness_violation: certified && rigorous && decay.verdict == DecayVerdict::NotDecaying,
    }
}

fn cmd_verify(
    path: &Path,
    norms: &NormArgs,
    run: &RunArgs,
    criteria: Option<&[String]>,
    out: &OutputArgs,
) -> Result<i32, Failure> {
    let (bytes, spec) = load_spec(path, Some(norms))?;
    if out.dump_spec {
        emit(&spec.to_json());
        return Ok(EXIT_OK);
    }
    let filter = parse_criteria(criteria)?;
    let an = Analysis::new(&spec)?;
    let report = check_all(&an, filter.as_deref());
    let (step, horizon) = run_settings(&spec, run)?;

    let traj = fundamental_function(&spec, spec.t0, horizon, step)?;
    let decay = estimate_decay(&traj);
    let forcing = CoefficientFn::parse(VOC_FORCING)?;
    let voc_step = step.min(VOC_MAX_STEP);
    let voc = verify_variation_of_constants(&spec, &forcing, spec.t0 + VOC_SPAN, voc_step)?;
    let positivity = if spec.form == EquationForm::PureDelay && !spec.g.is_identity() {
        Some(first_order_positivity_probe(&spec.a, &spec.g, spec.t0, spec.t0 + 20.0 * traj.time_scale(), step)?)
    } else {
        None
    };
    let agree = agreement(&report, &decay);

    let settings = merge(
        merge(
            norm_settings_json(&an.settings),
            json!({
                "step": traj.step(),
                "horizon": horizon,
                "time_scale": traj.time_scale(),
                "voc_forcing": VOC_FORCING,
                "voc_span": VOC_SPAN,
                "voc_step": voc_step,
            }),
        ),
        decay_settings_json(),
    );
    let manifest = RunManifest::new("verify", &bytes, settings);
    if out.pretty {
        out!("{}", check_table(&report));
        out!("{}", decay_lines(&decay));
        outln!("variation of constants residual: {:e}", voc.max_residual);
        if let Some(p) = positivity {
            outln!("first-order kernel positive on samples: {p}");
        }
        outln!("agreement: {}", agree.row);
    } else {
        emit(&json!({
            "manifest": manifest,
            "spec": spec.to_json(),
            "certificates": report.certificates,
            "summary": report.summary,
            "decay": decay,
            "variation_of_constants": voc,
            "first_order_positivity": positivity,
            "agreement": agree,
        }));
    }
    Ok(if agree.soundness_violation { EXIT_NEGATIVE } else { EXIT_OK })
}

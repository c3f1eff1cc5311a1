//! `orlicz`: premia, HG risk measures, dual certificates, conjugates and
//! property suites over CSV data.
//!
//! Every command writes one document `{command, inputs, result,
//! diagnostics}` (JSON by default). Exit codes: 0 success, 1 computation
//! error, 2 input error, 3 property-suite failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use orlicz_core::dual::{default_grid_step, dual_search_with, hg_dual_check, DualKind, DualSearchOptions};
use orlicz_core::harness::{builtin_panel, run_suites, SUITES};
use orlicz_core::hg::hg_risk_measure;
use orlicz_core::orlicz::parse_phi_spec;
use orlicz_core::premium::{orlicz_premium, premium};
use orlicz_core::prob::DataMode;
use orlicz_core::{DiscreteDistribution, OrliczError, OrliczFunction, RandomVariable, DEFAULT_TOL};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "orlicz", version, about = "Orlicz premia and related risk measures on finite distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Orlicz premium H_Φ(X).
    Premium {
        #[command(flatten)]
        common: Common,
        /// Always use the bisection solver, even when a closed form exists.
        #[arg(long)]
        generic: bool,
    },
    /// Haezendonck–Goovaerts risk measure inf_x { x + H_Φ((X−x)₊) }.
    Hg {
        #[command(flatten)]
        common: Common,
        /// Write the evaluated profile (x, g(x)) to this CSV file.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Search dual certificates and check weak duality against the primal.
    DualVerify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Kind::Arith)]
        kind: Kind,
        /// Simplex grid step; defaults to 0.01 for up to three outcomes and 0.05 beyond.
        #[arg(long)]
        grid: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Convex conjugate Ψ(y) = sup_{x ≥ 0} (xy − Φ(x)).
    Conjugate {
        #[arg(long)]
        phi: String,
        /// Points to evaluate; repeat the flag or separate with commas.
        #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true)]
        y: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Output::Json)]
        output: Output,
    },
    /// Seeded property suites over one function or the built-in panel.
    Properties {
        /// Orlicz function; the built-in panel when omitted.
        #[arg(long)]
        phi: Option<String>,
        /// One of the suite names; all suites when omitted.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Output::Json)]
        output: Output,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Orlicz function, e.g. `power:2`, `expectile:0.8`, `lpq:1,2,2,1`, `pwl:knots.csv`.
    #[arg(long)]
    phi: String,
    /// CSV file: `value,probability` rows (dist) or one value per row (sample).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Dist)]
    mode: Mode,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Output::Json)]
    output: Output,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Dist,
    Sample,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Output {
    Json,
    Text,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Arith,
    Geom,
    /// HG risk measure against sup E_Q[X] over measures with penalty one.
    Hg,
}

enum CliError {
    Input(String),
    Compute(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Compute(_) => 1,
            CliError::Input(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Compute(m) => m,
        }
    }
}

/// Errors raised while reading inputs are input errors; so are unmet
/// preconditions of a computation. Everything else is a computation error.
fn compute(e: OrliczError) -> CliError {
    match e {
        OrliczError::NotConvex | OrliczError::NotGAConvex | OrliczError::DimensionTooLarge(_) | OrliczError::ToleranceTooSmall(_) => {
            CliError::Input(e.to_string())
        }
        _ => CliError::Compute(e.to_string()),
    }
}

fn input(e: OrliczError) -> CliError {
    CliError::Input(e.to_string())
}

struct Report {
    command: &'static str,
    inputs: Value,
    result: Value,
    diagnostics: Value,
    text: String,
    suite_failed: bool,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize to JSON")
}

fn load_phi(spec: &str) -> Result<OrliczFunction, CliError> {
    parse_phi_spec(spec).map_err(input)
}

fn load_data(path: &Path, mode: Mode) -> Result<RandomVariable, CliError> {
    if !path.exists() {
        return Err(CliError::Input(format!("data file {} does not exist", path.display())));
    }
    let mode = match mode {
        Mode::Dist => DataMode::Distribution,
        Mode::Sample => DataMode::Sample,
    };
    DiscreteDistribution::from_csv_file(path, mode).and_then(|d| d.to_random_variable()).map_err(input)
}

fn check_tol(tol: f64) -> Result<(), CliError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CliError::Input(format!("--tol must be positive and finite, got {tol}")))
    }
}

fn common_inputs(c: &Common, phi: &OrliczFunction, x: &RandomVariable) -> Value {
    json!({
        "phi": phi.to_string(),
        "data": c.data.display().to_string(),
        "mode": match c.mode { Mode::Dist => "dist", Mode::Sample => "sample" },
        "tol": c.tol,
        "atoms": x.distribution().atoms(),
    })
}

fn run_premium(c: &Common, generic: bool) -> Result<Report, CliError> {
    let phi = load_phi(&c.phi)?;
    let x = load_data(&c.data, c.mode)?;
    check_tol(c.tol)?;
    let r = if generic { orlicz_premium(&phi, &x, c.tol) } else { premium(&phi, &x, c.tol) }.map_err(compute)?;
    Ok(Report {
        command: "premium",
        inputs: common_inputs(c, &phi, &x),
        result: json!({ "value": r.value, "route": to_value(&r.route) }),
        diagnostics: json!({ "bracket": [r.bracket.0, r.bracket.1], "iterations": r.iterations, "g_at_value": to_value(&r.g_at_value) }),
        text: format!("H = {}\nroute: {:?}, bracket [{}, {}], {} iteration(s)\n", r.value, r.route, r.bracket.0, r.bracket.1, r.iterations),
        suite_failed: false,
    })
}

fn run_hg(c: &Common, profile: Option<&Path>) -> Result<Report, CliError> {
    let phi = load_phi(&c.phi)?;
    let x = load_data(&c.data, c.mode)?;
    check_tol(c.tol)?;
    let r = hg_risk_measure(&phi, &x, c.tol).map_err(compute)?;
    if let Some(path) = profile {
        let mut csv = String::from("x,g\n");
        for (a, g) in &r.profile {
            writeln!(csv, "{a},{g}").expect("writing to a String cannot fail");
        }
        std::fs::write(path, csv).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    }
    let mut inputs = common_inputs(c, &phi, &x);
    if let Some(p) = profile {
        inputs["profile"] = json!(p.display().to_string());
    }
    Ok(Report {
        command: "hg",
        inputs,
        result: json!({ "value": r.value, "minimizer_x": r.minimizer_x }),
        diagnostics: json!({ "profile_points": r.profile.len(), "notes": r.notes }),
        text: format!("rho_HG = {}\nminimizer x = {}\n{} profile point(s)\n", r.value, r.minimizer_x, r.profile.len()),
        suite_failed: false,
    })
}

fn run_dual(c: &Common, kind: Kind, grid: Option<f64>, seed: u64) -> Result<Report, CliError> {
    let phi = load_phi(&c.phi)?;
    let x = load_data(&c.data, c.mode)?;
    check_tol(c.tol)?;
    let step = grid.unwrap_or_else(|| default_grid_step(x.len()));
    if !(step > 0.0 && step <= 1.0) {
        return Err(CliError::Input(format!("--grid must lie in (0, 1], got {step}")));
    }
    let mut inputs = common_inputs(c, &phi, &x);
    inputs["grid"] = json!(step);
    inputs["seed"] = json!(seed);
    if kind == Kind::Hg {
        inputs["kind"] = json!("hg");
        let r = hg_dual_check(&phi, &x, step, c.tol).map_err(compute)?;
        return Ok(Report {
            command: "dual-verify",
            inputs,
            text: format!("dual {} vs primal {} (difference {}); agrees: {}\n", r.dual_value, r.primal, r.difference, r.agrees),
            result: json!({ "dual_value": r.dual_value, "primal": r.primal, "difference": r.difference, "agrees": r.agrees, "argmax": r.argmax.probabilities() }),
            diagnostics: json!({ "grid_step": r.grid_step, "admissible_measures": r.admissible }),
            suite_failed: false,
        });
    }
    let dual_kind = if kind == Kind::Arith { DualKind::Arithmetic } else { DualKind::Geometric };
    inputs["kind"] = json!(if kind == Kind::Arith { "arith" } else { "geom" });
    let opts = DualSearchOptions { seed, ..DualSearchOptions::new(step, c.tol) };
    let r = dual_search_with(&phi, &x, dual_kind, &opts).map_err(compute)?;
    let cert = &r.certificate;
    Ok(Report {
        command: "dual-verify",
        inputs,
        text: format!(
            "primal {}\nbest bound {} (penalty {} at Q = {:?})\ngap {}, weak-duality violations {}\n",
            r.primal,
            cert.lower_bound,
            cert.penalty,
            cert.measure.probabilities(),
            r.gap,
            r.weak_duality_violations
        ),
        result: json!({
            "primal": r.primal,
            "lower_bound": cert.lower_bound,
            "gap": r.gap,
            "penalty": cert.penalty,
            "measure": cert.measure.probabilities(),
            "weak_duality_violations": r.weak_duality_violations,
        }),
        diagnostics: json!({
            "mode": to_value(&r.mode),
            "grid_step": r.grid_step,
            "final_step": r.final_step,
            "grid_bound": r.grid_bound,
            "evaluated": r.evaluated,
        }),
        suite_failed: false,
    })
}

fn run_conjugate(phi: &str, ys: &[f64]) -> Result<Report, CliError> {
    let phi = load_phi(phi)?;
    let mut values = Vec::with_capacity(ys.len());
    let mut text = String::new();
    for &y in ys {
        if !(y.is_finite() && y >= 0.0) {
            return Err(CliError::Input(format!("--y must be finite and nonnegative, got {y}")));
        }
        let v = phi.conjugate(y).map_err(compute)?;
        writeln!(text, "Psi({y}) = {}", v.to_f64()).expect("writing to a String cannot fail");
        values.push(json!({ "y": y, "value": to_value(&v) }));
    }
    Ok(Report {
        command: "conjugate",
        inputs: json!({ "phi": phi.to_string(), "y": ys }),
        result: json!({ "values": values }),
        diagnostics: json!({ "convex": to_value(&phi.is_convex()) }),
        text,
        suite_failed: false,
    })
}

fn run_properties(phi: Option<&str>, suite: Option<&str>, trials: usize, seed: u64) -> Result<Report, CliError> {
    if let Some(s) = suite {
        if !SUITES.contains(&s) {
            return Err(CliError::Input(format!("unknown suite `{s}`; expected one of {}", SUITES.join(", "))));
        }
    }
    let panel = match phi {
        Some(spec) => vec![load_phi(spec)?],
        None => builtin_panel(),
    };
    let reports = run_suites(suite, &panel, trials, seed).map_err(compute)?;
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let text: String = reports.iter().map(|r| r.summary() + "\n").collect();
    Ok(Report {
        command: "properties",
        inputs: json!({
            "phi": panel.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "suite": suite,
            "trials": trials,
            "seed": seed,
        }),
        result: json!({ "passed": failed == 0, "suites": to_value(&reports) }),
        diagnostics: json!({ "suites_run": reports.len(), "suites_failed": failed }),
        text,
        suite_failed: failed > 0,
    })
}

/// Caps the global pool when `ORLICZ_THREADS` is a positive integer.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ORLICZ_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Input(format!("ORLICZ_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Compute(format!("cannot configure thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = match &cli.command {
        Command::Premium { common, .. } | Command::Hg { common, .. } | Command::DualVerify { common, .. } => common.output,
        Command::Conjugate { output, .. } | Command::Properties { output, .. } => *output,
    };
    let report = configure_threads().and_then(|()| match &cli.command {
        Command::Premium { common, generic } => run_premium(common, *generic),
        Command::Hg { common, profile } => run_hg(common, profile.as_deref()),
        Command::DualVerify { common, kind, grid, seed } => run_dual(common, *kind, *grid, *seed),
        Command::Conjugate { phi, y, .. } => run_conjugate(phi, y),
        Command::Properties { phi, suite, trials, seed, .. } => run_properties(phi.as_deref(), suite.as_deref(), *trials, *seed),
    });
    match report {
        Ok(r) => {
            match output {
                Output::Json => {
                    let doc = json!({ "command": r.command, "inputs": r.inputs, "result": r.result, "diagnostics": r.diagnostics });
                    println!("{}", serde_json::to_string_pretty(&doc).expect("JSON values serialize"));
                }
                Output::Text => print!("{}", r.text),
            }
            if r.suite_failed {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

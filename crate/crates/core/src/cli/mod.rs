//! Command-line front end: `states`, `pattern`, `coherence`, `verify`,
//! `simulate` and `widths`.
//!
//! Exit codes: 0 success, 1 failed verification or route disagreement,
//! 2 invalid configuration, 3 I/O failure. Errors go to stderr as one JSON line.

mod config;
mod output;
mod verify;

pub use config::{RouteChoice, RunConfig, Settings};
pub use output::sidecar_path;
pub use verify::{
    degeneracy_measures, degeneracy_states, run_checks, shape_squaring_residual, shape_squaring_states, CheckResult,
    VerifyOptions, CHECKS,
};

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::correlator::{AssemblyFault, Order};
use crate::error::Error;
use crate::mc::{gof, simulate, DetectionRun};
use crate::numeric::fmt_real;
use crate::pattern::{
    catalog_pattern, coherence_series, effective_width_for, engine_pattern, Evaluator, PatternSeries, Route,
};
use crate::states::{check_sum_rules, substate_table, StateKind, StateSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Substate tables stop where the remaining weight falls below this.
const STATES_TAIL: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "qdiffract", version, about = "Double-slit diffraction of quantum light in first and second order")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Substate weight tables and sum-rule report.
    States(Common),
    /// Detection-probability pattern along a scan.
    Pattern(Common),
    /// Degrees of first- and second-order coherence, g(ρ, −ρ).
    Coherence(Common),
    /// Run the verification suite; nonzero exit if any check fails.
    Verify(Common),
    /// Monte Carlo detection events and chi-square goodness of fit.
    Simulate(Common),
    /// Effective widths of the coherent first- and second-order patterns.
    Widths(Common),
}

#[derive(clap::Args, Debug)]
struct Common {
    /// JSON file with any of the flag values; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

enum Failure {
    Invalid(Error),
    Io(std::io::Error),
    /// Computation finished but a check failed; the report is already printed.
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn error_line(kind: &str, message: &str) -> String {
    json!({ "error": kind, "message": message }).to_string()
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::CutoffTooLarge { .. } => "cutoff_too_large",
        Error::CutoffTooSmall { .. } => "cutoff_too_small",
        Error::BasisMismatch { .. } => "basis_mismatch",
        Error::NotNormallyOrdered(_) => "not_normally_ordered",
        Error::InvalidState(_) => "invalid_state",
        Error::InvalidGeometry(_) => "invalid_geometry",
        Error::MissingAveraging(_) => "missing_averaging",
        Error::InvalidAveraging(_) => "invalid_averaging",
        Error::Inconsistent(_) => "inconsistent",
        Error::OutOfCatalog(_) => "out_of_catalog",
        Error::TailBound { .. } => "tail_bound",
        Error::InvalidInput(_) => "invalid_input",
    }
}

/// Runs the CLI on `args` (program name first), writing reports to `out` and errors to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(err, "{}", error_line("usage", first));
            return EXIT_INVALID;
        }
    };
    let (name, common) = match cli.command {
        Command::States(c) => ("states", c),
        Command::Pattern(c) => ("pattern", c),
        Command::Coherence(c) => ("coherence", c),
        Command::Verify(c) => ("verify", c),
        Command::Simulate(c) => ("simulate", c),
        Command::Widths(c) => ("widths", c),
    };
    match execute(name, common, out, err) {
        Ok(()) => EXIT_OK,
        Err(Failure::Check) => EXIT_FAILED,
        Err(Failure::Invalid(e)) => {
            let _ = writeln!(err, "{}", error_line(error_kind(&e), &e.to_string()));
            EXIT_INVALID
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "{}", error_line("io", &e.to_string()));
            EXIT_IO
        }
    }
}

/// Runs the CLI against the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

fn execute(name: &str, common: Common, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let file = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", p.display())))?;
            Settings::from_json(&text)?
        }
        None => Settings::default(),
    };
    let cfg = RunConfig::resolve(name, common.settings.merged_over(file))?;
    if let Some(w) = cfg.geometry.far_field_warning() {
        writeln!(err, "{}", json!({ "warning": w }))?;
    }
    let report = match name {
        "states" => cmd_states(&cfg)?,
        "pattern" => cmd_pattern(&cfg)?,
        "coherence" => cmd_coherence(&cfg)?,
        "verify" => cmd_verify(&cfg)?,
        "simulate" => cmd_simulate(&cfg)?,
        _ => cmd_widths(&cfg)?,
    };
    writeln!(out, "{}", report.0)?;
    if report.1 {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

type Report = (Value, bool);

fn cmd_states(cfg: &RunConfig) -> Result<Report, Failure> {
    let mut reports = Vec::new();
    let mut ok = true;
    let path = cfg.out.join("states.csv");
    let mut rows = Vec::new();
    for &kind in &cfg.families {
        for &m in &cfg.mean_n_list {
            let n_max = cfg.settings.n.unwrap_or_else(|| kind.cutoff_for_tail(m, STATES_TAIL));
            rows.extend(substate_table(kind, &[m], n_max));
            let r = check_sum_rules(kind, m, 1e-9);
            ok &= r.passed();
            reports.push(r);
        }
    }
    let tol = json!({ "sum_rule": 1e-9, "table_tail": STATES_TAIL });
    output::write_with_sidecar(cfg, &path, &tol, json!({ "rows": rows.len() }), |w| {
        writeln!(w, "kind,mean_n,N,weight")?;
        for r in &rows {
            writeln!(w, "{},{},{},{}", r.kind.label(), fmt_real(r.mean_n), r.n, fmt_real(r.weight))?;
        }
        Ok(())
    })?;
    Ok((json!({ "command": "states", "csv": path, "sum_rules": reports, "passed": ok }), ok))
}

fn engine_series(cfg: &RunConfig, spec: &StateSpec) -> Result<(PatternSeries, f64), Error> {
    let avg = cfg.averaging_for(spec)?;
    let s = engine_pattern(spec, cfg.order, cfg.scheme, &cfg.grid, &cfg.geometry, &avg)?;
    let eval = Evaluator::engine(spec, cfg.order, &avg, None)?;
    // Monte Carlo noise bound on the assembled value: each entry enters with weight ½ or ¼.
    let noise = match &eval {
        Evaluator::Engine(e) => e.table.stderr.as_ref().map(|se| se.iter().sum::<f64>()).unwrap_or(0.0),
        Evaluator::Catalog(_) => 0.0,
    };
    let weight = match cfg.order {
        Order::First => 0.5,
        Order::Second => 0.25,
    };
    Ok((s, 6.0 * weight * noise))
}

fn cmd_pattern(cfg: &RunConfig) -> Result<Report, Failure> {
    let spec = &cfg.spec;
    let mut files = Vec::new();
    let mut report = json!({ "command": "pattern", "state": spec.to_string(), "order": cfg.order.value() });
    let mut ok = true;
    let exact_tol = |scale: f64| 1e-9 * scale.max(1.0);
    if cfg.route != RouteChoice::Engine {
        let c = catalog_pattern(spec, cfg.order, cfg.scheme, &cfg.grid, &cfg.geometry)?;
        files.push(output::write_series(cfg, "pattern_catalog", &c, &json!({}))?);
        report["P_O"] = json!(c.scale_factor);
        if cfg.route == RouteChoice::Both {
            let (e, noise) = engine_series(cfg, spec)?;
            let tol = exact_tol(c.scale_factor) + noise;
            files.push(output::write_series(cfg, "pattern_engine", &e, &json!({ "route_agreement": tol }))?);
            let dev = e.max_abs_deviation(&c);
            ok = dev <= tol;
            report["max_deviation"] = json!(dev);
            report["tolerance"] = json!(tol);
        }
    } else {
        let (e, _) = engine_series(cfg, spec)?;
        report["P_O"] = json!(e.scale_factor);
        files.push(output::write_series(cfg, "pattern_engine", &e, &json!({}))?);
    }
    report["files"] = json!(files);
    report["passed"] = json!(ok);
    Ok((report, ok))
}

fn cmd_coherence(cfg: &RunConfig) -> Result<Report, Failure> {
    let route = match cfg.route {
        RouteChoice::Engine => Route::Engine,
        _ => Route::Catalog,
    };
    let avg = match route {
        Route::Engine => Some(cfg.averaging_for(&cfg.spec)?),
        _ => None,
    };
    let mut files = Vec::new();
    let mut summary = serde_json::Map::new();
    for (order, name) in [(Order::First, "g1"), (Order::Second, "g2")] {
        let s = coherence_series(&cfg.spec, order, &cfg.grid, &cfg.geometry, route, avg.as_ref())?;
        let undefined = s.defined.iter().filter(|d| !**d).count();
        let tol = json!({ "undefined_threshold": crate::pattern::UNDEFINED_THRESHOLD });
        files.push(output::write_series(cfg, name, &s, &tol)?);
        let at_zero = cfg.grid.iter().position(|r| *r == 0.0).map(|i| s.values[i]).filter(|v| v.is_finite());
        summary.insert(name.into(), json!({ "at_zero": at_zero, "undefined_points": undefined }));
    }
    Ok((json!({ "command": "coherence", "state": cfg.spec.to_string(), "files": files, "series": summary }), true))
}

fn cmd_verify(cfg: &RunConfig) -> Result<Report, Failure> {
    let fault = cfg.inject_bug.as_ref().map(|_| AssemblyFault::SwapBC);
    let opts = VerifyOptions { only: cfg.only.clone(), fault, seed: cfg.seed };
    let checks = run_checks(&opts)?;
    let ok = checks.iter().all(|c| c.passed);
    let report = json!({ "command": "verify", "passed": ok, "injected_fault": fault, "checks": checks });
    let path = cfg.out.join("verify.json");
    output::write_with_sidecar(cfg, &path, &Value::Null, json!({ "passed": ok }), |w| {
        writeln!(w, "{}", serde_json::to_string_pretty(&report).map_err(std::io::Error::other)?)
    })?;
    Ok((report, ok))
}

fn cmd_simulate(cfg: &RunConfig) -> Result<Report, Failure> {
    let series = match cfg.route {
        RouteChoice::Engine => engine_series(cfg, &cfg.spec)?.0,
        _ => catalog_pattern(&cfg.spec, cfg.order, cfg.scheme, &cfg.grid, &cfg.geometry)?,
    };
    let run = simulate(&DetectionRun::from_series(&series, cfg.events, cfg.seed, cfg.bins)?)?;
    let fit = gof(&run);
    let stats = match &fit {
        Ok(g) => json!(g),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let path = cfg.out.join("histogram.csv");
    let meta = json!({ "run": run.metadata(), "gof": stats });
    output::write_with_sidecar(cfg, &path, &json!({ "min_expected_per_bin": crate::mc::MIN_EXPECTED }), meta, |w| {
        run.write_csv(w)
    })?;
    if cfg.plot {
        output::write_plot_script(cfg, &path, "histogram")?;
    }
    Ok((json!({ "command": "simulate", "csv": path, "events": cfg.events, "gof": stats }), true))
}

fn cmd_widths(cfg: &RunConfig) -> Result<Report, Failure> {
    let spec = match cfg.spec.kind {
        StateKind::CollectiveCoherent | StateKind::CoherentSubstate => cfg.spec.clone(),
        _ => return Err(Error::InvalidInput("widths are defined for the coherent family".into()).into()),
    };
    let reports = [Order::First, Order::Second]
        .map(|o| effective_width_for(&spec, o, &cfg.geometry))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let path = cfg.out.join("widths.csv");
    let tol = json!({ "tail_limit": crate::pattern::WIDTH_TAIL_LIMIT });
    output::write_with_sidecar(cfg, &path, &tol, json!({ "ratio": cfg.geometry.ratio() }), |w| {
        writeln!(w, "order,width,tail_bound,half_range_v,step_v")?;
        for r in &reports {
            let cells = [r.width, r.tail_bound, r.half_range_v, r.step_v].map(fmt_real);
            writeln!(w, "{},{}", r.order.value(), cells.join(","))?;
        }
        Ok(())
    })?;
    Ok((json!({ "command": "widths", "state": spec.to_string(), "csv": path, "widths": reports }), true))
}

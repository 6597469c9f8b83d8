//! `hsdde`: certify, simulate and estimate moments of hybrid stochastic
//! delay systems under intermittent sampled-data control.
//!
//! Exit codes: 0 on success, 1 when a certificate or rate comparison fails,
//! 2 on configuration errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybrid_sdde::certify::{certify, delta_bound, CertifyTarget, DeltaBoundInputs, StabilityCertificate};
use hybrid_sdde::config::{load_scenario, Scenario};
use hybrid_sdde::model::ControlSchedule;
use hybrid_sdde::moments::{compare_to_certificate, ensemble_moments, fit_decay_rate, RateStatus};
use hybrid_sdde::preset::{by_name, PRESET_NAMES};
use hybrid_sdde::reproduce::reproduce_example5;
use hybrid_sdde::simulate::integrate;
use hybrid_sdde::svg::{moments_svg, trajectory_svg};
use hybrid_sdde::Error;

/// Relative slack on the certified slope before a slower decay is flagged.
const RATE_TOLERANCE: f64 = 0.1;

#[derive(Parser)]
#[command(name = "hsdde", version, about = "Hybrid stochastic delay systems under intermittent sampled-data control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every condition and compute the certified decay rate.
    Certify(CertifyArgs),
    /// Integrate one path and write it as CSV.
    Simulate(SimulateArgs),
    /// Estimate moments over an ensemble and fit decay rates.
    Moments(MomentsArgs),
    /// Recompute the built-in example and compare with its published values.
    Reproduce,
}

#[derive(Args)]
struct SystemArgs {
    /// JSON system description.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in system (default: example5).
    #[arg(long)]
    preset: Option<String>,
    /// Control width θ.
    #[arg(long)]
    theta: Option<f64>,
    /// Observation gap δ.
    #[arg(long)]
    delta: Option<f64>,
    /// Control period T.
    #[arg(long)]
    period: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Apply the intermittent control (default).
    #[arg(long, conflicts_with = "uncontrolled")]
    controlled: bool,
    /// Drop the control term.
    #[arg(long)]
    uncontrolled: bool,
    #[arg(long, default_value_t = 15.0)]
    horizon: f64,
    /// Integration step Δ.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write an SVG plot.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Fix ε instead of the value stored with the system.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Moment orders for the rate table, e.g. `2,4`.
    #[arg(long, value_delimiter = ',')]
    qbar: Option<Vec<f64>>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 500)]
    paths: usize,
    /// Moment orders, e.g. `2,4`.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    qbar: Vec<f64>,
}

enum Failure {
    Check(String),
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Certificate(_) | Error::Estimation(_) => Failure::Check(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Certify(a) => cmd_certify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Moments(a) => cmd_moments(a),
        Command::Reproduce => cmd_reproduce(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn scenario(a: &SystemArgs) -> Result<Scenario, Failure> {
    if let Some(path) = &a.config {
        return Ok(load_scenario(path)?);
    }
    let name = a.preset.as_deref().unwrap_or("example5");
    by_name(name)
        .map(Scenario::from)
        .ok_or_else(|| Failure::Config(format!("unknown preset {name:?}; available: {}", PRESET_NAMES.join(", "))))
}

fn schedule(a: &SystemArgs, sc: &Scenario) -> Result<ControlSchedule, Failure> {
    let base = sc.schedule;
    let pick = |flag: Option<f64>, stored: Option<f64>, name: &str| {
        flag.or(stored)
            .ok_or_else(|| Failure::Config(format!("no {name} given and none stored with the system")))
    };
    let s = ControlSchedule {
        period: pick(a.period, base.map(|s| s.period), "--period")?,
        width: pick(a.theta, base.map(|s| s.width), "--theta")?,
        obs_gap: pick(a.delta, base.map(|s| s.obs_gap), "--delta")?,
        phase_start: base.map_or(0, |s| s.phase_start),
    };
    s.validate()?;
    Ok(s)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, bytes)?;
    Ok(path)
}

/// `δ_max` from the stored certificate constants, if there are any.
fn delta_max(sc: &Scenario) -> Option<f64> {
    let cert = sc.certificate.as_ref()?;
    let growth = sc.system.growth.as_ref()?;
    let c = &cert.cond42;
    delta_bound(&DeltaBoundInputs {
        l: growth.l,
        gamma1: c.gamma1,
        gamma2: c.gamma2,
        gamma3: c.gamma3,
        min_diag: sc.system.generator.min_diagonal(),
        gamma4: c.gamma4,
        gamma_bar: c.gamma_bar(),
        h_star: sc.system.delay.h_star_or_estimate().ok()?,
    })
    .ok()
    .map(|b| b.delta_max)
}

fn warn_outside_certificate(sc: &Scenario, delta: f64, controlled: bool) {
    if let (true, Some(m)) = (controlled, delta_max(sc)) {
        if delta > m {
            eprintln!("warning: delta = {delta} exceeds the certified delta_max = {m:.4e}; this run is outside the certificate");
        }
    }
}

fn cmd_certify(a: CertifyArgs) -> Outcome {
    let sc = scenario(&a.system)?;
    let mut inputs = sc
        .certificate
        .clone()
        .ok_or_else(|| Failure::Config(format!("system {:?} carries no certificate constants", sc.name)))?;
    if a.epsilon.is_some() {
        inputs.epsilon = a.epsilon;
    }
    if let Some(q) = a.qbar {
        inputs.qbar = q;
    }
    let period = a.system.period.or(sc.schedule.map(|s| s.period)).unwrap_or(1.0);
    let theta = a
        .system
        .theta
        .or(sc.schedule.map(|s| s.width))
        .ok_or_else(|| Failure::Config("no --theta given and none stored with the system".into()))?;
    let delta = a
        .system
        .delta
        .or(inputs.delta)
        .or(sc.schedule.map(|s| s.obs_gap))
        .ok_or_else(|| Failure::Config("no --delta given and none stored with the system".into()))?;
    let cert = certify(&sc.system, &inputs, CertifyTarget { period, theta, delta })?;
    let path = write_file(&a.system.out, "certificate.json", cert.to_json()?.as_bytes())?;
    print_certificate(&cert);
    println!("report: {}", path.display());
    Ok(cert.pass)
}

fn print_certificate(c: &StabilityCertificate) {
    println!("system: {} modes, h* = {:.6}, tau = {}", c.n_modes, c.h_star, c.tau);
    println!("theta weights: {:.5?}, theta_bar: {:.5?}", c.weights.theta, c.weights.theta_bar);
    for r in [&c.condition41, &c.khasminskii, &c.condition42] {
        println!("{}: {}", r.name, if r.pass { "holds" } else { "FAILS" });
    }
    if let Some(b) = &c.delta_bound {
        println!("delta_max = {:.6e} (delta = {} {})", b.delta_max, c.target.delta, if c.delta_admissible { "admissible" } else { "too large" });
    }
    let k = &c.constants;
    println!(
        "epsilon = {:.4}{}: C1^C2^C3 = {:.4}, C4 = {:.4}, C5 = {:.4}",
        c.epsilon,
        if c.epsilon_optimized { " (optimized)" } else { "" },
        k.c123_min,
        k.c4,
        k.c5
    );
    println!("theta_threshold = {:.4}", c.rate.theta_threshold);
    match c.rate.mu {
        Some(mu) => println!("mu = {mu:.4} at theta = {}", c.target.theta),
        None => println!("no certified rate at theta = {}", c.target.theta),
    }
    for r in &c.rate_table {
        println!("  E|x|^{}: rate {:.4}", r.qbar, r.rate);
    }
    if let Some(o) = &c.optimum {
        println!("best epsilon = {:.4} gives mu = {:.4}", o.epsilon, o.mu);
    }
    if c.pass {
        println!("PASS");
    } else {
        for f in &c.failures {
            println!("FAIL: {f}");
        }
    }
}

fn cmd_simulate(a: SimulateArgs) -> Outcome {
    let sc = scenario(&a.system)?;
    let s = schedule(&a.system, &sc)?;
    let controlled = !a.run.uncontrolled;
    warn_outside_certificate(&sc, s.obs_gap, controlled);
    let tr = integrate(&sc.system, &s, a.run.horizon, a.run.step, a.run.seed, controlled)?;
    let mut csv = Vec::new();
    tr.write_csv(&mut csv)?;
    let path = write_file(&a.system.out, "trajectory.csv", &csv)?;
    println!("trajectory: {} ({} rows)", path.display(), tr.len());
    if a.run.svg {
        let path = write_file(&a.system.out, "trajectory.svg", trajectory_svg(&tr).as_bytes())?;
        println!("plot: {}", path.display());
    }
    if let Some(t) = tr.exploded {
        println!("path exploded at t = {t}");
    }
    Ok(true)
}

fn cmd_moments(a: MomentsArgs) -> Outcome {
    if a.paths == 0 {
        return Err(Failure::Config("--paths must be at least 1".into()));
    }
    let sc = scenario(&a.system)?;
    let s = schedule(&a.system, &sc)?;
    let controlled = !a.run.uncontrolled;
    warn_outside_certificate(&sc, s.obs_gap, controlled);
    let series = ensemble_moments(&sc.system, &s, a.run.horizon, a.run.step, a.run.seed, a.paths, &a.qbar, controlled)?;
    let mut csv = Vec::new();
    series.write_csv(&mut csv)?;
    let path = write_file(&a.system.out, "moments.csv", &csv)?;
    println!("moments: {} ({} rows, {} paths)", path.display(), series.times.len(), series.n_paths);

    let cert = match (&sc.certificate, controlled && s.width > 0.0) {
        (Some(inputs), true) => {
            let mut inputs = inputs.clone();
            inputs.qbar = a.qbar.clone();
            let target = CertifyTarget {
                period: s.period,
                theta: s.width,
                delta: inputs.delta.unwrap_or(s.obs_gap),
            };
            Some(certify(&sc.system, &inputs, target)?)
        }
        _ => None,
    };
    let q = sc.system.growth.map_or(f64::INFINITY, |g| g.q);
    let mut rates = Vec::new();
    let mut ok = true;
    for &qb in &a.qbar {
        let fit = fit_decay_rate(&series, qb, None)?;
        let cmp = compare_to_certificate(&fit, cert.as_ref(), q, s.obs_gap, RATE_TOLERANCE);
        ok &= cmp.status != RateStatus::ViolationCandidate;
        println!(
            "q = {qb}: slope {:.4} on [{:.2}, {:.2}], certified {}, status {}",
            fit.slope,
            fit.window[0],
            fit.window[1],
            cmp.certified.map_or("none".to_string(), |c| format!("{c:.4}")),
            serde_json::to_value(cmp.status).unwrap_or_default().as_str().unwrap_or("?")
        );
        rates.push(serde_json::json!({ "fit": fit, "comparison": cmp }));
    }
    let max_exploded = series.exploded_fraction.iter().copied().fold(0.0, f64::max);
    let report = serde_json::json!({
        "controlled": controlled,
        "schedule": s,
        "step": a.run.step,
        "horizon": a.run.horizon,
        "paths": a.paths,
        "seed": a.run.seed,
        "max_exploded_fraction": max_exploded,
        "rates": rates,
    });
    let json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    let path = write_file(&a.system.out, "rates.json", json.as_bytes())?;
    println!("rates: {}", path.display());
    if a.run.svg {
        let path = write_file(&a.system.out, "moments.svg", moments_svg(&series).as_bytes())?;
        println!("plot: {}", path.display());
    }
    Ok(ok)
}

fn cmd_reproduce() -> Outcome {
    let rows = reproduce_example5()?;
    let width = rows.iter().map(|r| r.quantity.len()).max().unwrap_or(0);
    for r in &rows {
        println!(
            "{} {:<width$}  computed {}  published {}{}",
            if r.pass { "PASS" } else { "FAIL" },
            r.quantity,
            r.computed,
            r.published,
            r.tolerance.map_or(String::new(), |t| format!("  (tol {t:e})")),
        );
    }
    Ok(rows.iter().all(|r| r.pass))
}

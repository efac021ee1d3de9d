//! Command-line front end: `verify`, `evolve`, `scan` and `ep`.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or a run
//! error occurs, 2 for invalid usage.

pub mod config;
pub mod output;
pub mod verify;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::ermakov::{ep_numeric_solve, EPSolution};
use crate::evolution::evolve;
use crate::linalg::{eigenpairs, hermitian_eigenvalues, uniform_grid};
use crate::dyson::{metric, DysonSpec};
use crate::spin::{hamiltonian, ModelParams, Regime};

use config::{CommonArgs, Format, RunConfig};
use output::{csv_table, emit};
use verify::{observed_regime, run_verify};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(crate::Error::NullState) => 2,
            CliError::Run(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dyson-spin", version, about = "Time-dependent Dyson maps for non-Hermitian PT-symmetric spin models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every identity at one parameter point and report residuals
    Verify(VerifyArgs),
    /// Tabulate a closed-form state in both pictures on a time grid
    Evolve(EvolveArgs),
    /// Sweep gamma and tabulate the spectrum and the metric's smallest eigenvalue
    Scan(ScanArgs),
    /// Compare the closed-form Ermakov-Pinney solution with RK4 integration
    Ep(EpArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Regime the spectrum is expected to be in
    #[arg(long, value_parser = parse_regime, default_value = "unbroken")]
    pub expect_regime: Regime,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Eigenstate coefficient K:RE[:IM], K being the level label (+, - or an integer); repeatable
    #[arg(long = "coeff", value_name = "K:RE[:IM]", allow_hyphen_values = true)]
    pub coeffs: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, allow_negative_numbers = true, default_value_t = -1.5)]
    pub gamma_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.5)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = 61)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct EpArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    match s {
        "unbroken" => Ok(Regime::Unbroken),
        "exceptional" => Ok(Regime::Exceptional),
        "broken" => Ok(Regime::Broken),
        _ => Err(format!("unknown regime `{s}` (expected unbroken, exceptional or broken)")),
    }
}

/// Parses `K:RE[:IM]`; `+` and `-` stand for the levels `1` and `-1`.
pub fn parse_coeff(s: &str) -> Result<(i32, Complex64), CliError> {
    let bad = || CliError::Usage(format!("coefficient `{s}` is not K:RE[:IM]"));
    let parts: Vec<&str> = s.split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(bad());
    }
    let k = match parts[0].trim() {
        "+" => 1,
        "-" => -1,
        other => other.parse().map_err(|_| bad())?,
    };
    let re: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let im: f64 = match parts.get(2) {
        Some(p) => p.trim().parse().map_err(|_| bad())?,
        None => 0.0,
    };
    if !(re.is_finite() && im.is_finite()) {
        return Err(bad());
    }
    Ok((k, Complex64::new(re, im)))
}

pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("dyson-spin: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs one subcommand; `Ok(false)` means it ran but a check failed.
pub fn execute(command: &Command) -> Result<bool, CliError> {
    match command {
        Command::Verify(a) => {
            let cfg = RunConfig::resolve(&a.common)?;
            let report = run_verify(&cfg, a.expect_regime);
            let text = match cfg.format {
                Format::Json => output::report_json(&report),
                Format::Csv => output::report_csv(&report),
            };
            emit(&cfg, &text)?;
            Ok(report.summary)
        }
        Command::Evolve(a) => {
            let cfg = RunConfig::resolve(&a.common)?;
            let mut coeffs = a.coeffs.iter().map(|s| parse_coeff(s)).collect::<Result<Vec<_>, _>>()?;
            if coeffs.is_empty() {
                coeffs.push((cfg.spin.levels()[cfg.spin.levels().len() - 1], Complex64::new(1.0, 0.0)));
            }
            for (k, _) in &coeffs {
                if !cfg.spin.levels().contains(k) {
                    return Err(CliError::Usage(format!("level {k} does not exist for spin {}", cfg.spin)));
                }
            }
            let spec = cfg.dyson_spec()?;
            let samples = evolve(&spec, &coeffs, &uniform_grid(cfg.tmax, cfg.dt), cfg.fd_step)?;
            emit(&cfg, &output::evolution_csv(&samples))?;
            Ok(true)
        }
        Command::Scan(a) => {
            let cfg = RunConfig::resolve(&a.common)?;
            let gammas = scan_gammas(a.gamma_min, a.gamma_max, a.steps)?;
            let rows = gammas.par_iter().map(|&g| scan_row(&cfg, g)).collect::<Vec<_>>();
            emit(&cfg, &output::scan_csv(cfg.spin.dim(), &rows))?;
            Ok(true)
        }
        Command::Ep(a) => {
            let cfg = RunConfig::resolve(&a.common)?;
            let ep = EPSolution::for_spin(&cfg.params(), cfg.c2, cfg.c3, cfg.branch)?;
            let grid = uniform_grid(cfg.tmax, cfg.dt);
            let sign = f64::from(ep.branch);
            let numeric = ep_numeric_solve(sign * ep.value(0.0), sign * ep.derivative(0.0), ep.freq, ep.cubic, &grid)?;
            let rows = grid.iter().zip(&numeric).map(|(&t, &x)| {
                let closed = ep.value(t);
                [t, closed, sign * x, sign * x - closed, ep.constraint_residual(t)]
            });
            emit(&cfg, &csv_table(&["t", "chi_closed", "chi_numeric", "diff", "residual"], rows))?;
            Ok(true)
        }
    }
}

fn scan_gammas(min: f64, max: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if !(min.is_finite() && max.is_finite() && (-2.0..=2.0).contains(&min) && (-2.0..=2.0).contains(&max)) {
        return Err(CliError::Usage("gamma range must lie within [-2, 2]".into()));
    }
    if min > max {
        return Err(CliError::Usage("gamma-min must not exceed gamma-max".into()));
    }
    if min == max {
        return Ok(vec![min]);
    }
    if steps < 2 {
        return Err(CliError::Usage("steps must be at least 2".into()));
    }
    Ok((0..steps)
        .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// One row of a gamma sweep.
#[derive(Debug, Clone)]
pub struct ScanRow {
    pub gamma: f64,
    pub eigenvalues: Vec<Complex64>,
    /// Smallest eigenvalue of `ρ(0)`; NaN outside `|γ| < 1`.
    pub min_metric_eigenvalue: f64,
    pub regime: Regime,
}

fn scan_row(cfg: &RunConfig, gamma: f64) -> ScanRow {
    let params = ModelParams::new(cfg.spin, gamma, cfg.omega).with_hbar(cfg.hbar);
    let eig = eigenpairs(&hamiltonian(&params));
    let regime = observed_regime(&eig.values, eig.status);
    let min_metric_eigenvalue = if gamma.abs() < 1.0 {
        DysonSpec::new(params, cfg.c1, cfg.c2, cfg.c3, cfg.branch)
            .and_then(|s| metric(&s, 0.0))
            .and_then(|m| hermitian_eigenvalues(&m, 1e-9 * m.max_abs().max(1.0)))
            .map(|v| v[0])
            .unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    ScanRow {
        gamma,
        eigenvalues: eig.values,
        min_metric_eigenvalue,
        regime,
    }
}

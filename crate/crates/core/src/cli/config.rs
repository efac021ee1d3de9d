use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dyson::{DysonSpec, DEFAULT_FD_STEP};
use crate::spin::{ModelParams, Regime, Spin};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat TOML file with the same keys as the long flags (dashes become underscores)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Spin label: 1/2, 1 or 3/2
    #[arg(long)]
    pub spin: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c3: Option<f64>,
    /// Sign of the square root in the Ermakov-Pinney solution (+1 or -1)
    #[arg(long, allow_negative_numbers = true)]
    pub branch: Option<i8>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub fd_step: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Tolerance override NAME=VALUE; NAME is a check name or one of `closed`, `fd`
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
}

/// On-disk form of [`CommonArgs`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    spin: Option<String>,
    gamma: Option<f64>,
    omega: Option<f64>,
    hbar: Option<f64>,
    c1: Option<f64>,
    c2: Option<f64>,
    c3: Option<f64>,
    branch: Option<i8>,
    tmax: Option<f64>,
    dt: Option<f64>,
    fd_step: Option<f64>,
    format: Option<Format>,
    out: Option<PathBuf>,
    #[serde(default)]
    tol: Vec<String>,
}

pub const DEFAULT_CLOSED_TOL: f64 = 1e-9;
pub const DEFAULT_FD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub spin: Spin,
    pub gamma: f64,
    pub omega: f64,
    pub hbar: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub branch: i8,
    pub tmax: f64,
    pub dt: f64,
    pub fd_step: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spin: Spin::Half,
            gamma: 0.6,
            omega: 1.0,
            hbar: 1.0,
            c1: 1.0,
            c2: 1.0,
            c3: 0.0,
            branch: 1,
            tmax: 10.0,
            dt: 1e-3,
            fd_step: DEFAULT_FD_STEP,
            tolerances: BTreeMap::from([
                ("closed".to_string(), DEFAULT_CLOSED_TOL),
                ("fd".to_string(), DEFAULT_FD_TOL),
            ]),
            format: Format::Json,
            out: None,
        }
    }
}

fn parse_tol(entry: &str) -> Result<(String, f64), CliError> {
    let (name, value) = entry
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("tolerance `{entry}` is not NAME=VALUE")))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("tolerance `{entry}` has a non-numeric value")))?;
    if !(value > 0.0 && value.is_finite()) {
        return Err(CliError::Usage(format!("tolerance `{}` must be positive, got {value}", name.trim())));
    }
    Ok((name.trim().to_string(), value))
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        CliError::Run(crate::Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let mut cfg = RunConfig::default();
        if let Some(s) = args.spin.clone().or(file.spin) {
            cfg.spin = s.parse().map_err(|e: crate::Error| CliError::Usage(e.to_string()))?;
        }
        macro_rules! merge {
            ($($field:ident),*) => {
                $( if let Some(v) = args.$field.or(file.$field) { cfg.$field = v; } )*
            };
        }
        merge!(gamma, omega, hbar, c1, c2, c3, branch, tmax, dt, fd_step, format);
        cfg.out = args.out.clone().or(file.out);
        for entry in file.tol.iter().chain(&args.tol) {
            let (name, value) = parse_tol(entry)?;
            cfg.tolerances.insert(name, value);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        for (name, v) in [("gamma", self.gamma), ("omega", self.omega), ("c2", self.c2), ("c3", self.c3)] {
            if !v.is_finite() {
                return usage(format!("{name} must be finite"));
            }
        }
        for (name, v) in [("hbar", self.hbar), ("tmax", self.tmax), ("dt", self.dt), ("fd-step", self.fd_step)] {
            if !(v > 0.0 && v.is_finite()) {
                return usage(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.c1 != 0.0 && self.c1.is_finite()) {
            return usage("c1 must be non-zero".to_string());
        }
        if self.branch != 1 && self.branch != -1 {
            return usage(format!("branch must be +1 or -1, got {}", self.branch));
        }
        if self.dt > self.tmax {
            return usage("dt must not exceed tmax".to_string());
        }
        if let Some((name, v)) = self.tolerances.iter().find(|(_, v)| !(**v > 0.0)) {
            return usage(format!("tolerance {name} must be positive, got {v}"));
        }
        Ok(())
    }

    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.spin, self.gamma, self.omega).with_hbar(self.hbar)
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.gamma)
    }

    pub fn dyson_spec(&self) -> crate::Result<DysonSpec> {
        DysonSpec::new(self.params(), self.c1, self.c2, self.c3, self.branch)
    }

    /// Tolerance for a named check: an explicit override, else the class default.
    pub fn tol(&self, check: &str, class: ToleranceClass) -> f64 {
        self.tolerances
            .get(check)
            .or_else(|| self.tolerances.get(class.key()))
            .copied()
            .unwrap_or(class.default_value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceClass {
    /// Identities between closed forms, exact up to roundoff.
    Closed,
    /// Identities mediated by finite differences or RK4.
    Numerical,
}

impl ToleranceClass {
    fn key(self) -> &'static str {
        match self {
            ToleranceClass::Closed => "closed",
            ToleranceClass::Numerical => "fd",
        }
    }

    fn default_value(self) -> f64 {
        match self {
            ToleranceClass::Closed => DEFAULT_CLOSED_TOL,
            ToleranceClass::Numerical => DEFAULT_FD_TOL,
        }
    }
}

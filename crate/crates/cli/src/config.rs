//! Flags, the optional JSON config file, and their merge into a `RunConfig`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use carleman_lab::inequalities::{Family, TAU_ZERO};

#[derive(Debug, Parser)]
#[command(name = "carleman-lab", version, about = "Fractional extension, spherical spectra and Carleman-weighted inequality checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Eigenvalues of the spherical problem against the closed form.
    Spectrum,
    /// Extension of boundary samples into the half-plane.
    Extend,
    /// Carleman ratios over the test-function battery.
    Carleman,
    /// Trace-interpolation and Herbst ratios over the battery.
    Trace,
    /// Doubling ratios of a homogeneous solution or a battery function.
    Doubling,
    /// The acceptance suite.
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Extend => "extend",
            Command::Carleman => "carleman",
            Command::Trace => "trace",
            Command::Doubling => "doubling",
            Command::Verify => "verify",
        }
    }
}

/// Every flag is optional so that the config file can supply it.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Flags {
    /// Fractional orders, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
    /// Carleman parameters, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub tau: Option<Vec<f64>>,
    /// Largest eigenvalue index.
    #[arg(long, global = true)]
    pub k_max: Option<usize>,
    /// Degree of the homogeneous solution or battery index.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Resolution: eigensolver cells, vertical extension cells or angular cells.
    #[arg(long, global = true)]
    pub grid_size: Option<usize>,
    /// Radii, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Test-function family (`homogeneous`, `annular_harmonic`, `homogeneous_cutoff`, `random_bump`).
    #[arg(long, global = true)]
    pub family: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Reduced batteries and resolution.
    #[arg(long, global = true)]
    pub quick: bool,
    /// Boundary samples (`y1,value` CSV) for `extend`.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// JSON file with any of the flags above; flags win.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Flags {
    /// Fields set here take precedence over `base`.
    fn over(self, base: Flags) -> Flags {
        Flags {
            s: self.s.or(base.s),
            tau: self.tau.or(base.tau),
            k_max: self.k_max.or(base.k_max),
            k: self.k.or(base.k),
            grid_size: self.grid_size.or(base.grid_size),
            radii: self.radii.or(base.radii),
            family: self.family.or(base.family),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            quick: self.quick || base.quick,
            input: self.input.or(base.input),
            config: self.config,
        }
    }
}

/// Which functions a battery subcommand uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyChoice {
    /// The homogeneous solution itself, without cutoff.
    Homogeneous,
    Battery(Family),
    All,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub s: Vec<f64>,
    pub tau: Vec<f64>,
    pub k_max: usize,
    pub k: usize,
    pub grid_size: Option<usize>,
    pub radii: Vec<f64>,
    pub family: FamilyChoice,
    pub seed: u64,
    pub out: PathBuf,
    pub quick: bool,
    pub input: Option<PathBuf>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

pub fn load_file(path: &Path) -> Result<Flags, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))
}

fn default_s(command: Command) -> Vec<f64> {
    match command {
        Command::Spectrum | Command::Extend | Command::Doubling => vec![0.5],
        _ => vec![0.25, 0.5, 0.75],
    }
}

fn default_tau(command: Command) -> Vec<f64> {
    match command {
        Command::Trace => vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
        _ => vec![2.0, 4.0, 8.0, 16.0, 32.0],
    }
}

/// Smallest `grid_size` each subcommand accepts.
fn minimum_grid(command: Command) -> usize {
    match command {
        Command::Spectrum => 16,
        Command::Extend => 8,
        Command::Trace => 8,
        _ => 1,
    }
}

impl RunConfig {
    pub fn resolve(command: Command, flags: Flags) -> Result<Self, ConfigError> {
        let merged = match &flags.config {
            Some(path) => flags.clone().over(load_file(path)?),
            None => flags,
        };
        let s = merged.s.unwrap_or_else(|| default_s(command));
        if s.is_empty() {
            return err("--s needs at least one value");
        }
        if let Some(bad) = s.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return err(format!("s must lie in (0, 1), got {bad}"));
        }
        let tau = merged.tau.unwrap_or_else(|| default_tau(command));
        if let Some(bad) = tau.iter().find(|v| !(v.is_finite() && **v >= TAU_ZERO)) {
            return err(format!("tau must be finite and at least {TAU_ZERO}, got {bad}"));
        }
        if command == Command::Trace && tau.iter().any(|t| *t <= 1.0) {
            return err("trace interpolation needs tau > 1");
        }
        let radii = merged.radii.unwrap_or_else(|| vec![0.05, 0.1, 0.2, 0.4]);
        if let Some(bad) = radii.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return err(format!("radii must be positive, got {bad}"));
        }
        if let Some(n) = merged.grid_size {
            if n < minimum_grid(command) {
                return err(format!("--grid-size must be at least {} for {}", minimum_grid(command), command.name()));
            }
        }
        let family = match merged.family.as_deref() {
            None => match command {
                Command::Doubling => FamilyChoice::Homogeneous,
                _ => FamilyChoice::All,
            },
            Some("all") => FamilyChoice::All,
            Some("homogeneous") => FamilyChoice::Homogeneous,
            Some(name) => FamilyChoice::Battery(Family::parse(name).map_err(|e| ConfigError(e.to_string()))?),
        };
        if family == FamilyChoice::Homogeneous && !matches!(command, Command::Doubling) {
            return err("family `homogeneous` is only available for doubling");
        }
        if command == Command::Extend && merged.input.is_none() {
            return err("extend needs --input with y1,value samples");
        }
        Ok(Self {
            command,
            s,
            tau,
            k_max: merged.k_max.unwrap_or(6),
            k: merged.k.unwrap_or(2),
            grid_size: merged.grid_size,
            radii,
            family,
            seed: merged.seed.unwrap_or(0),
            out: merged.out.unwrap_or_else(|| PathBuf::from("out")),
            quick: merged.quick,
            input: merged.input,
        })
    }
}

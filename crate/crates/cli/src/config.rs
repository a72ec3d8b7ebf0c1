//! Run configuration: an optional TOML file, then command-line overrides.
//! After [`RunConfig::resolve`] every field holds the value actually used,
//! and that is what gets echoed into each output.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use jeans::background::PhysicalParams;
use jeans::spectral::TorusGrid;
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<jeans::Error> for ConfigError {
    fn from(e: jeans::Error) -> Self {
        ConfigError(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Direct,
    Fuchsian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Gamma,
    Kappa,
    Lambda,
    Epsilon,
    N,
    Tol,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Gamma => "gamma",
            Axis::Kappa => "kappa",
            Axis::Lambda => "lambda",
            Axis::Epsilon => "epsilon",
            Axis::N => "n",
            Axis::Tol => "tol",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub period: f64,
    pub dealias: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n: 16,
            period: 2.0 * std::f64::consts::PI,
            dealias: true,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> jeans::Result<TorusGrid> {
        Ok(TorusGrid::new(self.n, self.period)?.with_dealias(self.dealias))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesSpec {
    /// Eigenvalues of the Laplacian, all `<= 0`.
    pub lambdas: Vec<f64>,
    /// Times at which `t^{2/3} f(t)` is tabulated.
    pub times: Vec<f64>,
}

impl Default for ModesSpec {
    fn default() -> Self {
        ModesSpec {
            lambdas: vec![0.0, -1.0, -2.0],
            times: vec![10.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSpec {
    /// Stored states, log-spaced in `t` from 1 to the final time.
    pub snapshots: usize,
    /// Include every Fourier coefficient of each snapshot in the record.
    pub dump_spectra: bool,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        SimulateSpec {
            snapshots: 11,
            dump_spectra: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub seeds: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { seeds: 10 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Option<Axis>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: PhysicalParams,
    pub beta: f64,
    /// Size of the random data; the admissible bound when absent.
    pub beta0: Option<f64>,
    pub grid: GridSpec,
    pub solver: Solver,
    pub nonlinear: bool,
    /// Final physical time. `tau_min = 1 / t_end`, so setting one fixes the
    /// other.
    pub t_end: Option<f64>,
    pub tau_min: Option<f64>,
    pub tol: f64,
    pub sobolev_s: f64,
    pub seed: u64,
    pub cs: f64,
    pub cm: f64,
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub modes: ModesSpec,
    pub simulate: SimulateSpec,
    pub verify: VerifySpec,
    pub sweep: SweepSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: PhysicalParams::default(),
            beta: 1.0,
            beta0: None,
            grid: GridSpec::default(),
            solver: Solver::Fuchsian,
            nonlinear: false,
            t_end: None,
            tau_min: None,
            tol: 1e-10,
            sobolev_s: 3.0,
            seed: 0,
            cs: 2.0,
            cm: 10.0,
            out: None,
            workers: 1,
            modes: ModesSpec::default(),
            simulate: SimulateSpec::default(),
            verify: VerifySpec::default(),
            sweep: SweepSpec::default(),
        }
    }
}

/// Flags shared by every subcommand. Each one, when given, replaces the
/// file value.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long = "big-g")]
    pub big_g: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub beta0: Option<f64>,
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub period: Option<f64>,
    #[arg(long, value_enum)]
    pub solver: Option<Solver>,
    #[arg(long)]
    pub nonlinear: bool,
    #[arg(long = "t-end", conflicts_with = "tau_min")]
    pub t_end: Option<f64>,
    #[arg(long = "tau-min")]
    pub tau_min: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "sobolev-s")]
    pub sobolev_s: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Comma separated numbers; the empty string is the empty list.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    /// File (if any) with the flags laid on top.
    pub fn load(args: &CommonArgs) -> Result<Self, ConfigError> {
        let mut cfg = match &args.config {
            Some(p) => Self::from_file(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(args);
        Ok(cfg)
    }

    pub fn apply(&mut self, a: &CommonArgs) {
        if let Some(v) = a.gamma {
            self.params.gamma = v;
        }
        if let Some(v) = a.kappa {
            self.params.kappa = v;
        }
        if let Some(v) = a.big_g {
            self.params.big_g = v;
        }
        if let Some(v) = a.beta {
            self.beta = v;
        }
        if a.beta0.is_some() {
            self.beta0 = a.beta0;
        }
        if let Some(v) = a.grid_n {
            self.grid.n = v;
        }
        if let Some(v) = a.period {
            self.grid.period = v;
        }
        if let Some(v) = a.solver {
            self.solver = v;
        }
        if a.nonlinear {
            self.nonlinear = true;
        }
        // a time flag replaces both file entries
        if a.t_end.is_some() {
            self.t_end = a.t_end;
            self.tau_min = None;
        }
        if a.tau_min.is_some() {
            self.tau_min = a.tau_min;
            self.t_end = None;
        }
        if let Some(v) = a.tol {
            self.tol = v;
        }
        if let Some(v) = a.sobolev_s {
            self.sobolev_s = v;
        }
        if let Some(v) = a.seed {
            self.seed = v;
        }
        if a.out.is_some() {
            self.out = a.out.clone();
        }
        if let Some(v) = a.workers {
            self.workers = v;
        }
    }

    /// Validates everything and fills the derived time range. `beta0` is
    /// left to the command, which knows which bound applies.
    pub fn resolve(mut self) -> Result<Self, ConfigError> {
        self.params.validate()?;
        self.grid.build()?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(ConfigError(format!("beta = {}: must be positive", self.beta)));
        }
        if let Some(b) = self.beta0 {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(ConfigError(format!("beta0 = {b}: must be non-negative")));
            }
        }
        let (t_end, tau_min) = match (self.t_end, self.tau_min) {
            (None, None) => (100.0, 0.01),
            (Some(t), None) => (t, 1.0 / t),
            (None, Some(tau)) => (1.0 / tau, tau),
            (Some(t), Some(tau)) => {
                if ((t * tau) - 1.0).abs() > 1e-12 {
                    return Err(ConfigError(format!(
                        "t_end = {t} and tau_min = {tau} disagree; give only one"
                    )));
                }
                (t, tau)
            }
        };
        if !(t_end > 1.0 && t_end.is_finite()) {
            return Err(ConfigError(format!("t_end = {t_end}: must exceed 1")));
        }
        self.t_end = Some(t_end);
        self.tau_min = Some(tau_min);
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(ConfigError(format!("tol = {}: must lie in (0, 1)", self.tol)));
        }
        if !(self.sobolev_s >= 3.0 && self.sobolev_s.is_finite()) {
            return Err(ConfigError(format!("sobolev_s = {}: must be at least 3", self.sobolev_s)));
        }
        if !(self.cs > 0.0 && self.cm > 0.0) {
            return Err(ConfigError("cs and cm must be positive".into()));
        }
        if self.workers == 0 {
            return Err(ConfigError("workers must be at least 1".into()));
        }
        if self.simulate.snapshots < 2 {
            return Err(ConfigError("simulate.snapshots must be at least 2".into()));
        }
        Ok(self)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end.unwrap_or(100.0)
    }

    pub fn tau_min(&self) -> f64 {
        self.tau_min.unwrap_or(0.01)
    }
}

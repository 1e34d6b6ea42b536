//! Experiment configuration: a TOML document whose keys mirror the CLI flags.
//! Flags override file values; anything left unset falls back to the solver
//! defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use noisy_gs::{NoiseBounds, SolverParams};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

pub const DEFAULT_OUT_DIR: &str = "noisygs-out";
pub const DEFAULT_SWEEP_LEVELS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
pub const DEFAULT_EPS_LS_GRID: [f64; 6] = [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];
/// Ratio of the line-search slack to the function noise under `auto`.
pub const AUTO_EPS_LS_FACTOR: f64 = 2.1;

/// A number, or `auto` to derive it from `eps_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AutoValue {
    Auto,
    Value(f64),
}

impl FromStr for AutoValue {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(AutoValue::Auto);
        }
        s.parse::<f64>()
            .map(AutoValue::Value)
            .map_err(|_| format!("expected a number or 'auto', got '{s}'"))
    }
}

impl fmt::Display for AutoValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AutoValue::Auto => f.write_str("auto"),
            AutoValue::Value(v) => write!(f, "{v:?}"),
        }
    }
}

impl Serialize for AutoValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            AutoValue::Auto => s.serialize_str("auto"),
            AutoValue::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for AutoValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(AutoValue::Value(v)),
            Raw::Int(v) => Ok(AutoValue::Value(v as f64)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub eps_f: Option<f64>,
    pub eps_g: Option<AutoValue>,
    pub noise_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub m: Option<usize>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    pub eta: Option<f64>,
    pub eps_ls: Option<AutoValue>,
    pub nu: Option<f64>,
    pub eps1: Option<f64>,
    pub lipschitz: Option<f64>,
    pub alpha_min: Option<f64>,
    pub budget: Option<usize>,
    pub eps_min: Option<f64>,
    pub f_low: Option<f64>,
    pub seed: Option<u64>,
    pub strict_requires: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub levels: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: Option<String>,
    pub batch: Option<usize>,
    pub eps_ls_grid: Option<Vec<f64>>,
    pub n_samples: Option<usize>,
    pub features: Option<usize>,
    pub separation: Option<f64>,
    pub data_seed: Option<u64>,
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub noise: NoiseConfig,
    pub solver: SolverConfig,
    pub repeats: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub sweep: SweepConfig,
    pub train: TrainConfig,
}

macro_rules! overlay_fields {
    ($base:expr, $top:expr; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Returns `self` with every field set in `top` replaced by `top`'s value.
    pub fn overlay(mut self, top: &ExperimentConfig) -> Self {
        overlay_fields!(self.problem, top.problem; name);
        overlay_fields!(self.noise, top.noise; eps_f, eps_g, noise_seed);
        overlay_fields!(self.solver, top.solver;
            m, theta, gamma, eta, eps_ls, nu, eps1, lipschitz, alpha_min,
            budget, eps_min, f_low, seed, strict_requires);
        overlay_fields!(self, top; repeats, output_dir);
        overlay_fields!(self.sweep, top.sweep; levels);
        overlay_fields!(self.train, top.train;
            mode, batch, eps_ls_grid, n_samples, features, separation, data_seed, data);
        self
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn repeats(&self) -> Result<usize, CliError> {
        match self.repeats.unwrap_or(1) {
            0 => Err(CliError::Usage("repeats must be at least 1".into())),
            r => Ok(r),
        }
    }

    pub fn eps_f(&self) -> f64 {
        self.noise.eps_f.unwrap_or(0.0)
    }

    /// Noise bounds with `eps_g = sqrt(eps_f)` unless given explicitly.
    pub fn bounds_for(&self, eps_f: f64) -> Result<NoiseBounds, CliError> {
        let eps_g = match self.noise.eps_g {
            None | Some(AutoValue::Auto) => eps_f.sqrt(),
            Some(AutoValue::Value(v)) => v,
        };
        NoiseBounds::new(eps_f, eps_g).map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Solver parameters for noise level `eps_f`, with `eps_ls = 2.1·eps_f`
    /// unless given explicitly.
    pub fn params_for(&self, eps_f: f64, seed: u64) -> Result<SolverParams, CliError> {
        let s = &self.solver;
        let d = SolverParams::default();
        let eps_ls = match s.eps_ls {
            None | Some(AutoValue::Auto) => AUTO_EPS_LS_FACTOR * eps_f,
            Some(AutoValue::Value(v)) => v,
        };
        Ok(SolverParams {
            m: s.m.or(d.m),
            theta: s.theta.unwrap_or(d.theta),
            gamma: s.gamma.unwrap_or(d.gamma),
            eta: s.eta.unwrap_or(d.eta),
            eps_ls,
            nu: s.nu.unwrap_or(d.nu),
            eps1: s.eps1.unwrap_or(d.eps1),
            bounds: self.bounds_for(eps_f)?,
            lipschitz: s.lipschitz.or(d.lipschitz),
            alpha_min: s.alpha_min.unwrap_or(d.alpha_min),
            budget: s.budget.unwrap_or(d.budget),
            eps_min: s.eps_min.unwrap_or(d.eps_min),
            f_low: s.f_low.unwrap_or(d.f_low),
            master_seed: seed,
            strict_requires: s.strict_requires.unwrap_or(d.strict_requires),
            qp_tol: d.qp_tol,
            lipschitz_min_step: d.lipschitz_min_step,
        })
    }

    pub fn seed(&self) -> u64 {
        self.solver.seed.unwrap_or(0)
    }

    /// Noise seed; defaults to the solver seed so one flag pins a whole run.
    pub fn noise_seed(&self, seed: u64) -> u64 {
        self.noise.noise_seed.unwrap_or(seed)
    }

    pub fn problem_name(&self) -> &str {
        self.problem.name.as_deref().unwrap_or("rosenbrock")
    }
}

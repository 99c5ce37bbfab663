//! Experiment configuration: what to train, with what, for how long.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Integrator;
use crate::error::{Error, Result};
use crate::grad::{AdamState, GradientOptimizer};
use crate::matrix::ParamSet;
use crate::nn::{Head, WindowReduction};
use crate::optim::{
    Dopamine, DopamineConfig, DopamineVariant, PerturbationOptimizer, SpectralSchedule, WeightPerturbation, WpConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Xor,
    Lorenz,
    Rossler,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Xor => "xor",
            TaskKind::Lorenz => "lorenz",
            TaskKind::Rossler => "rossler",
        }
    }

    pub fn is_forecasting(self) -> bool {
        !matches!(self, TaskKind::Xor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerId {
    Wp,
    Swp,
    Dopamine1,
    Dopamine2,
    Sgd,
    Adam,
}

impl OptimizerId {
    pub const ALL: [OptimizerId; 6] = [
        OptimizerId::Wp,
        OptimizerId::Swp,
        OptimizerId::Dopamine1,
        OptimizerId::Dopamine2,
        OptimizerId::Sgd,
        OptimizerId::Adam,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerId::Wp => "wp",
            OptimizerId::Swp => "swp",
            OptimizerId::Dopamine1 => "dopamine1",
            OptimizerId::Dopamine2 => "dopamine2",
            OptimizerId::Sgd => "sgd",
            OptimizerId::Adam => "adam",
        }
    }

    pub fn is_gradient_based(self) -> bool {
        matches!(self, OptimizerId::Sgd | OptimizerId::Adam)
    }
}

impl fmt::Display for OptimizerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptimizerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown optimizer '{s}'")))
    }
}

/// Which coordinates of the trajectory the network sees and predicts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Features {
    /// The full `(x, y, z)` state.
    #[default]
    All,
    X,
    Y,
    Z,
}

impl Features {
    pub fn dim(self) -> usize {
        match self {
            Features::All => 3,
            _ => 1,
        }
    }

    pub fn axis(self) -> Option<usize> {
        match self {
            Features::All => None,
            Features::X => Some(0),
            Features::Y => Some(1),
            Features::Z => Some(2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub kind: TaskKind,
    /// Trajectory points (forecasting).
    #[serde(default = "default_length")]
    pub length: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub integrator: Integrator,
    /// Min-max normalise the trajectory to `[0, 1]` per coordinate.
    #[serde(default = "yes")]
    pub normalize: bool,
    #[serde(default)]
    pub features: Features,
    #[serde(default = "default_lookback")]
    pub lookback: usize,
    /// Points per XOR cluster.
    #[serde(default = "default_cluster")]
    pub n_per_cluster: usize,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
}

fn default_length() -> usize {
    5000
}
fn default_dt() -> f64 {
    0.01
}
fn yes() -> bool {
    true
}
fn default_lookback() -> usize {
    32
}
fn default_cluster() -> usize {
    50
}
fn default_noise() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Hidden width: the RNN state size, or the MLP hidden layer.
    pub hidden: usize,
    #[serde(default = "yes")]
    pub bias: bool,
    /// Output head of the XOR network.
    #[serde(default = "default_head")]
    pub head: Head,
}

fn default_head() -> Head {
    Head::SigmoidSoftmax
}

/// Optimizer hyperparameters; which ones are required depends on `id`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub id: OptimizerId,
    /// Learning rate; the initial one for the Dopamine variants.
    pub eta: f64,
    pub sigma_sq: Option<f64>,
    pub s0: Option<f64>,
    pub beta_s: Option<f64>,
    pub beta_eta: Option<f64>,
    /// Target spectral radius of the recurrent matrix.
    pub lambda: Option<f64>,
    /// Steps between spectral resets.
    #[serde(default = "one")]
    pub reset_interval: usize,
    #[serde(default = "one")]
    pub draws_per_step: usize,
    pub eta_floor: Option<f64>,
    #[serde(default)]
    pub s_per_layer: bool,
    /// Global gradient-norm clip for the gradient baselines.
    pub clip_norm: Option<f64>,
    /// How the window's per-step losses combine into the training objective.
    #[serde(default)]
    pub reduction: WindowReduction,
}

fn one() -> usize {
    1
}

fn need(v: Option<f64>, name: &str, id: OptimizerId) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("optimizer '{id}' needs '{name}'")))
}

impl OptimizerConfig {
    fn spectral(&self) -> Result<Option<SpectralSchedule>> {
        let schedule = self.lambda.map(|lambda| SpectralSchedule { lambda, interval: self.reset_interval });
        if self.id == OptimizerId::Swp && schedule.is_none() {
            return Err(Error::Config("optimizer 'swp' needs 'lambda'".into()));
        }
        Ok(schedule)
    }

    /// Build the perturbation optimizer this config describes.
    pub fn perturbation(&self, params: &ParamSet) -> Result<PerturbationOptimizer> {
        let id = self.id;
        let sigma_sq = need(self.sigma_sq, "sigma_sq", id)?;
        let spectral = self.spectral()?;
        let variant = match id {
            OptimizerId::Wp | OptimizerId::Swp => {
                let cfg = WpConfig { eta: self.eta, sigma_sq, spectral, draws_per_step: self.draws_per_step };
                return Ok(PerturbationOptimizer::Wp(WeightPerturbation::new(cfg)?));
            }
            OptimizerId::Dopamine1 => DopamineVariant::One,
            OptimizerId::Dopamine2 => DopamineVariant::Two,
            OptimizerId::Sgd | OptimizerId::Adam => {
                return Err(Error::Config(format!("'{id}' is not a perturbation optimizer")))
            }
        };
        let cfg = DopamineConfig {
            variant,
            eta0: self.eta,
            s0: need(self.s0, "s0", id)?,
            beta_s: need(self.beta_s, "beta_s", id)?,
            beta_eta: need(self.beta_eta, "beta_eta", id)?,
            sigma_sq,
            spectral,
            eta_floor: self.eta_floor,
            s_per_layer: self.s_per_layer,
            draws_per_step: self.draws_per_step,
        };
        Ok(PerturbationOptimizer::Dopamine(Dopamine::new(cfg, params)?))
    }

    pub fn gradient(&self, params: &ParamSet) -> Result<GradientOptimizer> {
        match self.id {
            OptimizerId::Sgd => {
                if !(self.eta > 0.0 && self.eta.is_finite()) {
                    return Err(Error::Config(format!("learning rate must be positive, got {}", self.eta)));
                }
                Ok(GradientOptimizer::Sgd { eta: self.eta })
            }
            OptimizerId::Adam => Ok(GradientOptimizer::Adam(AdamState::new(params, self.eta)?)),
            id => Err(Error::Config(format!("'{id}' is not a gradient optimizer"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    /// Windows per batch (forecasting); drawn evenly over the trajectory and
    /// fixed for the whole run. Absent, or at least the dataset size, means
    /// full batch.
    pub batch_size: Option<usize>,
    #[serde(default = "one")]
    pub seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Where run directories go; no files are written when absent.
    pub out_dir: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub task: TaskConfig,
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub training: TrainingConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Apply `section.key=value` overrides, re-parsing so the result is
    /// validated exactly like a config file.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(&self.to_toml()?).map_err(|e| Error::Config(e.to_string()))?;
        for (key, raw) in overrides {
            let value = parse_value(raw);
            let mut parts: Vec<&str> = key.split('.').collect();
            let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::Config(format!("bad key '{key}'")))?;
            let mut table = &mut doc;
            for p in parts {
                table = table
                    .entry(p)
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| Error::Config(format!("'{p}' in '{key}' is not a section")))?;
            }
            // Keep floats floats when the override is written as an integer.
            let value = match (table.get(last), value) {
                (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
                (_, v) => v,
            };
            table.insert(last.to_string(), value);
        }
        Self::from_toml(&toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.training.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.training.seeds == 0 {
            return bad("seeds must be at least 1".into());
        }
        if self.training.batch_size == Some(0) {
            return bad("batch_size must be at least 1".into());
        }
        if self.model.hidden == 0 {
            return bad("hidden width must be at least 1".into());
        }
        let opt = &self.optimizer;
        if self.task.kind == TaskKind::Xor && (opt.id == OptimizerId::Swp || opt.lambda.is_some()) {
            return bad("spectral resets need a recurrent network".into());
        }
        if self.task.kind.is_forecasting() && self.task.lookback == 0 {
            return bad("lookback must be at least 1".into());
        }
        // Build the optimizer against a dummy parameter set to check every
        // hyperparameter it needs.
        let dummy = ParamSet::single(crate::matrix::ParamMatrix::zeros(1, 1));
        if opt.id.is_gradient_based() {
            opt.gradient(&dummy)?;
            if let Some(c) = opt.clip_norm {
                if !(c > 0.0) {
                    return bad(format!("clip_norm must be positive, got {c}"));
                }
            }
        } else {
            opt.perturbation(&dummy)?;
        }
        Ok(())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    if let Ok(v) = raw.parse::<i64>() {
        return toml::Value::Integer(v);
    }
    if let Ok(v) = raw.parse::<f64>() {
        return toml::Value::Float(v);
    }
    match raw {
        "true" => toml::Value::Boolean(true),
        "false" => toml::Value::Boolean(false),
        _ => toml::Value::String(raw.to_string()),
    }
}

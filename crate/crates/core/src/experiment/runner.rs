//! Seeded training runs and their on-disk artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, OptimizerId, TaskKind};
use crate::data::{integrate, make_windows, xor_dataset, System, WindowedDataset, XOR_POINTS};
use crate::analysis::{loss_landscape, LandscapeConfig, LandscapeGrid};
use crate::error::{Error, Result};
use crate::grad::{bptt, mlp_backprop, BpttConfig, GradientOptimizer};
use crate::matrix::{ParamMatrix, ParamSet};
use crate::nn::mlp::predict_classes;
use crate::nn::{
    mlp_forward, rnn_forward, Architecture, Batch, ClassificationLoss, MlpSpec, Network, Objective, RnnSpec, SeqBatch,
    SequenceLoss, WindowReduction,
};
use crate::optim::PerturbationOptimizer;
use crate::rng::{stream_rng, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Diverged,
}

/// What one seed of an experiment produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub name: String,
    pub task: TaskKind,
    pub optimizer: OptimizerId,
    pub seed: u64,
    pub status: RunStatus,
    /// Epoch whose step failed, when diverged.
    pub diverged_at: Option<usize>,
    pub failure: Option<String>,
    /// What the loss numbers measure.
    pub loss_kind: String,
    pub initial_loss: f64,
    /// Loss of the final parameters; `inf` after divergence.
    pub final_loss: f64,
    pub epochs_run: usize,
    pub params_checksum: String,
    pub train_seconds: f64,
    /// Training-set accuracy (XOR).
    pub accuracy: Option<f64>,
    /// How many of the four noiseless XOR points are classified correctly.
    pub canonical_correct: Option<usize>,
    /// Loss before each update; one entry per completed epoch.
    #[serde(skip)]
    pub loss_curve: Vec<f64>,
}

/// A finished run: its record and the trained network.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub record: RunRecord,
    pub network: Network,
}

/// Data shared by every seed of a forecasting experiment.
pub struct Forecast {
    pub spec: RnnSpec,
    pub windows: WindowedDataset,
    pub batch: SeqBatch,
}

impl Forecast {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        let task = &config.task;
        let system = match task.kind {
            TaskKind::Lorenz => System::lorenz(),
            TaskKind::Rossler => System::rossler(),
            TaskKind::Xor => return Err(Error::TaskMismatch("forecasting".into(), "xor".into())),
        };
        let traj = integrate(system, [1.0, 0.0, 0.0], task.dt, task.length, task.integrator)?;
        let series = match task.features.axis() {
            None => traj.flat(),
            Some(axis) => traj.coordinate(axis),
        };
        let dim = task.features.dim();
        let windows = make_windows(&series, dim, task.lookback, task.normalize)?;
        let count = config.training.batch_size.unwrap_or(usize::MAX).min(windows.len());
        let batch = windows.seq_batch(&windows.evenly_spaced(count))?;
        Ok(Self { spec: RnnSpec::new(dim, config.model.hidden, dim), windows, batch })
    }
}

fn xor_spec(config: &ExperimentConfig) -> Result<MlpSpec> {
    MlpSpec::new(vec![2, config.model.hidden, 2], config.model.bias, config.model.head)
}

/// Window objective used for training and its per-step-mean counterpart.
fn window_scale(reduction: WindowReduction, steps: usize) -> f64 {
    match reduction {
        WindowReduction::Sum => 1.0 / steps as f64,
        WindowReduction::Mean => 1.0,
    }
}

enum Trainer {
    Perturbation(PerturbationOptimizer),
    Gradient(GradientOptimizer, Option<f64>),
}

impl Trainer {
    fn new(config: &ExperimentConfig, params: &mut ParamSet) -> Result<Self> {
        let opt = &config.optimizer;
        if opt.id.is_gradient_based() {
            Ok(Trainer::Gradient(opt.gradient(params)?, opt.clip_norm))
        } else {
            let mut p = opt.perturbation(params)?;
            p.prepare(params)?;
            Ok(Trainer::Perturbation(p))
        }
    }
}

/// Run the training loop for one seed. Numerical failure ends the loop and
/// is reported in the record; only configuration problems are errors.
pub fn run_seed(config: &ExperimentConfig, seed: u64, forecast: Option<&Forecast>) -> Result<RunResult> {
    config.validate()?;
    let kind = config.task.kind;
    let mut init_rng = stream_rng(seed, Stream::Init);
    let mut rng = stream_rng(seed, Stream::Perturbation);
    let reduction = config.optimizer.reduction;

    let xor_data;
    let (mut network, loss_kind) = match (kind, forecast) {
        (TaskKind::Xor, _) => {
            xor_data = Some(xor_dataset(config.task.n_per_cluster, config.task.noise_std, seed)?);
            (Network::init(Architecture::Mlp(xor_spec(config)?), &mut init_rng)?, "bce")
        }
        (_, Some(f)) => {
            xor_data = None;
            let kind = if config.task.normalize { "normalized mse" } else { "mse" };
            (Network::init(Architecture::Rnn(f.spec.clone()), &mut init_rng)?, kind)
        }
        (_, None) => return Err(Error::Config("forecasting run without prepared data".into())),
    };
    let mut trainer = Trainer::new(config, &mut network.params)?;

    let params = &mut network.params;
    let arch = network.arch.clone();
    // Loss at the current parameters in reported units (BCE, or per-step MSE).
    let evaluate = |p: &ParamSet| -> Result<f64> {
        match (&arch, forecast) {
            (Architecture::Mlp(spec), _) => {
                ClassificationLoss { spec, batch: xor_data.as_ref().expect("xor data") }.loss(p)
            }
            (Architecture::Rnn(spec), Some(f)) => SequenceLoss::new(spec, &f.batch).mean_loss(p),
            _ => unreachable!("architecture and task agree"),
        }
    };

    let start = Instant::now();
    let mut curve = Vec::with_capacity(config.training.epochs);
    let mut failure = None;
    for epoch in 0..config.training.epochs {
        let step: Result<f64> = match (&mut trainer, &arch) {
            (Trainer::Perturbation(opt), Architecture::Mlp(spec)) => {
                let obj = ClassificationLoss { spec, batch: xor_data.as_ref().expect("xor data") };
                opt.step(params, &obj, &mut rng).map(|i| i.loss)
            }
            (Trainer::Perturbation(opt), Architecture::Rnn(spec)) => {
                let batch = &forecast.expect("forecast data").batch;
                let obj = SequenceLoss::new(spec, batch).with_reduction(reduction);
                opt.step(params, &obj, &mut rng).map(|i| i.loss * window_scale(reduction, batch.steps()))
            }
            (Trainer::Gradient(opt, clip), Architecture::Mlp(spec)) => {
                mlp_backprop(spec, params, xor_data.as_ref().expect("xor data")).and_then(|(loss, mut g)| {
                    if let Some(c) = clip {
                        g.clip_norm(*c);
                    }
                    opt.step(params, &g).map(|_| loss)
                })
            }
            (Trainer::Gradient(opt, clip), Architecture::Rnn(spec)) => {
                let batch = &forecast.expect("forecast data").batch;
                let cfg = BpttConfig { reduction, memory_budget: None };
                bptt(spec, params, batch, &cfg).and_then(|(loss, mut g)| {
                    if let Some(c) = clip {
                        g.clip_norm(*c);
                    }
                    opt.step(params, &g).map(|_| loss * window_scale(reduction, batch.steps()))
                })
            }
        };
        match step {
            Ok(loss) if loss.is_finite() => curve.push(loss),
            Ok(loss) => {
                failure = Some((epoch, format!("loss became {loss}")));
                break;
            }
            Err(e @ (Error::NonFinite(_) | Error::Diverged { .. } | Error::DegenerateSpectrum(_))) => {
                failure = Some((epoch, e.to_string()));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let train_seconds = start.elapsed().as_secs_f64();

    let final_loss = if failure.is_none() && params.is_finite() {
        evaluate(params).ok().filter(|v| v.is_finite()).unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    };
    let initial_loss = match curve.first() {
        Some(&v) => v,
        None => {
            let fresh = Network::init(arch.clone(), &mut stream_rng(seed, Stream::Init))?;
            evaluate(&fresh.params)?
        }
    };
    let (accuracy, canonical_correct) = match (&arch, &xor_data) {
        (Architecture::Mlp(spec), Some(data)) if params.is_finite() => {
            let (acc, canon) = xor_accuracy(spec, params, data)?;
            (Some(acc), Some(canon))
        }
        _ => (None, None),
    };
    let status = if failure.is_some() || !final_loss.is_finite() { RunStatus::Diverged } else { RunStatus::Ok };
    let record = RunRecord {
        name: config.name.clone(),
        task: kind,
        optimizer: config.optimizer.id,
        seed,
        status,
        diverged_at: failure.as_ref().map(|(e, _)| *e),
        failure: failure.map(|(_, m)| m),
        loss_kind: loss_kind.to_string(),
        initial_loss,
        final_loss,
        epochs_run: curve.len(),
        params_checksum: params.checksum(),
        train_seconds,
        accuracy,
        canonical_correct,
        loss_curve: curve,
    };
    Ok(RunResult { record, network })
}

/// Training-set accuracy and the number of correctly classified noiseless
/// XOR corners. Probability ties go to class 0.
pub fn xor_accuracy(spec: &MlpSpec, params: &ParamSet, data: &Batch) -> Result<(f64, usize)> {
    let labels = data.labels().ok_or_else(|| Error::Shape("XOR data needs labels".into()))?;
    let pred = predict_classes(&mlp_forward(spec, params, &data.inputs)?);
    let hits = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
    let corners = ParamMatrix::from_rows(&XOR_POINTS.map(|(c, _)| c).iter().map(|c| &c[..]).collect::<Vec<_>>())?;
    let corner_pred = predict_classes(&mlp_forward(spec, params, &corners)?);
    let canon = corner_pred.iter().zip(XOR_POINTS).filter(|(p, (_, l))| **p == *l).count();
    Ok((hits as f64 / labels.len() as f64, canon))
}

/// Directory of one seed's artifacts.
pub fn run_dir(out: &Path, name: &str, seed: u64) -> PathBuf {
    out.join(name).join(format!("seed-{seed}"))
}

/// Run every seed of `config`; when `training.out_dir` is set, persist each
/// run's artifacts. A diverged seed does not stop the others.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let forecast = if config.task.kind.is_forecasting() { Some(Forecast::prepare(config)?) } else { None };
    let base = config.training.base_seed;
    let mut records = Vec::with_capacity(config.training.seeds);
    for seed in base..base + config.training.seeds as u64 {
        let result = run_seed(config, seed, forecast.as_ref())?;
        if let Some(out) = &config.training.out_dir {
            write_run(config, &result, forecast.as_ref(), &run_dir(Path::new(out), &config.name, seed))?;
        }
        records.push(result.record);
    }
    Ok(records)
}

/// Write `config.toml`, `record.json`, `params.json`, `loss_curve.csv` and
/// `predictions.csv` into `dir`.
pub fn write_run(config: &ExperimentConfig, result: &RunResult, forecast: Option<&Forecast>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), config.to_toml()?)?;
    fs::write(dir.join("record.json"), serde_json::to_string_pretty(&result.record)?)?;
    fs::write(dir.join("params.json"), serde_json::to_string(&result.network)?)?;
    let mut w = csv::Writer::from_path(dir.join("loss_curve.csv"))?;
    w.write_record(["epoch", "loss"])?;
    for (e, l) in result.record.loss_curve.iter().enumerate() {
        w.serialize((e, l))?;
    }
    w.flush()?;
    if result.network.params.is_finite() {
        write_predictions(config, result, forecast, &dir.join("predictions.csv"))?;
    }
    Ok(())
}

fn write_predictions(config: &ExperimentConfig, result: &RunResult, forecast: Option<&Forecast>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    match (&result.network.arch, forecast) {
        (Architecture::Rnn(spec), Some(f)) => {
            let dim = f.windows.dim();
            let names = ["x", "y", "z"];
            let cols: Vec<&str> = match config.task.features.axis() {
                None => names.to_vec(),
                Some(a) => vec![names[a]],
            };
            let mut header = vec!["t".to_string()];
            header.extend(cols.iter().map(|c| format!("true_{c}")));
            header.extend(cols.iter().map(|c| format!("pred_{c}")));
            w.write_record(&header)?;
            let all = f.windows.full_batch()?;
            let out = rnn_forward(spec, &result.network.params, &all, None)?;
            let last = out.prediction_at(all.steps() - 1, all.samples(), dim);
            for i in 0..all.samples() {
                let mut row = vec![(i + f.windows.lookback()) as f64];
                row.extend_from_slice(f.windows.target(i));
                row.extend_from_slice(&last[i * dim..(i + 1) * dim]);
                w.serialize(row)?;
            }
        }
        (Architecture::Mlp(spec), _) => {
            let data = xor_dataset(config.task.n_per_cluster, config.task.noise_std, result.record.seed)?;
            let probs = mlp_forward(spec, &result.network.params, &data.inputs)?;
            let pred = predict_classes(&probs);
            w.write_record(["x0", "x1", "label", "p0", "p1", "pred"])?;
            let labels = data.labels().expect("labels");
            for i in 0..data.len() {
                let r = data.inputs.row(i);
                w.serialize((r[0], r[1], labels[i], probs.get(i, 0), probs.get(i, 1), pred[i]))?;
            }
        }
        _ => {}
    }
    w.flush()?;
    Ok(())
}

/// Load a run directory written by [`write_run`].
pub fn load_run(dir: &Path) -> Result<(RunRecord, Network, ExperimentConfig)> {
    let record: RunRecord = serde_json::from_str(&fs::read_to_string(dir.join("record.json"))?)?;
    let network: Network = serde_json::from_str(&fs::read_to_string(dir.join("params.json"))?)?;
    let config = ExperimentConfig::from_toml(&fs::read_to_string(dir.join("config.toml"))?)?;
    Ok((record, network, config))
}

/// Loss landscape of a trained network on the data it was trained on, in
/// reported units (BCE for XOR, per-step MSE for forecasting).
pub fn run_landscape(
    config: &ExperimentConfig,
    network: &Network,
    seed: u64,
    landscape: &LandscapeConfig,
) -> Result<LandscapeGrid> {
    network.validate()?;
    match (&network.arch, config.task.kind) {
        (Architecture::Mlp(spec), TaskKind::Xor) => {
            let data = xor_dataset(config.task.n_per_cluster, config.task.noise_std, seed)?;
            loss_landscape(&ClassificationLoss { spec, batch: &data }, &network.params, landscape)
        }
        (Architecture::Rnn(spec), kind) if kind.is_forecasting() => {
            let forecast = Forecast::prepare(config)?;
            let objective = SequenceLoss::new(spec, &forecast.batch).with_reduction(WindowReduction::Mean);
            loss_landscape(&objective, &network.params, landscape)
        }
        _ => Err(Error::TaskMismatch(format!("{:?}", config.task.kind), "network architecture".into())),
    }
}

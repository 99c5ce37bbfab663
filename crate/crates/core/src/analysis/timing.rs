//! Wall-clock cost of one optimizer step as a function of window length.

use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::stats::{mean, median, sample_std};
use crate::data::make_windows;
use crate::error::{Error, Result};
use crate::grad::{BpttConfig, BpttTape, GradientOptimizer};
use crate::matrix::ParamSet;
use crate::nn::{RnnSpec, SeqBatch, SequenceLoss, WindowReduction};
use crate::optim::PerturbationOptimizer;
use crate::rng::{stream_rng, Stream};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimingPhase {
    /// Only the work after the loss is known: the backward pass and update
    /// for gradient methods, the rate and parameter update for perturbation.
    #[default]
    UpdateOnly,
    /// Forward evaluation(s) plus the update.
    ForwardUpdate,
}

impl TimingPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            TimingPhase::UpdateOnly => "update-only",
            TimingPhase::ForwardUpdate => "forward+update",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub warmup: usize,
    pub trials: usize,
    pub phase: TimingPhase,
    /// Sequences per batch.
    pub samples: usize,
    /// Transient working memory allowed per step, in bytes.
    pub memory_budget: Option<usize>,
    /// Window loss used by the timed steps.
    #[serde(default = "mean_reduction")]
    pub reduction: WindowReduction,
    pub seed: u64,
}

fn mean_reduction() -> WindowReduction {
    WindowReduction::Mean
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self { warmup: 2, trials: 10, phase: TimingPhase::UpdateOnly, samples: 32, memory_budget: None, reduction: WindowReduction::Mean, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub optimizer: String,
    pub seq_len: usize,
    pub phase: TimingPhase,
    pub mean_s: f64,
    pub sem_s: f64,
    pub median_s: f64,
    pub n_trials: usize,
    pub failed: bool,
    /// Fewer than two trials: the SEM is reported as zero.
    pub low_confidence: bool,
    pub failure: Option<String>,
}

impl TimingRecord {
    fn failure(optimizer: &str, seq_len: usize, phase: TimingPhase, why: String) -> Self {
        Self {
            optimizer: optimizer.to_string(),
            seq_len,
            phase,
            mean_s: f64::NAN,
            sem_s: f64::NAN,
            median_s: f64::NAN,
            n_trials: 0,
            failed: true,
            low_confidence: true,
            failure: Some(why),
        }
    }

    fn from_samples(optimizer: &str, seq_len: usize, phase: TimingPhase, secs: &[f64]) -> Self {
        let n = secs.len();
        let sem = if n >= 2 { sample_std(secs) / (n as f64).sqrt() } else { 0.0 };
        Self {
            optimizer: optimizer.to_string(),
            seq_len,
            phase,
            mean_s: mean(secs),
            sem_s: sem,
            median_s: median(secs),
            n_trials: n,
            failed: false,
            low_confidence: n < 2,
            failure: None,
        }
    }
}

/// The optimizer being timed, with its state.
#[derive(Clone, Debug)]
pub enum TimedOptimizer {
    Perturbation(PerturbationOptimizer),
    Gradient(GradientOptimizer),
}

/// Working memory of one perturbation step beyond the data: two hidden-state
/// buffers and a readout for the forward pass, plus the noise draws and the
/// perturbed parameter copy.
pub fn perturbation_step_bytes(spec: &RnnSpec, samples: usize, num_params: usize, draws: usize) -> usize {
    let forward = samples * (2 * spec.hidden_dim + spec.output_dim);
    (forward + (draws + 1) * num_params) * std::mem::size_of::<f64>()
}

fn draws_of(opt: &PerturbationOptimizer) -> usize {
    match opt {
        PerturbationOptimizer::Wp(o) => o.config.draws_per_step,
        PerturbationOptimizer::Dopamine(o) => o.config.draws_per_step,
    }
}

/// Seconds spent in the timed phase of one step.
fn one_step(
    opt: &mut TimedOptimizer,
    spec: &RnnSpec,
    params: &mut ParamSet,
    batch: &SeqBatch,
    config: &TimingConfig,
    rng: &mut crate::rng::Rng,
) -> Result<Duration> {
    let phase = config.phase;
    match opt {
        TimedOptimizer::Perturbation(o) => {
            let objective = SequenceLoss::new(spec, batch).with_reduction(config.reduction);
            let start = Instant::now();
            let round = o.forward_phase(params, &objective, rng)?;
            let forward = start.elapsed();
            let start = Instant::now();
            o.update_phase(params, &round)?;
            let update = start.elapsed();
            Ok(match phase {
                TimingPhase::UpdateOnly => update,
                TimingPhase::ForwardUpdate => forward + update,
            })
        }
        TimedOptimizer::Gradient(o) => {
            let bptt_config = BpttConfig { memory_budget: config.memory_budget, reduction: config.reduction };
            let start = Instant::now();
            let tape = BpttTape::forward(spec, params, batch, &bptt_config)?;
            let forward = start.elapsed();
            if !tape.loss.is_finite() {
                return Err(Error::NonFinite("window loss".into()));
            }
            let start = Instant::now();
            let grads = tape.backward(params)?;
            o.step(params, &grads)?;
            let update = start.elapsed();
            Ok(match phase {
                TimingPhase::UpdateOnly => update,
                TimingPhase::ForwardUpdate => forward + update,
            })
        }
    }
}

/// Time `optimizer` on windows of each length in `seq_lens` cut from a
/// row-major `len x dim` series. Failures (memory budget, non-finite values,
/// too-short series) become records with `failed` set.
pub fn time_optimizer(
    id: &str,
    optimizer: &TimedOptimizer,
    spec: &RnnSpec,
    params: &ParamSet,
    series: &[f64],
    dim: usize,
    seq_lens: &[usize],
    config: &TimingConfig,
) -> Vec<TimingRecord> {
    let phase = config.phase;
    seq_lens
        .iter()
        .map(|&t| {
            let attempt = || -> Result<Vec<f64>> {
                if let (Some(budget), TimedOptimizer::Perturbation(o)) = (config.memory_budget, optimizer) {
                    let required = perturbation_step_bytes(spec, config.samples, params.num_scalars(), draws_of(o));
                    if required > budget {
                        return Err(Error::MemoryBudget { required, budget });
                    }
                }
                let windows = make_windows(series, dim, t, false)?;
                let batch = windows.seq_batch(&windows.evenly_spaced(config.samples))?;
                let mut opt = optimizer.clone();
                let mut p = params.clone();
                let mut rng = stream_rng(config.seed, Stream::Perturbation);
                if let TimedOptimizer::Perturbation(o) = &mut opt {
                    o.prepare(&mut p)?;
                }
                let mut secs = Vec::with_capacity(config.trials);
                for k in 0..config.warmup + config.trials {
                    let d = one_step(&mut opt, spec, &mut p, &batch, config, &mut rng)?;
                    if k >= config.warmup {
                        secs.push(d.as_secs_f64());
                    }
                }
                Ok(secs)
            };
            match attempt() {
                Ok(secs) if !secs.is_empty() => TimingRecord::from_samples(id, t, phase, &secs),
                Ok(_) => TimingRecord::failure(id, t, phase, "no timed trials".into()),
                Err(e) => TimingRecord::failure(id, t, phase, e.to_string()),
            }
        })
        .collect()
}

/// CSV `optimizer,seq_len,phase,mean_s,sem_s,median_s,n,failed`.
pub fn write_timing_csv(path: &Path, records: &[TimingRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["optimizer", "seq_len", "phase", "mean_s", "sem_s", "median_s", "n", "failed"])?;
    for r in records {
        w.serialize((&r.optimizer, r.seq_len, r.phase.as_str(), r.mean_s, r.sem_s, r.median_s, r.n_trials, r.failed))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grad::AdamState;
    use crate::nn::{Architecture, Network};
    use crate::optim::{Dopamine, DopamineConfig, DopamineVariant};

    fn setup() -> (RnnSpec, ParamSet, Vec<f64>) {
        let spec = RnnSpec::new(1, 8, 1);
        let net = Network::init(Architecture::Rnn(spec.clone()), &mut stream_rng(0, Stream::Init)).unwrap();
        let series: Vec<f64> = (0..200).map(|k| (k as f64 * 0.1).sin()).collect();
        (spec, net.params, series)
    }

    #[test]
    fn single_trial_is_low_confidence() {
        let (spec, params, series) = setup();
        let opt = TimedOptimizer::Gradient(GradientOptimizer::Sgd { eta: 1e-3 });
        let cfg = TimingConfig { warmup: 0, trials: 1, samples: 4, ..Default::default() };
        let r = time_optimizer("sgd", &opt, &spec, &params, &series, 1, &[8], &cfg);
        assert_eq!(r[0].sem_s, 0.0);
        assert!(r[0].low_confidence && !r[0].failed);
    }

    #[test]
    fn failures_are_records() {
        let (spec, params, series) = setup();
        let adam = TimedOptimizer::Gradient(GradientOptimizer::Adam(AdamState::new(&params, 1e-3).unwrap()));
        let cfg = TimingConfig { trials: 2, samples: 4, memory_budget: Some(4096), ..Default::default() };
        let r = time_optimizer("adam", &adam, &spec, &params, &series, 1, &[4, 100, 500], &cfg);
        assert!(!r[0].failed);
        assert!(r[1].failed && r[1].failure.as_ref().unwrap().contains("memory"));
        assert!(r[2].failed);

        let dop = Dopamine::new(DopamineConfig::new(DopamineVariant::Two, 1e-5, 1e-5, 0.999, 1e-4, 1e-4), &params).unwrap();
        let dop = TimedOptimizer::Perturbation(PerturbationOptimizer::Dopamine(dop));
        let r = time_optimizer("dopamine2", &dop, &spec, &params, &series, 1, &[100], &cfg);
        assert!(!r[0].failed, "{:?}", r[0].failure);
    }
}

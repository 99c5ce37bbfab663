//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exposed: integrating an attractor, training an XOR
//! network step by step (with its decision surface), and the loss landscape
//! around the network's current parameters. Everything is deterministic in
//! the seed, exactly as in the native library.

use wasm_bindgen::prelude::*;

use dopamine::analysis::{loss_landscape, LandscapeConfig};
use dopamine::data::{integrate, xor_dataset, Integrator, Normalization, System};
use dopamine::experiment::{preset, xor_accuracy, ExperimentConfig};
use dopamine::grad::{mlp_backprop, GradientOptimizer};
use dopamine::nn::{mlp_forward, Architecture, Batch, ClassificationLoss, MlpSpec, Network, Objective};
use dopamine::optim::PerturbationOptimizer;
use dopamine::rng::{stream_rng, Rng, Stream};
use dopamine::ParamMatrix;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// A row-major `length x 3` trajectory of the Lorenz or Rössler system,
/// optionally min-max scaled to `[0, 1]` per coordinate.
#[wasm_bindgen]
pub fn attractor(system: &str, length: usize, dt: f64, rk4: bool, normalize: bool) -> Result<Vec<f64>, JsValue> {
    let system = match system {
        "lorenz" => System::lorenz(),
        "rossler" => System::rossler(),
        other => return Err(js_err(format!("unknown system `{other}`"))),
    };
    let integrator = if rk4 { Integrator::Rk4 } else { Integrator::Euler };
    let mut flat = integrate(system, [1.0, 0.0, 0.0], dt, length, integrator).map_err(js_err)?.flat();
    if normalize {
        Normalization::fit(&flat, 3).apply(&mut flat);
    }
    Ok(flat)
}

enum Trainer {
    Perturbation(PerturbationOptimizer, Rng),
    Gradient(GradientOptimizer),
}

/// An XOR network trained one batch of steps at a time.
#[wasm_bindgen]
pub struct XorDemo {
    config: ExperimentConfig,
    spec: MlpSpec,
    data: Batch,
    network: Network,
    trainer: Trainer,
    steps: usize,
    seed: u64,
}

#[wasm_bindgen]
impl XorDemo {
    /// Start from a built-in XOR preset (`xor-dopamine2`, `xor-wp`, ...).
    #[wasm_bindgen(constructor)]
    pub fn new(preset_name: &str, seed: u64) -> Result<XorDemo, JsValue> {
        let config = preset(preset_name).map_err(js_err)?;
        let spec = MlpSpec::new(vec![2, config.model.hidden, 2], config.model.bias, config.model.head).map_err(js_err)?;
        let data = xor_dataset(config.task.n_per_cluster, config.task.noise_std, seed).map_err(js_err)?;
        let mut network =
            Network::init(Architecture::Mlp(spec.clone()), &mut stream_rng(seed, Stream::Init)).map_err(js_err)?;
        let opt = &config.optimizer;
        let trainer = if opt.id.is_gradient_based() {
            Trainer::Gradient(opt.gradient(&network.params).map_err(js_err)?)
        } else {
            let mut p = opt.perturbation(&network.params).map_err(js_err)?;
            p.prepare(&mut network.params).map_err(js_err)?;
            Trainer::Perturbation(p, stream_rng(seed, Stream::Perturbation))
        };
        Ok(XorDemo { config, spec, data, network, trainer, steps: 0, seed })
    }

    /// Run `n` optimizer steps; returns the training loss afterwards.
    pub fn train(&mut self, n: usize) -> Result<f64, JsValue> {
        let params = &mut self.network.params;
        for _ in 0..n {
            match &mut self.trainer {
                Trainer::Perturbation(opt, rng) => {
                    let obj = ClassificationLoss { spec: &self.spec, batch: &self.data };
                    opt.step(params, &obj, rng).map_err(js_err)?;
                }
                Trainer::Gradient(opt) => {
                    let (_, g) = mlp_backprop(&self.spec, params, &self.data).map_err(js_err)?;
                    opt.step(params, &g).map_err(js_err)?;
                }
            }
            self.steps += 1;
        }
        self.loss()
    }

    pub fn loss(&self) -> Result<f64, JsValue> {
        ClassificationLoss { spec: &self.spec, batch: &self.data }.loss(&self.network.params).map_err(js_err)
    }

    pub fn accuracy(&self) -> Result<f64, JsValue> {
        xor_accuracy(&self.spec, &self.network.params, &self.data).map(|(a, _)| a).map_err(js_err)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn epochs(&self) -> usize {
        self.config.training.epochs
    }

    /// Training points as `x, y, label` triples.
    pub fn points(&self) -> Vec<f64> {
        let labels = self.data.labels().unwrap_or(&[]);
        (0..self.data.len())
            .flat_map(|i| {
                let p = self.data.inputs.row(i);
                [p[0], p[1], labels[i] as f64]
            })
            .collect()
    }

    /// Probability of class 1 on a `res x res` grid over `[lo, hi]^2`,
    /// row-major with y increasing down the rows.
    pub fn decision_grid(&self, res: usize, lo: f64, hi: f64) -> Result<Vec<f64>, JsValue> {
        if res < 2 {
            return Err(js_err("grid resolution must be at least 2"));
        }
        let at = |k: usize| lo + (hi - lo) * k as f64 / (res - 1) as f64;
        let inputs: Vec<f64> = (0..res).flat_map(|r| (0..res).flat_map(move |c| [at(c), at(r)])).collect();
        let inputs = ParamMatrix::from_vec(res * res, 2, inputs).map_err(js_err)?;
        let probs = mlp_forward(&self.spec, &self.network.params, &inputs).map_err(js_err)?;
        Ok((0..res * res).map(|i| probs.get(i, 1)).collect())
    }

    /// Loss on a `steps x steps` grid of `alpha, beta` in `[-range, range]`
    /// along two random directions through the current parameters.
    /// Non-finite cells are reported as `inf`.
    pub fn landscape(&self, steps: usize, range: f64, filter_normalize: bool) -> Result<Vec<f64>, JsValue> {
        let cfg = LandscapeConfig {
            range0: (-range, range),
            range1: (-range, range),
            steps0: steps,
            steps1: steps,
            filter_normalize,
            seed: self.seed,
        };
        let obj = ClassificationLoss { spec: &self.spec, batch: &self.data };
        let grid = loss_landscape(&obj, &self.network.params, &cfg).map_err(js_err)?;
        Ok(grid.losses.into_iter().flatten().collect())
    }
}

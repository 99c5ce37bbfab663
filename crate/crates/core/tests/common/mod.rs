//! Oracles shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use dopamine::grad::{bptt, mlp_backprop, BpttConfig, GradientSet};
use dopamine::nn::{
    Architecture, Batch, ClassificationLoss, Head, MlpSpec, Network, Objective, RegressionLoss, RnnSpec, SeqBatch,
    SequenceLoss, Targets, WindowReduction,
};
use dopamine::rng::{standard_normal, stream_rng, Rng, Stream};
use dopamine::{ParamMatrix, ParamSet};
use rand::Rng as _;

/// Central finite differences of `objective` at every scalar of `params`.
pub fn finite_difference(objective: &dyn Objective, params: &ParamSet, h: f64) -> Vec<f64> {
    let base = params.flatten();
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(base.len());
    let mut shifted = base.clone();
    for i in 0..base.len() {
        shifted[i] = base[i] + h;
        probe.set_flat(&shifted).unwrap();
        let up = objective.loss(&probe).unwrap();
        shifted[i] = base[i] - h;
        probe.set_flat(&shifted).unwrap();
        let down = objective.loss(&probe).unwrap();
        shifted[i] = base[i];
        out.push((up - down) / (2.0 * h));
    }
    out
}

/// Largest entrywise `|a - b| / max(|a|, |b|, floor)`.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor)).fold(0.0, f64::max)
}

fn normal_matrix(rows: usize, cols: usize, std: f64, rng: &mut Rng) -> ParamMatrix {
    ParamMatrix::from_fn(rows, cols, |_, _| std * standard_normal(rng))
}

/// A random small MLP problem: loss objective inputs, and the exact gradient.
pub struct MlpCase {
    pub spec: MlpSpec,
    pub params: ParamSet,
    pub batch: Batch,
}

impl MlpCase {
    pub fn random(seed: u64) -> Self {
        let mut rng = stream_rng(seed, Stream::Init);
        let depth = rng.random_range(2..=4);
        let mut dims = vec![rng.random_range(1..=4)];
        for _ in 0..depth {
            dims.push(rng.random_range(2..=5));
        }
        let head = [Head::SigmoidSoftmax, Head::Softmax, Head::Identity][(seed % 3) as usize];
        let bias = seed % 2 == 0;
        let spec = MlpSpec::new(dims.clone(), bias, head).unwrap();
        let params = Network::init(Architecture::Mlp(spec.clone()), &mut rng).unwrap().params;
        let n = rng.random_range(3..=8);
        let inputs = normal_matrix(n, dims[0], 1.0, &mut rng);
        let out = *dims.last().unwrap();
        let targets = if head == Head::Identity {
            Targets::Values(normal_matrix(n, out, 1.0, &mut rng))
        } else {
            Targets::Labels((0..n).map(|_| rng.random_range(0..out)).collect())
        };
        Self { spec, params, batch: Batch::new(inputs, targets).unwrap() }
    }

    pub fn objective(&self) -> Box<dyn Objective + '_> {
        if self.spec.head == Head::Identity {
            Box::new(RegressionLoss { spec: &self.spec, batch: &self.batch })
        } else {
            Box::new(ClassificationLoss { spec: &self.spec, batch: &self.batch })
        }
    }

    pub fn gradient(&self) -> (f64, GradientSet) {
        mlp_backprop(&self.spec, &self.params, &self.batch).unwrap()
    }
}

/// A random small RNN forecasting problem.
pub struct RnnCase {
    pub spec: RnnSpec,
    pub params: ParamSet,
    pub batch: SeqBatch,
    pub reduction: WindowReduction,
}

impl RnnCase {
    pub fn random(seed: u64) -> Self {
        let mut rng = stream_rng(seed, Stream::Init);
        let (d, h, o) = (rng.random_range(1..=3), rng.random_range(2..=6), rng.random_range(1..=3));
        let mut spec = RnnSpec::new(d, h, o);
        spec.use_bias = seed % 2 == 0;
        let params = Network::init(Architecture::Rnn(spec.clone()), &mut rng).unwrap().params;
        let (n, t) = (rng.random_range(1..=4), rng.random_range(1..=6));
        let inputs = (0..n * t * d).map(|_| standard_normal(&mut rng)).collect();
        let targets = (0..n * t * o).map(|_| standard_normal(&mut rng)).collect();
        let batch = SeqBatch::new(n, t, d, o, inputs, targets).unwrap();
        let reduction = if seed % 3 == 0 { WindowReduction::Sum } else { WindowReduction::Mean };
        Self { spec, params, batch, reduction }
    }

    pub fn objective(&self) -> SequenceLoss<'_> {
        SequenceLoss::new(&self.spec, &self.batch).with_reduction(self.reduction)
    }

    pub fn gradient(&self) -> (f64, GradientSet) {
        let config = BpttConfig { reduction: self.reduction, ..Default::default() };
        bptt(&self.spec, &self.params, &self.batch, &config).unwrap()
    }
}

/// Max relative error of the analytic gradient against finite differences.
pub fn mlp_gradient_error(seed: u64) -> f64 {
    let case = MlpCase::random(seed);
    let fd = finite_difference(case.objective().as_ref(), &case.params, FD_STEP);
    max_relative_error(&case.gradient().1.flatten(), &fd, FD_FLOOR)
}

pub fn rnn_gradient_error(seed: u64) -> f64 {
    let case = RnnCase::random(seed);
    let fd = finite_difference(&case.objective(), &case.params, FD_STEP);
    max_relative_error(&case.gradient().1.flatten(), &fd, FD_FLOOR)
}

pub const FD_STEP: f64 = 1e-6;
/// Gradients smaller than this are compared absolutely: central differences
/// carry roughly `eps * |L| / h` of rounding error.
pub const FD_FLOOR: f64 = 1e-6;

/// `0.5 * sum_i a_i (x_i - c_i)^2`, a fixed anisotropic quadratic.
pub struct Quadratic {
    pub curvature: Vec<f64>,
    pub center: Vec<f64>,
}

impl Quadratic {
    pub fn ten_d() -> Self {
        Self {
            curvature: (1..=10).map(|i| i as f64).collect(),
            center: (0..10).map(|i| (i as f64 * 0.7).sin()).collect(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).zip(&self.curvature).map(|((x, c), a)| 0.5 * a * (x - c).powi(2)).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).zip(&self.curvature).map(|((x, c), a)| a * (x - c)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.curvature.iter().sum()
    }
}

impl Objective for Quadratic {
    fn loss(&self, params: &ParamSet) -> dopamine::Result<f64> {
        Ok(self.value(params.matrix(0).as_slice()))
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Spectral radius from a dense eigensolver.
pub fn dense_spectral_radius(w: &ParamMatrix) -> f64 {
    let m = nalgebra::DMatrix::from_row_slice(w.rows(), w.cols(), w.as_slice());
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn random_square(n: usize, seed: u64) -> ParamMatrix {
    let mut rng = stream_rng(seed, Stream::Init);
    normal_matrix(n, n, 1.0 / (n as f64).sqrt(), &mut rng)
}

/// Mean of `(R / sigma^2) * xi` over `draws` perturbations of the quadratic at `x`.
pub fn perturbation_gradient(q: &Quadratic, x: &[f64], sigma_sq: f64, draws: usize, seed: u64) -> Vec<f64> {
    use dopamine::optim::{regret, sample_perturbation};
    let params = ParamSet::single(ParamMatrix::from_vec(1, x.len(), x.to_vec()).unwrap());
    let mut rng = stream_rng(seed, Stream::Perturbation);
    let mut acc = vec![0.0; x.len()];
    for _ in 0..draws {
        let draw = sample_perturbation(&params, sigma_sq, &mut rng).unwrap();
        let r = regret(q, &params, &draw).unwrap().value();
        for (a, xi) in acc.iter_mut().zip(draw.noise[0].as_slice()) {
            *a += r / sigma_sq * xi;
        }
    }
    acc.iter().map(|a| a / draws as f64).collect()
}

/// Cells of `grid` whose loss differs in any bit from a direct evaluation at
/// `center + alpha d1 + beta d2`, built here from flattened vectors.
pub fn landscape_mismatches(
    objective: &dyn Objective,
    center: &ParamSet,
    grid: &dopamine::analysis::LandscapeGrid,
) -> usize {
    let flat = |ms: &[ParamMatrix]| ms.iter().flat_map(|m| m.as_slice().to_vec()).collect::<Vec<f64>>();
    let (c, u, v) = (center.flatten(), flat(&grid.directions[0]), flat(&grid.directions[1]));
    let mut probe = center.clone();
    let mut bad = 0;
    for (i, &a) in grid.alphas.iter().enumerate() {
        for (j, &b) in grid.betas.iter().enumerate() {
            let point: Vec<f64> = (0..c.len()).map(|k| c[k] + a * u[k] + b * v[k]).collect();
            probe.set_flat(&point).unwrap();
            let direct = match objective.loss(&probe) {
                Ok(x) if x.is_finite() => x,
                _ => f64::INFINITY,
            };
            if direct.to_bits() != grid.losses[i][j].to_bits() {
                bad += 1;
            }
        }
    }
    bad
}

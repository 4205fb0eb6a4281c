use pixgrasp_nn::{Activation, Conv2d, Conv2dConfig, Module, Param, Tensor};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::loss::{batch_loss, branch_pattern};
use crate::error::Result;
use crate::network::{Mode, Network};

/// Loss value plus the Smooth-L1 branch taken by every element.
#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    pub loss: f64,
    pub branches: Vec<bool>,
}

#[derive(Clone, Copy, Debug)]
pub struct GradCheckOptions {
    pub epsilon: f64,
    /// Weights sampled per parameter tensor; smaller tensors are checked fully.
    pub samples_per_param: usize,
    /// Denominator floor of the relative error.
    pub scale_floor: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { epsilon: 1e-6, samples_per_param: 16, scale_floor: 1e-6, seed: 0 }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Parameter path and index of the worst weight.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    /// Weights whose perturbation moved some element across the kink.
    pub skipped_at_kink: usize,
    /// Trainable tensors whose analytic gradient is identically zero.
    pub dead_params: Vec<String>,
}

/// Something whose loss can be evaluated, with or without accumulating
/// parameter gradients.
pub trait Differentiable: Module<f64> {
    fn objective(&mut self, with_grad: bool) -> Result<Objective>;
}

fn perturb(model: &mut dyn Differentiable, slot: usize, index: usize, delta: f64) {
    let mut seen = 0;
    model.visit_params_mut("", &mut |_, p| {
        if p.trainable {
            if seen == slot {
                p.value[index] += delta;
            }
            seen += 1;
        }
    });
}

/// Compares analytic gradients against central finite differences on sampled
/// weights of every trainable tensor.
pub fn gradient_check(model: &mut dyn Differentiable, opts: &GradCheckOptions) -> Result<GradCheckReport> {
    model.zero_grad();
    let base = model.objective(true)?;
    let mut tensors: Vec<(String, Vec<f64>)> = Vec::new();
    model.visit_params("", &mut |name, p: &Param<f64>| {
        if p.trainable {
            tensors.push((name.to_string(), p.grad.clone()));
        }
    });
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = GradCheckReport::default();
    for (slot, (name, grad)) in tensors.iter().enumerate() {
        if grad.iter().all(|&g| g == 0.0) {
            report.dead_params.push(name.clone());
        }
        let picks: Vec<usize> = if grad.len() <= opts.samples_per_param {
            (0..grad.len()).collect()
        } else {
            sample(&mut rng, grad.len(), opts.samples_per_param).into_vec()
        };
        for i in picks {
            perturb(model, slot, i, opts.epsilon);
            let plus = model.objective(false)?;
            perturb(model, slot, i, -2.0 * opts.epsilon);
            let minus = model.objective(false)?;
            perturb(model, slot, i, opts.epsilon);
            if plus.branches != base.branches || minus.branches != base.branches {
                report.skipped_at_kink += 1;
                continue;
            }
            let numeric = (plus.loss - minus.loss) / (2.0 * opts.epsilon);
            let analytic = grad[i];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(opts.scale_floor);
            report.checked += 1;
            if rel > report.max_relative_error || report.worst.is_none() {
                report.max_relative_error = rel;
                report.worst = Some((name.clone(), i));
            }
        }
    }
    Ok(report)
}

/// A two-layer convolutional model with a Mish hidden layer and four output
/// planes, trained against fixed targets with the grasp loss.
#[derive(Clone, Debug)]
pub struct ToyNetwork {
    pub first: Conv2d<f64>,
    pub second: Conv2d<f64>,
    pub input: Tensor<f64>,
    pub target: Tensor<f64>,
    pub beta: f64,
}

impl ToyNetwork {
    /// `hidden` channels, a 3x3 first layer and a 1x1 second layer. Targets
    /// spread wide enough that both Smooth-L1 branches are populated.
    pub fn new(in_channels: usize, hidden: usize, size: usize, beta: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first = Conv2d::new(Conv2dConfig::same(in_channels, hidden, 3).with_bias(true), &mut rng);
        let second = Conv2d::new(Conv2dConfig::same(hidden, 4, 1).with_bias(true), &mut rng);
        let n = 2;
        let input = Tensor::from_vec(
            [n, in_channels, size, size],
            (0..n * in_channels * size * size).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .expect("sized");
        let target = Tensor::from_vec(
            [n, 4, size, size],
            (0..n * 4 * size * size).map(|_| rng.random_range(-2.5 * beta..2.5 * beta)).collect(),
        )
        .expect("sized");
        Self { first, second, input, target, beta }
    }

    /// A single 1x1 layer: linear in its weights, targets close enough to stay
    /// on the quadratic branch.
    pub fn linear(in_channels: usize, size: usize, seed: u64) -> (Conv2d<f64>, Tensor<f64>, Tensor<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer = Conv2d::new(Conv2dConfig::same(in_channels, 4, 1).with_bias(true), &mut rng);
        let input = Tensor::from_vec(
            [1, in_channels, size, size],
            (0..in_channels * size * size).map(|_| rng.random_range(-0.5..0.5)).collect(),
        )
        .expect("sized");
        let target = Tensor::from_vec([1, 4, size, size], (0..4 * size * size).map(|_| rng.random_range(-0.1..0.1)).collect())
            .expect("sized");
        (layer, input, target)
    }

    pub fn num_params(&self) -> usize {
        self.num_trainable()
    }
}

impl Module<f64> for ToyNetwork {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param<f64>)) {
        self.first.visit_params(&pixgrasp_nn::join(prefix, "first"), f);
        self.second.visit_params(&pixgrasp_nn::join(prefix, "second"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<f64>)) {
        self.first.visit_params_mut(&pixgrasp_nn::join(prefix, "first"), f);
        self.second.visit_params_mut(&pixgrasp_nn::join(prefix, "second"), f);
    }
}

impl Differentiable for ToyNetwork {
    fn objective(&mut self, with_grad: bool) -> Result<Objective> {
        let pre = self.first.forward(&self.input)?;
        let mut hidden = pre.clone();
        Activation::Mish.forward_inplace(hidden.data_mut());
        let out = self.second.forward(&hidden)?;
        let (loss, grad) = batch_loss(&out, &self.target, self.beta)?;
        if with_grad {
            let mut g = self.second.backward(&hidden, &grad, true)?.expect("input gradient requested");
            Activation::Mish.backward_inplace(pre.data(), g.data_mut());
            self.first.backward(&self.input, &g, false)?;
        }
        Ok(Objective { loss: loss.total, branches: branch_pattern(&out, &self.target, self.beta) })
    }
}

/// The full grasp network in double precision against fixed data. Batch
/// statistics are used in both the analytic and the perturbed passes.
pub struct NetworkObjective {
    pub net: Network<f64>,
    pub input: Tensor<f64>,
    pub target: Tensor<f64>,
    pub beta: f64,
}

impl Module<f64> for NetworkObjective {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param<f64>)) {
        self.net.visit_params(prefix, f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<f64>)) {
        self.net.visit_params_mut(prefix, f);
    }
}

impl Differentiable for NetworkObjective {
    fn objective(&mut self, with_grad: bool) -> Result<Objective> {
        let out = self.net.forward(&self.input, Mode::Train)?;
        let (loss, grad) = batch_loss(&out, &self.target, self.beta)?;
        if with_grad {
            self.net.backward(&grad)?;
        }
        Ok(Objective { loss: loss.total, branches: branch_pattern(&out, &self.target, self.beta) })
    }
}

//! Regularized empirical risk minimization by full-batch subgradient descent.
//!
//! Gradients are computed by hand-written backpropagation. Subgradient
//! conventions: `ρ'(0) = 0`, `sign(0) = 0`, and the gradient of `‖w‖₂` at
//! `w = 0` is `0`. All sums run in a fixed order so training is
//! bit-deterministic for a given configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::linalg::{l1_norm, l2_norm, Matrix};
use crate::network::{BottleneckLayer, DeepNet};
use crate::norms::{
    boundary_evaluations, layer_path_sum, regularizer_value, sum_of_path, sum_of_squares,
    RegularizerKind, RegularizerSpec,
};
use crate::rescale::balance_net;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::InvalidArgument("dataset has no rows".into()));
        }
        if inputs.len() != targets.len() {
            return Err(dim_err(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let (d, out) = (inputs[0].len(), targets[0].len());
        if d == 0 || out == 0 {
            return Err(dim_err("inputs and targets need at least one column"));
        }
        for (n, (x, y)) in inputs.iter().zip(&targets).enumerate() {
            if x.len() != d || y.len() != out {
                return Err(dim_err(format!("row {} has inconsistent arity", n + 1)));
            }
            if !x.iter().chain(y).all(|v| v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "row {} has a non-finite value",
                    n + 1
                )));
            }
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.targets[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `Σ_n ½ ‖f(x_n) − y_n‖₂²`.
    #[default]
    Squared,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Squared => f.write_str("squared"),
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(LossKind::Squared),
            other => Err(Error::InvalidArgument(format!("unknown loss `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Neuron counts `K^(1..L)`.
    pub widths: Vec<usize>,
    /// Intermediate dimensions `d_1..d_{L−1}`; input and output dimensions
    /// come from the data.
    pub hidden_dims: Vec<usize>,
    pub regularizer: RegularizerSpec,
    pub loss: LossKind,
    pub step_size: f64,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub prune_eps: f64,
    /// Balance every this many steps; 0 disables.
    pub rebalance_every: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() {
            return Err(Error::InvalidArgument("widths must name at least one layer".into()));
        }
        if self.hidden_dims.len() + 1 != self.widths.len() {
            return Err(Error::InvalidArgument(format!(
                "{} layers need {} hidden dims, got {}",
                self.widths.len(),
                self.widths.len() - 1,
                self.hidden_dims.len()
            )));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::InvalidArgument("hidden dims must be positive".into()));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if !self.init_scale.is_finite() {
            return Err(Error::InvalidArgument("init scale must be finite".into()));
        }
        if !(self.prune_eps.is_finite() && self.prune_eps >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "prune threshold must be nonnegative, got {}",
                self.prune_eps
            )));
        }
        self.regularizer.validate()
    }

    /// `d_0..d_L` for a dataset.
    pub fn dims_for(&self, data: &Dataset) -> Vec<usize> {
        std::iter::once(data.input_dim())
            .chain(self.hidden_dims.iter().copied())
            .chain(std::iter::once(data.output_dim()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Objective before the first step and after every step.
    pub objectives: Vec<f64>,
    pub final_data_loss: f64,
    pub final_regularizer: f64,
    pub active_neurons: Vec<usize>,
    /// `Σ_ℓ Σ_k ‖v_k‖₁‖w_k‖₂` of the returned network.
    pub path_core: f64,
    /// `½ Σ_ℓ (‖V‖²₁,₂ + ‖W‖²_F)` of the returned network.
    pub weight_decay_core: f64,
}

impl TrainReport {
    pub fn initial_objective(&self) -> f64 {
        self.objectives[0]
    }

    pub fn final_objective(&self) -> f64 {
        self.objectives[self.objectives.len() - 1]
    }
}

fn check_data(net: &DeepNet, data: &Dataset) -> Result<()> {
    if net.input_dim() != data.input_dim() || net.output_dim() != data.output_dim() {
        return Err(dim_err(format!(
            "network maps {} -> {} but data is {} -> {}",
            net.input_dim(),
            net.output_dim(),
            data.input_dim(),
            data.output_dim()
        )));
    }
    Ok(())
}

pub fn loss_value(net: &DeepNet, data: &Dataset, kind: LossKind) -> Result<f64> {
    check_data(net, data)?;
    let mut total = 0.0;
    for (x, y) in data.inputs().iter().zip(data.targets()) {
        let f = net.forward(x)?;
        total += match kind {
            LossKind::Squared => {
                0.5 * f.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            }
        };
    }
    Ok(total)
}

/// Data loss plus regularizer.
pub fn objective(net: &DeepNet, data: &Dataset, spec: &RegularizerSpec, loss: LossKind) -> Result<f64> {
    Ok(loss_value(net, data, loss)? + regularizer_value(net, spec))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub v: Matrix,
    pub w: Matrix,
    pub b: Vec<f64>,
    pub c: Matrix,
    pub c0: Vec<f64>,
}

impl LayerGradient {
    fn zeros_like(layer: &BottleneckLayer) -> Self {
        Self {
            v: Matrix::zeros(layer.v.rows(), layer.v.cols()),
            w: Matrix::zeros(layer.w.rows(), layer.w.cols()),
            b: vec![0.0; layer.b.len()],
            c: Matrix::zeros(layer.c.rows(), layer.c.cols()),
            c0: vec![0.0; layer.c0.len()],
        }
    }

    fn blocks(&self) -> [&[f64]; 5] {
        [self.v.as_slice(), self.w.as_slice(), &self.b, self.c.as_slice(), &self.c0]
    }
}

/// Gradient with the same shape as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<LayerGradient>,
}

impl Gradient {
    pub fn zeros_like(net: &DeepNet) -> Self {
        Self {
            layers: net.layers().iter().map(LayerGradient::zeros_like).collect(),
        }
    }

    /// Flattened in the same order as [`DeepNet::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for block in layer.blocks() {
                out.extend_from_slice(block);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.to_flat().iter().all(|&g| g == 0.0)
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Accumulates `∂/∂θ ⟨upstream, layer(x)⟩` into `grad` and returns the
/// gradient with respect to `x`.
fn backprop_layer(
    layer: &BottleneckLayer,
    x: &[f64],
    pre: &[f64],
    upstream: &[f64],
    grad: &mut LayerGradient,
) -> Vec<f64> {
    let k = layer.width();
    let d_in = layer.in_dim();
    let mut dpre = vec![0.0; k];
    for (m, &g) in upstream.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        for j in 0..k {
            if pre[j] > 0.0 {
                grad.v[(m, j)] += g * pre[j];
                dpre[j] += layer.v[(m, j)] * g;
            }
        }
        for (n, xn) in x.iter().enumerate() {
            grad.c[(m, n)] += g * xn;
        }
        grad.c0[m] += g;
    }
    let mut dx = layer.c.matvec_transpose(upstream).expect("validated layer");
    for (j, &g) in dpre.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        grad.b[j] -= g;
        for n in 0..d_in {
            grad.w[(j, n)] += g * x[n];
            dx[n] += layer.w[(j, n)] * g;
        }
    }
    dx
}

fn add_path_gradient(layer: &BottleneckLayer, coeff: f64, grad: &mut LayerGradient) {
    for k in 0..layer.width() {
        let v = layer.neuron_v(k);
        let w = layer.neuron_w(k);
        let v1 = l1_norm(&v);
        let w2 = l2_norm(w);
        for (m, vm) in v.iter().enumerate() {
            grad.v[(m, k)] += coeff * w2 * sign(*vm);
        }
        if w2 > 0.0 {
            for (n, wn) in w.iter().enumerate() {
                grad.w[(k, n)] += coeff * v1 * wn / w2;
            }
        }
    }
}

fn add_weight_decay_gradient(layer: &BottleneckLayer, coeff: f64, grad: &mut LayerGradient) {
    for k in 0..layer.width() {
        let v = layer.neuron_v(k);
        let v1 = l1_norm(&v);
        for (m, vm) in v.iter().enumerate() {
            grad.v[(m, k)] += coeff * v1 * sign(*vm);
        }
    }
    for (g, w) in grad.w.as_mut_slice().iter_mut().zip(layer.w.as_slice()) {
        *g += coeff * w;
    }
}

fn add_skip_l1_gradient(layer: &BottleneckLayer, coeff: f64, grad: &mut LayerGradient) {
    for (g, c) in grad.c.as_mut_slice().iter_mut().zip(layer.c.as_slice()) {
        *g += coeff * sign(*c);
    }
    for (g, c) in grad.c0.iter_mut().zip(&layer.c0) {
        *g += coeff * sign(*c);
    }
}

fn add_boundary_gradient(layer: &BottleneckLayer, coeff: f64, grad: &mut LayerGradient) {
    let d = layer.in_dim();
    let (at_zero, at_axes) = boundary_evaluations(layer);
    let mut upstream_zero: Vec<f64> = at_zero.iter().map(|&s| coeff * sign(s)).collect();
    let mut x = vec![0.0; d];
    for (n, out) in at_axes.iter().enumerate() {
        let upstream: Vec<f64> = out
            .iter()
            .zip(&at_zero)
            .map(|(a, z)| coeff * sign(a - z))
            .collect();
        for (u0, u) in upstream_zero.iter_mut().zip(&upstream) {
            *u0 -= u;
        }
        x[n] = 1.0;
        let pre = layer.preactivations(&x).expect("validated layer");
        backprop_layer(layer, &x, &pre, &upstream, grad);
        x[n] = 0.0;
    }
    let zero = vec![0.0; d];
    let pre = layer.preactivations(&zero).expect("validated layer");
    backprop_layer(layer, &zero, &pre, &upstream_zero, grad);
}

fn add_regularizer_gradient(net: &DeepNet, spec: &RegularizerSpec, grad: &mut Gradient) {
    use RegularizerKind::*;
    let lambda = spec.lambda;
    if lambda == 0.0 {
        return;
    }
    let layers = net.layers();
    if spec.kind == ProductOfPaths {
        let sums: Vec<f64> = layers.iter().map(layer_path_sum).collect();
        for (l, (layer, g)) in layers.iter().zip(grad.layers.iter_mut()).enumerate() {
            let others: f64 = sums
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != l)
                .map(|(_, s)| s)
                .product();
            add_path_gradient(layer, lambda * others, g);
        }
        return;
    }
    for (layer, g) in layers.iter().zip(grad.layers.iter_mut()) {
        match spec.kind {
            PathWithBoundary | PathWithSkipL1 | SumOfPath => add_path_gradient(layer, lambda, g),
            WeightDecayWithBoundary | WeightDecayWithSkipL1 | SumOfSquares => {
                add_weight_decay_gradient(layer, lambda, g)
            }
            ProductOfPaths => unreachable!(),
        }
        match spec.kind {
            PathWithBoundary | WeightDecayWithBoundary => add_boundary_gradient(layer, lambda, g),
            PathWithSkipL1 | WeightDecayWithSkipL1 => add_skip_l1_gradient(layer, lambda, g),
            _ => {}
        }
    }
}

/// (Sub)gradient of `loss + regularizer` with respect to every parameter.
pub fn gradient(net: &DeepNet, data: &Dataset, spec: &RegularizerSpec, loss: LossKind) -> Result<Gradient> {
    check_data(net, data)?;
    let layers = net.layers();
    let mut grad = Gradient::zeros_like(net);
    for (x, y) in data.inputs().iter().zip(data.targets()) {
        let mut inputs = Vec::with_capacity(layers.len());
        let mut pres = Vec::with_capacity(layers.len());
        let mut h = x.clone();
        for layer in layers {
            let pre = layer.preactivations(&h)?;
            let out = layer.output_from(&h, &pre);
            inputs.push(h);
            pres.push(pre);
            h = out;
        }
        let mut upstream: Vec<f64> = match loss {
            LossKind::Squared => h.iter().zip(y).map(|(f, t)| f - t).collect(),
        };
        for l in (0..layers.len()).rev() {
            upstream = backprop_layer(&layers[l], &inputs[l], &pres[l], &upstream, &mut grad.layers[l]);
        }
    }
    add_regularizer_gradient(net, spec, &mut grad);
    Ok(grad)
}

/// Stepwise driver for the descent loop.
#[derive(Debug, Clone)]
pub struct Trainer<'a> {
    data: &'a Dataset,
    config: TrainConfig,
    net: DeepNet,
    objectives: Vec<f64>,
    steps: usize,
}

impl<'a> Trainer<'a> {
    /// Initializes the network from `config.seed` and records the initial objective.
    pub fn new(data: &'a Dataset, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let dims = config.dims_for(data);
        let net = DeepNet::random_init(&dims, &config.widths, config.seed, config.init_scale)?;
        let initial = objective(&net, data, &config.regularizer, config.loss)?;
        Ok(Self {
            data,
            config,
            net,
            objectives: vec![initial],
            steps: 0,
        })
    }

    pub fn net(&self) -> &DeepNet {
        &self.net
    }

    pub fn objectives(&self) -> &[f64] {
        &self.objectives
    }

    pub fn current_objective(&self) -> f64 {
        self.objectives[self.objectives.len() - 1]
    }

    /// One descent step, followed by balancing when the cadence calls for it.
    /// Returns the new objective.
    pub fn step(&mut self) -> Result<f64> {
        let cfg = &self.config;
        let grad = gradient(&self.net, self.data, &cfg.regularizer, cfg.loss)?.to_flat();
        let mut params = self.net.to_flat();
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= cfg.step_size * g;
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "training diverged at step {} (parameter {i} is not finite); reduce the step size",
                self.steps + 1
            )));
        }
        self.net.set_flat(&params)?;
        self.steps += 1;
        if cfg.rebalance_every > 0 && self.steps.is_multiple_of(cfg.rebalance_every) {
            self.net = balance_net(&self.net);
        }
        let obj = objective(&self.net, self.data, &cfg.regularizer, cfg.loss)?;
        self.objectives.push(obj);
        Ok(obj)
    }

    /// Runs the remaining epochs, prunes, and reports.
    pub fn finish(mut self) -> Result<(DeepNet, TrainReport)> {
        while self.steps < self.config.epochs {
            self.step()?;
        }
        let cfg = &self.config;
        let pruned = self.net.prune(cfg.prune_eps);
        let report = TrainReport {
            objectives: self.objectives,
            final_data_loss: loss_value(&pruned, self.data, cfg.loss)?,
            final_regularizer: regularizer_value(&pruned, &cfg.regularizer),
            active_neurons: pruned.active_neuron_counts(cfg.prune_eps),
            path_core: sum_of_path(&pruned),
            weight_decay_core: sum_of_squares(&pruned),
        };
        Ok((pruned, report))
    }
}

/// Trains from `random_init(config.seed)` for `config.epochs` steps.
pub fn train(data: &Dataset, config: &TrainConfig) -> Result<(DeepNet, TrainReport)> {
    Trainer::new(data, config.clone())?.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub data_loss: f64,
    pub regularizer: f64,
    pub path_core: f64,
    pub active_neurons: Vec<usize>,
}

/// One training run per `λ`, all sharing the base configuration and seed.
pub fn sparsity_sweep(data: &Dataset, base: &TrainConfig, lambdas: &[f64]) -> Result<Vec<SweepRow>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("need at least one lambda".into()));
    }
    lambdas
        .iter()
        .map(|&lambda| {
            let mut cfg = base.clone();
            cfg.regularizer = RegularizerSpec::new(base.regularizer.kind, lambda)?;
            let (_, report) = train(data, &cfg)?;
            Ok(SweepRow {
                lambda,
                data_loss: report.final_data_loss,
                regularizer: report.final_regularizer,
                path_core: report.path_core,
                active_neurons: report.active_neurons,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::BottleneckLayer;
    use crate::norms::regularizer_core;

    fn spec(kind: RegularizerKind, lambda: f64) -> RegularizerSpec {
        RegularizerSpec::new(kind, lambda).unwrap()
    }

    fn config(widths: Vec<usize>, lambda: f64) -> TrainConfig {
        TrainConfig {
            widths,
            hidden_dims: Vec::new(),
            regularizer: spec(RegularizerKind::WeightDecayWithBoundary, lambda),
            loss: LossKind::Squared,
            step_size: 1e-2,
            epochs: 10,
            seed: 1,
            init_scale: 0.5,
            prune_eps: 0.0,
            rebalance_every: 0,
        }
    }

    fn line_data() -> Dataset {
        Dataset::new(vec![vec![0.0], vec![1.0]], vec![vec![0.5], vec![1.5]]).unwrap()
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(Vec::new(), Vec::new()).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![]).is_err());
        assert!(Dataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![vec![0.0], vec![0.0]]).is_err());
        assert!(Dataset::new(vec![vec![f64::NAN]], vec![vec![0.0]]).is_err());
    }

    #[test]
    fn loss_examples() {
        let zero = DeepNet::zeros(&[1, 1], &[2]).unwrap();
        let data = Dataset::new(vec![vec![1.0]], vec![vec![3.0]]).unwrap();
        assert_eq!(loss_value(&zero, &data, LossKind::Squared).unwrap(), 4.5);
        let zeros = Dataset::new(vec![vec![1.0], vec![2.0]], vec![vec![0.0], vec![0.0]]).unwrap();
        assert_eq!(loss_value(&zero, &zeros, LossKind::Squared).unwrap(), 0.0);

        let id = DeepNet::new(vec![BottleneckLayer::affine(Matrix::identity(1), vec![0.0]).unwrap()]).unwrap();
        let exact = Dataset::new(vec![vec![1.0], vec![-2.0]], vec![vec![1.0], vec![-2.0]]).unwrap();
        assert_eq!(loss_value(&id, &exact, LossKind::Squared).unwrap(), 0.0);
        let wrong = Dataset::new(vec![vec![1.0, 2.0]], vec![vec![0.0]]).unwrap();
        assert!(loss_value(&id, &wrong, LossKind::Squared).is_err());
    }

    #[test]
    fn gradient_examples() {
        let zero = DeepNet::zeros(&[2, 1], &[3]).unwrap();
        let data = Dataset::new(vec![vec![1.0, 2.0]], vec![vec![0.0]]).unwrap();
        let g = gradient(&zero, &data, &spec(RegularizerKind::PathWithBoundary, 0.0), LossKind::Squared).unwrap();
        assert!(g.is_zero());

        let neuron = BottleneckLayer::new(
            Matrix::from_rows(vec![vec![1.0]]).unwrap(),
            Matrix::from_rows(vec![vec![1.0]]).unwrap(),
            vec![0.0],
            Matrix::zeros(1, 1),
            vec![0.0],
        )
        .unwrap();
        let net = DeepNet::new(vec![neuron]).unwrap();
        let data = Dataset::new(vec![vec![1.0]], vec![vec![0.0]]).unwrap();
        let g = gradient(&net, &data, &spec(RegularizerKind::SumOfSquares, 0.0), LossKind::Squared).unwrap();
        let l = &g.layers[0];
        assert_eq!(l.v[(0, 0)], 1.0);
        assert_eq!(l.w[(0, 0)], 1.0);
        assert_eq!(l.b[0], -1.0);
        // Skip terms see the residual directly.
        assert_eq!(l.c[(0, 0)], 1.0);
        assert_eq!(l.c0[0], 1.0);
    }

    #[test]
    fn relu_subgradient_at_kink_is_zero() {
        let neuron = BottleneckLayer::new(
            Matrix::from_rows(vec![vec![1.0]]).unwrap(),
            Matrix::from_rows(vec![vec![1.0]]).unwrap(),
            vec![1.0],
            Matrix::zeros(1, 1),
            vec![0.0],
        )
        .unwrap();
        let net = DeepNet::new(vec![neuron]).unwrap();
        let data = Dataset::new(vec![vec![1.0]], vec![vec![2.0]]).unwrap();
        let g = gradient(&net, &data, &spec(RegularizerKind::SumOfPath, 0.0), LossKind::Squared).unwrap();
        assert_eq!(g.layers[0].w[(0, 0)], 0.0);
        assert_eq!(g.layers[0].b[0], 0.0);
    }

    #[test]
    fn train_epochs_zero_returns_init() {
        let data = line_data();
        let mut cfg = config(vec![4], 1e-3);
        cfg.epochs = 0;
        let (net, report) = train(&data, &cfg).unwrap();
        assert_eq!(report.objectives.len(), 1);
        assert_eq!(net, DeepNet::random_init(&[1, 1], &[4], 1, 0.5).unwrap());
    }

    #[test]
    fn zero_fixed_point() {
        let data = Dataset::new(vec![vec![0.3], vec![-1.0]], vec![vec![0.0], vec![0.0]]).unwrap();
        let mut cfg = config(vec![3], 0.0);
        cfg.init_scale = 0.0;
        cfg.epochs = 20;
        let (net, report) = train(&data, &cfg).unwrap();
        assert!(report.objectives.iter().all(|&o| o == 0.0));
        assert_eq!(net.forward(&[0.7]).unwrap(), vec![0.0]);
    }

    #[test]
    fn config_validation() {
        let data = line_data();
        let mut cfg = config(vec![4], 1e-3);
        cfg.step_size = 0.0;
        assert!(train(&data, &cfg).is_err());
        let mut cfg = config(vec![4, 2], 1e-3);
        assert!(train(&data, &cfg).is_err());
        cfg.hidden_dims = vec![2];
        assert!(train(&data, &cfg).is_ok());
        let mut cfg = config(vec![], 1e-3);
        cfg.hidden_dims = vec![];
        assert!(train(&data, &cfg).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let data = line_data();
        let mut cfg = config(vec![4], 0.0);
        cfg.step_size = 1e6;
        cfg.epochs = 200;
        assert!(train(&data, &cfg).is_err());
    }

    #[test]
    fn rebalancing_keeps_loss_and_lowers_weight_decay() {
        let data = Dataset::new(
            vec![vec![-1.0, 0.5], vec![0.2, 0.1], vec![1.0, -0.7]],
            vec![vec![0.3], vec![-0.2], vec![1.1]],
        )
        .unwrap();
        let cfg = config(vec![6], 1e-2);
        let mut trainer = Trainer::new(&data, cfg.clone()).unwrap();
        for _ in 0..25 {
            trainer.step().unwrap();
            let net = trainer.net().clone();
            let balanced = balance_net(&net);
            let before = loss_value(&net, &data, LossKind::Squared).unwrap();
            let after = loss_value(&balanced, &data, LossKind::Squared).unwrap();
            assert!((before - after).abs() < 1e-9);
            let wd = |n: &DeepNet| regularizer_core(n, RegularizerKind::WeightDecayWithBoundary);
            assert!(wd(&balanced) <= wd(&net) + 1e-12);
        }
    }

    #[test]
    fn sweep_rows() {
        let data = line_data();
        let cfg = config(vec![4], 1e-3);
        let rows = sparsity_sweep(&data, &cfg, &[0.0, 1e-2]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].regularizer, 0.0);
        let (_, report) = train(&data, &TrainConfig { regularizer: spec(RegularizerKind::WeightDecayWithBoundary, 1e-2), ..cfg.clone() }).unwrap();
        assert_eq!(rows[1].data_loss, report.final_data_loss);
        assert!(sparsity_sweep(&data, &cfg, &[]).is_err());
    }
}

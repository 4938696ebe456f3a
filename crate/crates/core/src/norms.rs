//! Norms, seminorms, regularizers and Lipschitz bounds expressed in network
//! parameters.
//!
//! The per-layer building blocks are
//!
//! * the path sum `Σ_k ‖v_k‖₁ ‖w_k‖₂` (the Radon-domain total variation of a
//!   shallow layer),
//! * the boundary term `Σ_m |s_m(0)| + Σ_n |s_m(e_n) − s_m(0)|`, evaluated by
//!   running the layer on `0` and the canonical basis of its own input space,
//! * the weight-decay core `(‖V‖²₁,₂ + ‖W‖²_F) / 2`,
//! * the skip `ℓ¹` term `‖C‖₁,₁ + ‖c0‖₁`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::linalg::{frobenius_norm_squared, l1_norm, mixed_l1l1, mixed_l1l2_squared};
use crate::network::{BottleneckLayer, DeepNet, StandardNet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerKind {
    /// Path sum plus boundary term, per layer.
    PathWithBoundary,
    /// Weight-decay core plus boundary term, per layer.
    WeightDecayWithBoundary,
    /// Path sum plus `‖C‖₁,₁ + ‖c0‖₁`, per layer.
    PathWithSkipL1,
    /// Weight-decay core plus `‖C‖₁,₁ + ‖c0‖₁`, per layer.
    WeightDecayWithSkipL1,
    /// Sum of layer path sums.
    SumOfPath,
    /// Sum of layer weight-decay cores.
    SumOfSquares,
    /// Product of layer path sums.
    ProductOfPaths,
}

impl RegularizerKind {
    pub const ALL: [RegularizerKind; 7] = [
        RegularizerKind::PathWithBoundary,
        RegularizerKind::WeightDecayWithBoundary,
        RegularizerKind::PathWithSkipL1,
        RegularizerKind::WeightDecayWithSkipL1,
        RegularizerKind::SumOfPath,
        RegularizerKind::SumOfSquares,
        RegularizerKind::ProductOfPaths,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegularizerKind::PathWithBoundary => "path_with_boundary",
            RegularizerKind::WeightDecayWithBoundary => "weight_decay_with_boundary",
            RegularizerKind::PathWithSkipL1 => "path_with_skip_l1",
            RegularizerKind::WeightDecayWithSkipL1 => "weight_decay_with_skip_l1",
            RegularizerKind::SumOfPath => "sum_of_path",
            RegularizerKind::SumOfSquares => "sum_of_squares",
            RegularizerKind::ProductOfPaths => "product_of_paths",
        }
    }
}

impl fmt::Display for RegularizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegularizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown regularizer kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizerSpec {
    pub kind: RegularizerKind,
    pub lambda: f64,
}

impl RegularizerSpec {
    pub fn new(kind: RegularizerKind, lambda: f64) -> Result<Self> {
        let spec = Self { kind, lambda };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "regularization weight must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// `Σ_k ‖v_k‖₁ ‖w_k‖₂`.
pub fn layer_path_sum(layer: &BottleneckLayer) -> f64 {
    (0..layer.width()).map(|k| layer.neuron_strength(k)).sum()
}

/// `(‖V‖²₁,₂ + ‖W‖²_F) / 2`.
pub fn layer_weight_decay(layer: &BottleneckLayer) -> f64 {
    0.5 * (mixed_l1l2_squared(&layer.v) + frobenius_norm_squared(&layer.w))
}

/// `‖C‖₁,₁ + ‖c0‖₁`.
pub fn layer_skip_l1(layer: &BottleneckLayer) -> f64 {
    mixed_l1l1(&layer.c) + l1_norm(&layer.c0)
}

/// Layer outputs at `0` and at each canonical basis vector `e_n`.
pub(crate) fn boundary_evaluations(layer: &BottleneckLayer) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = layer.in_dim();
    let mut x = vec![0.0; d];
    let at_zero = layer.forward(&x).expect("validated layer");
    let at_axes = (0..d)
        .map(|n| {
            x[n] = 1.0;
            let out = layer.forward(&x).expect("validated layer");
            x[n] = 0.0;
            out
        })
        .collect();
    (at_zero, at_axes)
}

/// `Σ_m ( |s_m(0)| + Σ_n |s_m(e_n) − s_m(0)| )`.
pub fn layer_boundary_term(layer: &BottleneckLayer) -> f64 {
    let (at_zero, at_axes) = boundary_evaluations(layer);
    let mut total = l1_norm(&at_zero);
    for out in &at_axes {
        total += out
            .iter()
            .zip(&at_zero)
            .map(|(a, z)| (a - z).abs())
            .sum::<f64>();
    }
    total
}

fn require_scalar(layer: &BottleneckLayer) -> Result<()> {
    if layer.out_dim() != 1 {
        return Err(dim_err(format!(
            "expected a scalar-output layer, got output dimension {}",
            layer.out_dim()
        )));
    }
    Ok(())
}

/// Second-order Radon-domain total variation of a shallow scalar network:
/// `Σ_k |v_k| ‖w_k‖₂`.
pub fn rtv2_shallow(layer: &BottleneckLayer) -> Result<f64> {
    require_scalar(layer)?;
    Ok(layer_path_sum(layer))
}

/// Banach norm of a shallow scalar network: the total variation plus the
/// boundary term.
pub fn rbv2_norm_scalar(layer: &BottleneckLayer) -> Result<f64> {
    require_scalar(layer)?;
    Ok(rbv2_norm_vector(layer))
}

/// Banach norm of a vector-valued shallow network.
pub fn rbv2_norm_vector(layer: &BottleneckLayer) -> f64 {
    layer_path_sum(layer) + layer_boundary_term(layer)
}

/// Sum of per-layer Banach norms.
pub fn deep_compositional_norm(net: &DeepNet) -> f64 {
    net.layers().iter().map(rbv2_norm_vector).sum()
}

/// `ℓ¹/ℓ¹` Lipschitz bound: product of per-layer Banach norms.
pub fn lipschitz_bound(net: &DeepNet) -> f64 {
    net.layers().iter().map(rbv2_norm_vector).product()
}

/// Largest observed `‖f(x) − f(y)‖₁ / ‖x − y‖₁` over `n_pairs` random pairs
/// drawn uniformly from `[−radius, radius]^{d_0}`.
pub fn empirical_lipschitz(net: &DeepNet, n_pairs: usize, seed: u64, radius: f64) -> Result<f64> {
    if n_pairs == 0 {
        return Err(Error::InvalidArgument("need at least one pair".into()));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling radius must be positive, got {radius}"
        )));
    }
    let d = net.input_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..d).map(|_| rng.random_range(-radius..=radius)).collect()
    };
    let mut best = 0.0f64;
    for _ in 0..n_pairs {
        let (x, y, dist) = loop {
            let x = sample(&mut rng);
            let y = sample(&mut rng);
            let dist: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
            if dist > 0.0 {
                break (x, y, dist);
            }
        };
        let fx = net.forward(&x)?;
        let fy = net.forward(&y)?;
        let diff: f64 = fx.iter().zip(&fy).map(|(a, b)| (a - b).abs()).sum();
        best = best.max(diff / dist);
    }
    Ok(best)
}

/// `Π_ℓ Σ_k ‖v_k^(ℓ)‖₁ ‖w_k^(ℓ)‖₂`.
pub fn product_of_paths(net: &DeepNet) -> f64 {
    net.layers().iter().map(layer_path_sum).product()
}

/// Classic path norm of a scalar-output standard network, computed as
/// `|A^(L)| ⋯ |A^(0)| 𝟙`.
pub fn classic_path_norm(std: &StandardNet) -> Result<f64> {
    if std.output_dim() != 1 {
        return Err(dim_err(format!(
            "classic path norm needs a scalar output, got dimension {}",
            std.output_dim()
        )));
    }
    let mut acc = vec![1.0; std.input_dim()];
    for a in std.matrices() {
        acc = a.abs().matvec(&acc)?;
    }
    Ok(acc[0])
}

/// Hybrid path sum with first-layer `ℓ²` row norms of `W^(1)`, interior
/// `|A^(ℓ)|` entries and last-layer `ℓ¹` column norms of `V^(L)`.
/// Biases and skips are ignored.
pub fn mixed_path_lower_bound(net: &DeepNet) -> f64 {
    let layers = net.layers();
    let first = &layers[0];
    let mut acc: Vec<f64> = (0..first.width())
        .map(|k| crate::linalg::l2_norm(first.neuron_w(k)))
        .collect();
    for pair in layers.windows(2) {
        let interior = pair[1].w.matmul(&pair[0].v).expect("validated chain").abs();
        acc = interior.matvec(&acc).expect("validated chain");
    }
    let last = &layers[layers.len() - 1];
    (0..last.width())
        .map(|k| acc[k] * l1_norm(&last.neuron_v(k)))
        .sum()
}

/// `Σ_ℓ Σ_k ‖v_k‖₁ ‖w_k‖₂`.
pub fn sum_of_path(net: &DeepNet) -> f64 {
    net.layers().iter().map(layer_path_sum).sum()
}

/// `½ Σ_ℓ (‖V^(ℓ)‖²₁,₂ + ‖W^(ℓ)‖²_F)`.
pub fn sum_of_squares(net: &DeepNet) -> f64 {
    net.layers().iter().map(layer_weight_decay).sum()
}

/// The regularizer selected by `kind`, without the `λ` factor.
pub fn regularizer_core(net: &DeepNet, kind: RegularizerKind) -> f64 {
    use RegularizerKind::*;
    let layers = net.layers();
    match kind {
        PathWithBoundary => layers
            .iter()
            .map(|l| layer_path_sum(l) + layer_boundary_term(l))
            .sum(),
        WeightDecayWithBoundary => layers
            .iter()
            .map(|l| layer_weight_decay(l) + layer_boundary_term(l))
            .sum(),
        PathWithSkipL1 => layers
            .iter()
            .map(|l| layer_path_sum(l) + layer_skip_l1(l))
            .sum(),
        WeightDecayWithSkipL1 => layers
            .iter()
            .map(|l| layer_weight_decay(l) + layer_skip_l1(l))
            .sum(),
        SumOfPath => sum_of_path(net),
        SumOfSquares => sum_of_squares(net),
        ProductOfPaths => product_of_paths(net),
    }
}

/// `λ` times the selected functional.
pub fn regularizer_value(net: &DeepNet, spec: &RegularizerSpec) -> f64 {
    if spec.lambda == 0.0 {
        return 0.0;
    }
    spec.lambda * regularizer_core(net, spec.kind)
}

//! Function-preserving per-neuron reparameterizations.
//!
//! Both rely on positive homogeneity of the ReLU:
//! `v ρ(wᵀx − b) = (αv) ρ((w/α)ᵀx − b/α)` for every `α > 0`.

use crate::linalg::{l1_norm, l2_norm};
use crate::network::{BottleneckLayer, DeepNet};

fn scale_neuron(layer: &mut BottleneckLayer, k: usize, alpha: f64) {
    for m in 0..layer.out_dim() {
        layer.v[(m, k)] *= alpha;
    }
    layer.w.row_mut(k).iter_mut().for_each(|x| *x /= alpha);
    layer.b[k] /= alpha;
}

/// Rescales every neuron with `w_k ≠ 0` so that `‖w_k‖₂ = 1`.
pub fn normalize_directions(layer: &BottleneckLayer) -> BottleneckLayer {
    let mut out = layer.clone();
    for k in 0..out.width() {
        let norm = l2_norm(out.neuron_w(k));
        if norm > 0.0 && norm != 1.0 {
            scale_neuron(&mut out, k, norm);
        }
    }
    out
}

pub fn normalize_net_directions(net: &DeepNet) -> DeepNet {
    let layers = net.layers().iter().map(normalize_directions).collect();
    DeepNet::new(layers).expect("rescaling preserves shapes")
}

/// Balances one layer: each neuron with nonzero `v_k` and `w_k` is scaled by
/// `α = √(‖w_k‖₂ / ‖v_k‖₁)`, after which `‖v_k‖₁ = ‖w_k‖₂`.
pub fn balance_layer(layer: &BottleneckLayer) -> BottleneckLayer {
    let mut out = layer.clone();
    for k in 0..out.width() {
        let v1 = l1_norm(&out.neuron_v(k));
        let w2 = l2_norm(out.neuron_w(k));
        if v1 > 0.0 && w2 > 0.0 && v1 != w2 {
            scale_neuron(&mut out, k, (w2 / v1).sqrt());
        }
    }
    out
}

/// Balances every neuron in the network.
pub fn balance_net(net: &DeepNet) -> DeepNet {
    let layers = net.layers().iter().map(balance_layer).collect();
    DeepNet::new(layers).expect("rescaling preserves shapes")
}

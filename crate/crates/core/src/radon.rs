//! Radon-domain view of shallow scalar networks.
//!
//! A network `s(x) = Σ_k v_k ρ(w_kᵀx − b_k) + cᵀx + c₀` splits into a finite
//! measure on (direction, offset) pairs and an affine part fixed by the
//! boundary functionals `f ↦ f(0)` and `f ↦ f(e_k) − f(0)`. The network is
//! recovered exactly from the kernel
//!
//! ```text
//! g(x, (w, b)) = |wᵀx − b|/2 − (|b|/2)(1 − Σ_k x_k) − Σ_k x_k |w_k − b|/2
//! ```
//!
//! which vanishes at `0` and every `e_k`. Even measures are stored one-sided:
//! one atom per neuron.

use crate::error::{dim_err, Error, Result};
use crate::linalg::{dot, l2_norm};
use crate::network::BottleneckLayer;

/// Accepted deviation of a direction from the unit sphere.
pub const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RadonAtom {
    pub weight: f64,
    pub direction: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRadonMeasure {
    pub dimension: usize,
    pub atoms: Vec<RadonAtom>,
}

impl DiscreteRadonMeasure {
    pub fn empty(dimension: usize) -> Self {
        Self {
            dimension,
            atoms: Vec::new(),
        }
    }

    /// `Σ |weight|`.
    pub fn total_variation(&self) -> f64 {
        measure_total_variation(self)
    }
}

/// Affine part of a function: `f(0)` and `f(e_k) − f(0)` for each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineBoundary {
    pub value_at_origin: f64,
    pub axis_deltas: Vec<f64>,
}

impl AffineBoundary {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.value_at_origin + dot(&self.axis_deltas, x)
    }
}

fn check_unit(w: &[f64]) -> Result<()> {
    let n = l2_norm(w);
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidArgument(format!(
            "direction must lie on the unit sphere, has norm {n}"
        )));
    }
    Ok(())
}

fn kernel_unchecked(x: &[f64], w: &[f64], b: f64) -> f64 {
    let ridge = 0.5 * (dot(w, x) - b).abs();
    let sum_x: f64 = x.iter().sum();
    let origin = 0.5 * b.abs() * (1.0 - sum_x);
    let axes: f64 = x
        .iter()
        .zip(w)
        .map(|(xk, wk)| xk * 0.5 * (wk - b).abs())
        .sum();
    ridge - origin - axes
}

/// Kernel `g(x, (w, b))` of the right inverse with `ρ = |·|/2`.
pub fn kernel_g_phi(x: &[f64], w: &[f64], b: f64) -> Result<f64> {
    if x.len() != w.len() {
        return Err(dim_err(format!(
            "point has dimension {} but direction has {}",
            x.len(),
            w.len()
        )));
    }
    check_unit(w)?;
    Ok(kernel_unchecked(x, w, b))
}

/// Offsets outside `[b_low, b_high]` give `kernel_g_phi(x, w, b) = 0`.
///
/// Axes with `x_k = 0` do not contribute, so `x = 0` yields `[0, 0]`.
pub fn support_bounds(x: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    if x.len() != w.len() {
        return Err(dim_err(format!(
            "point has dimension {} but direction has {}",
            x.len(),
            w.len()
        )));
    }
    check_unit(w)?;
    let t = dot(w, x);
    let (mut low, mut high) = (t.min(0.0), t.max(0.0));
    for (xk, wk) in x.iter().zip(w) {
        if *xk != 0.0 {
            low = low.min(*wk);
            high = high.max(*wk);
        }
    }
    Ok((low, high))
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

/// Splits a shallow scalar network into its Radon-domain measure and affine
/// boundary data. Neurons with `w_k = 0` only enter the boundary data.
pub fn extract_measure(layer: &BottleneckLayer) -> Result<(DiscreteRadonMeasure, AffineBoundary)> {
    require_scalar(layer)?;
    let d = layer.in_dim();
    let atoms = (0..layer.width())
        .filter_map(|k| {
            let w = layer.neuron_w(k);
            let norm = l2_norm(w);
            (norm > 0.0).then(|| RadonAtom {
                weight: layer.v[(0, k)] * norm,
                direction: w.iter().map(|x| x / norm).collect(),
                offset: layer.b[k] / norm,
            })
        })
        .collect();

    let (at_zero, at_axes) = crate::norms::boundary_evaluations(layer);
    let origin = at_zero[0];
    let boundary = AffineBoundary {
        value_at_origin: origin,
        axis_deltas: at_axes.iter().map(|out| out[0] - origin).collect(),
    };
    Ok((DiscreteRadonMeasure { dimension: d, atoms }, boundary))
}

pub fn measure_total_variation(m: &DiscreteRadonMeasure) -> f64 {
    m.atoms.iter().map(|a| a.weight.abs()).sum()
}

/// `Σ_atoms weight · g(x, (w, b)) + f(0) + Σ_k (f(e_k) − f(0)) x_k`.
pub fn reconstruct(m: &DiscreteRadonMeasure, q: &AffineBoundary, x: &[f64]) -> Result<f64> {
    if x.len() != m.dimension || q.axis_deltas.len() != m.dimension {
        return Err(dim_err(format!(
            "measure has dimension {}, boundary {}, point {}",
            m.dimension,
            q.axis_deltas.len(),
            x.len()
        )));
    }
    let mut total = 0.0;
    for atom in &m.atoms {
        total += atom.weight * kernel_g_phi(x, &atom.direction, atom.offset)?;
    }
    Ok(total + q.eval(x))
}

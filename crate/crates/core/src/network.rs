//! The bottleneck-with-skip architecture.
//!
//! Layer `ℓ` maps `x ↦ V ρ(W x − b) + C x + c0` with `ρ = max{0, ·}` applied
//! componentwise. `V` is `d_ℓ × K`, `W` is `K × d_{ℓ−1}`, and a width of
//! `K = 0` leaves a pure affine map.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{l1_norm, l2_norm, Matrix};

/// ReLU. Evaluates to 0 at 0.
#[inline]
pub fn relu(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckLayer {
    /// Output weights, `d_out × K`; column `k` is `v_k`.
    pub v: Matrix,
    /// Input weights, `K × d_in`; row `k` is `w_k`.
    pub w: Matrix,
    /// Biases, length `K`.
    pub b: Vec<f64>,
    /// Skip connection, `d_out × d_in`.
    pub c: Matrix,
    /// Output offset, length `d_out`.
    pub c0: Vec<f64>,
}

impl BottleneckLayer {
    pub fn new(v: Matrix, w: Matrix, b: Vec<f64>, c: Matrix, c0: Vec<f64>) -> Result<Self> {
        let layer = Self { v, w, b, c, c0 };
        layer.validate()?;
        Ok(layer)
    }

    /// All-zero layer with the given shape.
    pub fn zeros(d_in: usize, d_out: usize, width: usize) -> Self {
        Self {
            v: Matrix::zeros(d_out, width),
            w: Matrix::zeros(width, d_in),
            b: vec![0.0; width],
            c: Matrix::zeros(d_out, d_in),
            c0: vec![0.0; d_out],
        }
    }

    /// Zero-width layer computing `C x + c0`.
    pub fn affine(c: Matrix, c0: Vec<f64>) -> Result<Self> {
        let (d_out, d_in) = c.shape();
        Self::new(Matrix::zeros(d_out, 0), Matrix::zeros(0, d_in), Vec::new(), c, c0)
    }

    pub fn validate(&self) -> Result<()> {
        let (d_out, d_in) = self.c.shape();
        let k = self.b.len();
        if self.v.shape() != (d_out, k) {
            return Err(dim_err(format!(
                "V is {}x{}, expected {d_out}x{k}",
                self.v.rows(),
                self.v.cols()
            )));
        }
        if self.w.shape() != (k, d_in) {
            return Err(dim_err(format!(
                "W is {}x{}, expected {k}x{d_in}",
                self.w.rows(),
                self.w.cols()
            )));
        }
        if self.c0.len() != d_out {
            return Err(dim_err(format!(
                "c0 has length {}, expected {d_out}",
                self.c0.len()
            )));
        }
        let all_finite = self.b.iter().chain(&self.c0).all(|x| x.is_finite())
            && [&self.v, &self.w, &self.c]
                .iter()
                .all(|m| m.as_slice().iter().all(|x| x.is_finite()));
        if !all_finite {
            return Err(Error::InvalidArgument("non-finite layer parameter".into()));
        }
        Ok(())
    }

    pub fn in_dim(&self) -> usize {
        self.c.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.c.rows()
    }

    /// Number of neurons `K`.
    pub fn width(&self) -> usize {
        self.b.len()
    }

    pub fn neuron_v(&self, k: usize) -> Vec<f64> {
        self.v.column_vec(k)
    }

    pub fn neuron_w(&self, k: usize) -> &[f64] {
        self.w.row(k)
    }

    /// `‖v_k‖₁ · ‖w_k‖₂`.
    pub fn neuron_strength(&self, k: usize) -> f64 {
        l1_norm(&self.neuron_v(k)) * l2_norm(self.neuron_w(k))
    }

    /// Pre-activations `W x − b`.
    pub fn preactivations(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.w.matvec(x)?;
        for (zk, bk) in z.iter_mut().zip(&self.b) {
            *zk -= bk;
        }
        Ok(z)
    }

    /// Output given already computed pre-activations.
    pub(crate) fn output_from(&self, x: &[f64], pre: &[f64]) -> Vec<f64> {
        let hidden: Vec<f64> = pre.iter().map(|&z| relu(z)).collect();
        let mut out = self.c.matvec(x).expect("validated skip shape");
        for (i, o) in out.iter_mut().enumerate() {
            *o += crate::linalg::dot(self.v.row(i), &hidden) + self.c0[i];
        }
        out
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim() {
            return Err(dim_err(format!(
                "layer expects input of length {}, got {}",
                self.in_dim(),
                x.len()
            )));
        }
        let pre = self.preactivations(x)?;
        Ok(self.output_from(x, &pre))
    }

    pub fn is_bias_free(&self) -> bool {
        self.b.iter().all(|&x| x == 0.0)
    }

    pub fn is_skip_free(&self) -> bool {
        self.c.is_zero() && self.c0.iter().all(|&x| x == 0.0)
    }

    pub fn remove_neuron(&mut self, k: usize) {
        self.v.remove_column(k);
        self.w.remove_row(k);
        self.b.remove(k);
    }

    pub(crate) fn param_count(&self) -> usize {
        self.v.as_slice().len()
            + self.w.as_slice().len()
            + self.b.len()
            + self.c.as_slice().len()
            + self.c0.len()
    }

    /// Parameter blocks in canonical order `V, W, b, C, c0`.
    pub(crate) fn blocks(&self) -> [&[f64]; 5] {
        [
            self.v.as_slice(),
            self.w.as_slice(),
            &self.b,
            self.c.as_slice(),
            &self.c0,
        ]
    }

    pub(crate) fn blocks_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.v.as_mut_slice(),
            self.w.as_mut_slice(),
            &mut self.b,
            self.c.as_mut_slice(),
            &mut self.c0,
        ]
    }
}

/// A deep ReLU network: composition of bottleneck layers.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepNet {
    layers: Vec<BottleneckLayer>,
}

impl DeepNet {
    pub fn new(layers: Vec<BottleneckLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument(
                "a network needs at least one layer".into(),
            ));
        }
        for (i, layer) in layers.iter().enumerate() {
            layer
                .validate()
                .map_err(|e| dim_err(format!("layer {}: {e}", i + 1)))?;
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(dim_err(format!(
                    "layer {} outputs {} values but layer {} expects {}",
                    i + 1,
                    pair[0].out_dim(),
                    i + 2,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// All-zero network with dims `d_0..d_L` and widths `K^(1)..K^(L)`.
    pub fn zeros(dims: &[usize], widths: &[usize]) -> Result<Self> {
        check_shape_args(dims, widths)?;
        Self::new(
            widths
                .iter()
                .enumerate()
                .map(|(i, &k)| BottleneckLayer::zeros(dims[i], dims[i + 1], k))
                .collect(),
        )
    }

    /// Random network: unit-norm `W` rows, `b ~ U[−1,1]·scale`,
    /// `V ~ N(0,1)·scale/√K`, zero skips. Fully determined by `seed`.
    pub fn random_init(dims: &[usize], widths: &[usize], seed: u64, scale: f64) -> Result<Self> {
        check_shape_args(dims, widths)?;
        if !scale.is_finite() {
            return Err(Error::InvalidArgument("init scale must be finite".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(widths.len());
        for (i, &k) in widths.iter().enumerate() {
            let (d_in, d_out) = (dims[i], dims[i + 1]);
            let mut layer = BottleneckLayer::zeros(d_in, d_out, k);
            for r in 0..k {
                let row = layer.w.row_mut(r);
                loop {
                    for x in row.iter_mut() {
                        *x = rng.sample(StandardNormal);
                    }
                    let n = l2_norm(row);
                    if n > 0.0 {
                        row.iter_mut().for_each(|x| *x /= n);
                        break;
                    }
                }
            }
            for bk in layer.b.iter_mut() {
                *bk = rng.random_range(-1.0..=1.0) * scale + 0.0;
            }
            let v_scale = if k > 0 { scale / (k as f64).sqrt() } else { 0.0 };
            for x in layer.v.as_mut_slice() {
                let g: f64 = rng.sample(StandardNormal);
                *x = g * v_scale + 0.0;
            }
            layers.push(layer);
        }
        Self::new(layers)
    }

    pub fn layers(&self) -> &[BottleneckLayer] {
        &self.layers
    }

    /// Mutable access to layer parameters. Callers must keep shapes intact.
    pub fn layers_mut(&mut self) -> &mut [BottleneckLayer] {
        &mut self.layers
    }

    pub fn into_layers(self) -> Vec<BottleneckLayer> {
        self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// `d_0, …, d_L`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].in_dim())
            .chain(self.layers.iter().map(BottleneckLayer::out_dim))
            .collect()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(BottleneckLayer::width).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.forward(&h)?;
        }
        Ok(h)
    }

    pub fn is_bias_skip_free(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.is_bias_free() && l.is_skip_free())
    }

    /// Merges `W^(ℓ+1) V^(ℓ)` into the standard bias- and skip-free form.
    /// Refuses networks with nonzero biases or skips.
    pub fn collapse_to_standard(&self) -> Result<StandardNet> {
        for (i, layer) in self.layers.iter().enumerate() {
            if !layer.is_bias_free() {
                return Err(Error::Precondition(format!(
                    "layer {} has nonzero biases; collapse needs a bias-free network",
                    i + 1
                )));
            }
            if !layer.is_skip_free() {
                return Err(Error::Precondition(format!(
                    "layer {} has a nonzero skip connection; collapse needs a skip-free network",
                    i + 1
                )));
            }
        }
        let n = self.layers.len();
        let mut mats = Vec::with_capacity(n + 1);
        mats.push(self.layers[0].w.clone());
        for l in 0..n - 1 {
            mats.push(self.layers[l + 1].w.matmul(&self.layers[l].v)?);
        }
        mats.push(self.layers[n - 1].v.clone());
        StandardNet::new(mats)
    }

    /// Removes every neuron with `‖v_k‖₁‖w_k‖₂ ≤ eps`. A removed neuron's
    /// constant output `v_k ρ(−b_k)` is folded into `c0` only when `w_k = 0`.
    pub fn prune(&self, eps: f64) -> DeepNet {
        let eps = eps.max(0.0);
        let mut net = self.clone();
        for layer in &mut net.layers {
            for k in (0..layer.width()).rev() {
                if layer.neuron_strength(k) > eps {
                    continue;
                }
                if layer.neuron_w(k).iter().all(|&x| x == 0.0) {
                    let hidden = relu(-layer.b[k]);
                    if hidden != 0.0 {
                        for (m, c) in layer.c0.iter_mut().enumerate() {
                            *c += layer.v[(m, k)] * hidden;
                        }
                    }
                }
                layer.remove_neuron(k);
            }
        }
        net
    }

    /// Per-layer count of neurons with strength above `eps`.
    pub fn active_neuron_counts(&self, eps: f64) -> Vec<usize> {
        let eps = eps.max(0.0);
        self.layers
            .iter()
            .map(|l| (0..l.width()).filter(|&k| l.neuron_strength(k) > eps).count())
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(BottleneckLayer::param_count).sum()
    }

    /// Flattens parameters as `V, W, b, C, c0` for each layer in order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            for block in layer.blocks() {
                out.extend_from_slice(block);
            }
        }
        out
    }

    /// Inverse of [`DeepNet::to_flat`].
    pub fn set_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(dim_err(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut rest = params;
        for layer in &mut self.layers {
            for block in layer.blocks_mut() {
                let (head, tail) = rest.split_at(block.len());
                block.copy_from_slice(head);
                rest = tail;
            }
        }
        Ok(())
    }
}

fn check_shape_args(dims: &[usize], widths: &[usize]) -> Result<()> {
    if widths.is_empty() {
        return Err(Error::InvalidArgument(
            "a network needs at least one layer".into(),
        ));
    }
    if dims.len() != widths.len() + 1 {
        return Err(dim_err(format!(
            "{} dims given for {} layers; expected {}",
            dims.len(),
            widths.len(),
            widths.len() + 1
        )));
    }
    Ok(())
}

/// Bias- and skip-free network `x̃^(ℓ) = ρ(A^(ℓ−1) x̃^(ℓ−1))`, output `A^(L) x̃^(L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardNet {
    matrices: Vec<Matrix>,
}

impl StandardNet {
    pub fn new(matrices: Vec<Matrix>) -> Result<Self> {
        if matrices.len() < 2 {
            return Err(Error::InvalidArgument(
                "a standard network needs at least two weight matrices".into(),
            ));
        }
        for (i, pair) in matrices.windows(2).enumerate() {
            if pair[1].cols() != pair[0].rows() {
                return Err(dim_err(format!(
                    "A^({}) has {} rows but A^({}) has {} columns",
                    i,
                    pair[0].rows(),
                    i + 1,
                    pair[1].cols()
                )));
            }
        }
        Ok(Self { matrices })
    }

    /// `A^(0), …, A^(L)`.
    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn input_dim(&self) -> usize {
        self.matrices[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.matrices[self.matrices.len() - 1].rows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (last, hidden) = self.matrices.split_last().expect("at least two matrices");
        let mut h = x.to_vec();
        for a in hidden {
            h = a.matvec(&h)?.into_iter().map(relu).collect();
        }
        last.matvec(&h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{numerical_rank, DEFAULT_RANK_TOL};
    use crate::test_support::{random_bias_free_net, random_net, random_points};
    use rand::SeedableRng;

    fn scalar_layer(v: f64, w: f64, b: f64, c: f64, c0: f64) -> BottleneckLayer {
        BottleneckLayer::new(
            Matrix::from_rows(vec![vec![v]]).unwrap(),
            Matrix::from_rows(vec![vec![w]]).unwrap(),
            vec![b],
            Matrix::from_rows(vec![vec![c]]).unwrap(),
            vec![c0],
        )
        .unwrap()
    }

    #[test]
    fn forward_examples() {
        let zero = DeepNet::zeros(&[3, 2, 1], &[4, 5]).unwrap();
        assert_eq!(zero.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0]);

        let net = DeepNet::new(vec![scalar_layer(1.0, 1.0, 0.0, 0.0, 0.0)]).unwrap();
        assert_eq!(net.forward(&[2.0]).unwrap(), vec![2.0]);
        assert_eq!(net.forward(&[-2.0]).unwrap(), vec![0.0]);

        let id = DeepNet::new(vec![BottleneckLayer::affine(Matrix::identity(3), vec![0.0; 3]).unwrap()])
            .unwrap();
        assert_eq!(id.forward(&[1.5, -2.0, 0.25]).unwrap(), vec![1.5, -2.0, 0.25]);
        assert!(id.forward(&[1.0]).is_err());
    }

    #[test]
    fn relu_at_zero_is_zero() {
        assert_eq!(relu(0.0), 0.0);
        assert_eq!(relu(-0.0), 0.0);
    }

    #[test]
    fn construction_validates_dimensions() {
        assert!(DeepNet::new(Vec::new()).is_err());
        let l1 = BottleneckLayer::zeros(2, 3, 1);
        let l2 = BottleneckLayer::zeros(2, 1, 1);
        assert!(DeepNet::new(vec![l1, l2]).is_err());
        assert!(BottleneckLayer::new(
            Matrix::zeros(1, 2),
            Matrix::zeros(1, 1),
            vec![0.0],
            Matrix::zeros(1, 1),
            vec![0.0]
        )
        .is_err());
    }

    #[test]
    fn collapse_examples() {
        let net = random_bias_free_net(&mut ChaCha8Rng::seed_from_u64(1), &[3, 2], &[4]);
        let std = net.collapse_to_standard().unwrap();
        assert_eq!(std.matrices()[0], net.layers()[0].w);
        assert_eq!(std.matrices()[1], net.layers()[0].v);

        // V^(1) = [[1],[1]], W^(2) = [[1, 1]] gives A^(1) = [[2]].
        let l1 = BottleneckLayer::new(
            Matrix::from_rows(vec![vec![1.0], vec![1.0]]).unwrap(),
            Matrix::from_rows(vec![vec![1.0]]).unwrap(),
            vec![0.0],
            Matrix::zeros(2, 1),
            vec![0.0; 2],
        )
        .unwrap();
        let l2 = BottleneckLayer::new(
            Matrix::from_rows(vec![vec![1.0]]).unwrap(),
            Matrix::from_rows(vec![vec![1.0, 1.0]]).unwrap(),
            vec![0.0],
            Matrix::zeros(1, 2),
            vec![0.0],
        )
        .unwrap();
        let std = DeepNet::new(vec![l1, l2]).unwrap().collapse_to_standard().unwrap();
        assert_eq!(std.matrices()[1], Matrix::from_rows(vec![vec![2.0]]).unwrap());

        let biased = DeepNet::new(vec![scalar_layer(1.0, 1.0, 0.5, 0.0, 0.0)]).unwrap();
        assert!(matches!(biased.collapse_to_standard(), Err(Error::Precondition(_))));
        let skipped = DeepNet::new(vec![scalar_layer(1.0, 1.0, 0.0, 1.0, 0.0)]).unwrap();
        assert!(skipped.collapse_to_standard().is_err());
    }

    #[test]
    fn standard_forward_examples() {
        let zero = StandardNet::new(vec![Matrix::zeros(2, 3), Matrix::zeros(1, 2)]).unwrap();
        assert_eq!(zero.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0]);
        let one = StandardNet::new(vec![
            Matrix::from_rows(vec![vec![1.0]]).unwrap(),
            Matrix::from_rows(vec![vec![1.0]]).unwrap(),
        ])
        .unwrap();
        assert_eq!(one.forward(&[3.0]).unwrap(), vec![3.0]);
        assert!(StandardNet::new(vec![Matrix::zeros(2, 3), Matrix::zeros(1, 3)]).is_err());
    }

    #[test]
    fn collapsed_net_agrees_with_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = random_bias_free_net(&mut rng, &[4, 3, 2, 1], &[5, 6, 3]);
        let std = net.collapse_to_standard().unwrap();
        for x in random_points(&mut rng, 200, 4, 3.0) {
            let a = net.forward(&x).unwrap();
            let b = std.forward(&x).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() < 1e-9);
            }
        }
        let widths = net.widths();
        let dims = net.dims();
        for (l, a) in std.matrices().iter().enumerate() {
            let r = numerical_rank(a, DEFAULT_RANK_TOL).unwrap();
            let bound = if l == 0 || l == widths.len() {
                a.rows().min(a.cols())
            } else {
                dims[l].min(widths[l - 1]).min(widths[l])
            };
            assert!(r <= bound);
        }
    }

    #[test]
    fn prune_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = random_net(&mut rng, &[2, 2], &[3]);
        assert_eq!(net.prune(0.0), net);

        // Zero coefficient neuron is removed without changing the function.
        let mut with_dead = net.clone();
        let layer = &mut with_dead.layers_mut()[0];
        for m in 0..2 {
            layer.v[(m, 1)] = 0.0;
        }
        let pruned = with_dead.prune(0.0);
        assert_eq!(pruned.widths(), vec![2]);
        for x in random_points(&mut rng, 50, 2, 2.0) {
            assert_eq!(with_dead.forward(&x).unwrap(), pruned.forward(&x).unwrap());
        }

        // Tiny but nonzero neuron below the threshold.
        let mut tiny = net.clone();
        let layer = &mut tiny.layers_mut()[0];
        for m in 0..2 {
            layer.v[(m, 0)] = 0.0;
        }
        layer.v[(0, 0)] = 1e-12;
        layer.w.row_mut(0).copy_from_slice(&[1.0, 0.0]);
        let counts_before = tiny.active_neuron_counts(1e-9);
        let pruned = tiny.prune(1e-9);
        assert_eq!(pruned.widths(), vec![2]);
        assert_eq!(counts_before, vec![2]);
        assert_eq!(pruned.active_neuron_counts(1e-9), vec![2]);
        assert_eq!(tiny.active_neuron_counts(0.0), vec![3]);
    }

    #[test]
    fn prune_folds_constant_neurons() {
        // w = 0, b = -2: the neuron outputs v·ρ(2) = 2v everywhere.
        let layer = BottleneckLayer::new(
            Matrix::from_rows(vec![vec![3.0]]).unwrap(),
            Matrix::zeros(1, 1),
            vec![-2.0],
            Matrix::from_rows(vec![vec![1.0]]).unwrap(),
            vec![0.5],
        )
        .unwrap();
        let net = DeepNet::new(vec![layer]).unwrap();
        let pruned = net.prune(0.0);
        assert_eq!(pruned.widths(), vec![0]);
        assert_eq!(pruned.layers()[0].c0, vec![6.5]);
        for x in [-1.0, 0.0, 2.5] {
            assert_eq!(net.forward(&[x]).unwrap(), pruned.forward(&[x]).unwrap());
        }
        // Idempotent.
        assert_eq!(pruned.prune(0.0), pruned);
    }

    #[test]
    fn active_counts() {
        let zero = DeepNet::zeros(&[2, 3, 1], &[4, 2]).unwrap();
        assert_eq!(zero.active_neuron_counts(0.0), vec![0, 0]);
        let net = random_net(&mut ChaCha8Rng::seed_from_u64(11), &[2, 3, 1], &[4, 2]);
        assert_eq!(net.active_neuron_counts(-0.0), net.active_neuron_counts(0.0));
        assert_eq!(net.active_neuron_counts(0.0), vec![4, 2]);
    }

    #[test]
    fn random_init_examples() {
        let a = DeepNet::random_init(&[3, 2, 1], &[5, 4], 42, 1.0).unwrap();
        let b = DeepNet::random_init(&[3, 2, 1], &[5, 4], 42, 1.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, DeepNet::random_init(&[3, 2, 1], &[5, 4], 43, 1.0).unwrap());

        let z = DeepNet::random_init(&[3, 2, 1], &[5, 4], 42, 0.0).unwrap();
        for layer in z.layers() {
            assert!(layer.v.is_zero());
            assert!(layer.b.iter().all(|&x| x == 0.0));
            for k in 0..layer.width() {
                assert!((l2_norm(layer.neuron_w(k)) - 1.0).abs() < 1e-12);
            }
            assert!(layer.c.is_zero());
        }

        let affine = DeepNet::random_init(&[2, 2], &[0], 1, 1.0).unwrap();
        assert_eq!(affine.forward(&[3.0, -1.0]).unwrap(), vec![0.0, 0.0]);
        assert!(DeepNet::random_init(&[2, 2], &[1, 1], 1, 1.0).is_err());
    }

    #[test]
    fn flat_round_trip() {
        let net = random_net(&mut ChaCha8Rng::seed_from_u64(5), &[2, 3, 1], &[2, 4]);
        let flat = net.to_flat();
        assert_eq!(flat.len(), net.param_count());
        let mut other = DeepNet::zeros(&[2, 3, 1], &[2, 4]).unwrap();
        other.set_flat(&flat).unwrap();
        assert_eq!(other, net);
        assert!(other.set_flat(&flat[1..]).is_err());
    }

    #[test]
    fn per_neuron_rescaling_preserves_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = random_net(&mut rng, &[3, 2, 2], &[4, 3]);
        let mut scaled = net.clone();
        for layer in scaled.layers_mut() {
            for k in 0..layer.width() {
                let alpha: f64 = rng.random_range(0.1..10.0);
                for m in 0..layer.out_dim() {
                    layer.v[(m, k)] *= alpha;
                }
                layer.w.row_mut(k).iter_mut().for_each(|x| *x /= alpha);
                layer.b[k] /= alpha;
            }
        }
        for x in random_points(&mut rng, 200, 3, 3.0) {
            let a = net.forward(&x).unwrap();
            let b = scaled.forward(&x).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() < 1e-12 * (1.0 + p.abs()));
            }
        }
    }
}

//! Random fixtures shared by unit tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::Matrix;
use crate::network::{BottleneckLayer, DeepNet};

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

fn gaussian_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Network with every parameter Gaussian, including biases and skips.
pub fn random_net<R: Rng>(rng: &mut R, dims: &[usize], widths: &[usize]) -> DeepNet {
    let layers = widths
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let (d_in, d_out) = (dims[i], dims[i + 1]);
            BottleneckLayer::new(
                gaussian_matrix(rng, d_out, k),
                gaussian_matrix(rng, k, d_in),
                gaussian_vec(rng, k),
                gaussian_matrix(rng, d_out, d_in),
                gaussian_vec(rng, d_out),
            )
            .unwrap()
        })
        .collect();
    DeepNet::new(layers).unwrap()
}

pub fn random_bias_free_net<R: Rng>(rng: &mut R, dims: &[usize], widths: &[usize]) -> DeepNet {
    let mut net = random_net(rng, dims, widths);
    for layer in net.layers_mut() {
        layer.b.iter_mut().for_each(|x| *x = 0.0);
        layer.c.as_mut_slice().iter_mut().for_each(|x| *x = 0.0);
        layer.c0.iter_mut().for_each(|x| *x = 0.0);
    }
    net
}

pub fn random_points<R: Rng>(rng: &mut R, n: usize, d: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-radius..=radius)).collect())
        .collect()
}

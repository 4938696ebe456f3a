//! Deep ReLU networks with skip connections and linear bottlenecks, their
//! Radon-domain norms, and a small deterministic trainer.
//!
//! Each layer computes `x ↦ V ρ(W x − b) + C x + c0` with `ρ` the ReLU.

pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod network;
pub mod norms;
pub mod radon;
pub mod rescale;
pub mod trainer;

#[cfg(test)]
mod test_support;

pub use error::{Error, Result};
pub use linalg::{numerical_rank, Matrix};
pub use network::{relu, BottleneckLayer, DeepNet, StandardNet};
pub use norms::{RegularizerKind, RegularizerSpec};
pub use radon::{AffineBoundary, DiscreteRadonMeasure, RadonAtom};
pub use trainer::{train, Dataset, LossKind, TrainConfig, TrainReport};

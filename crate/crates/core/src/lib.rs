//! Simulation and analysis of the isolated points model of GAN training.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod divergence;
pub mod dynamics;
pub mod error;
pub mod expansion;
pub mod experiments;
pub mod kernels;
pub mod metrics;
pub mod rng;
pub mod stability;
pub mod svg;
pub mod transport;

pub use dynamics::{DiscreteDistribution, DiscriminatorState, TrainConfig, TrainingTrace};
pub use error::{Error, Result};
pub use kernels::{Kernel, KernelSpec};

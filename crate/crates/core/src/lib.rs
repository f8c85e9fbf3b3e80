//! Tailed multi-layer perceptrons (T-MLP) for level-of-detail implicit neural
//! representations.
//!
//! A T-MLP attaches an output head to every hidden layer of a sine-activated
//! MLP. Each head predicts the residual left by the heads before it, so the
//! running sums `y_1, ..., y_k` form a coarse-to-fine family of
//! reconstructions from a single network trained against one full-resolution
//! target.
//!
//! Modules:
//! - [`numerics`]: dense kernels, Adam, finite-difference oracle.
//! - [`model`]: architectures, SIREN init, forward/backward.
//! - [`training`]: losses, schedules, the training loop, head probing.
//! - [`signals`]: images, analytic SDFs, samplers, noise.
//! - [`lod`]: level evaluation, rendering, contouring, metrics.
//! - [`stream`]: the prefix-decodable `.tmlp` container.

pub mod error;
pub mod lod;
pub mod model;
pub mod numerics;
pub mod seed;
pub mod signals;
pub mod stream;
pub mod training;

pub use error::{Error, Result};
pub use model::{Architecture, ModelConfig, ModelParams, TailOutputs};

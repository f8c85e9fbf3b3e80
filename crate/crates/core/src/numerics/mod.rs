//! Dense arithmetic, the Adam optimizer and the finite-difference oracle.

mod adam;
pub mod batch;
mod gradcheck;
mod matrix;
mod scalar;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{finite_difference_gradient, max_relative_error};
pub use matrix::{hadamard, matmul_add, sine_activation, Matrix};
pub use scalar::{gemm, Scalar, View};

//! Tailed MLPs, their baselines, and hand-derived forward/backward passes.
//!
//! Hidden layers compute `h_i = sin(omega0 (W_i h_{i-1} + b_i))` with SIREN
//! initialisation. A head on layer `i` produces `t_i`; accumulating variants
//! report `y_i = y_{i-1} + t_i`.

mod backward;
mod config;
mod forward;
mod params;
mod quadratic;

pub use backward::{backward, backward_into, BackwardWorkspace};
pub use config::{Architecture, ModelConfig, TailKind};
pub use forward::{evaluate, forward, forward_into, ForwardTrace, LayerTrace, TailOutputs};
pub use params::{Affine, AffineSlots, LayerSlots, ModelParams, ParamLayout};
pub use quadratic::{tail_quadratic_oracle, QuadraticForm};

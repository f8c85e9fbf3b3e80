//! Multi-head objectives, learning-rate schedules, the optimisation loop and
//! frozen-trunk head probing.

mod loss;
mod probe;
mod schedule;
mod trainer;

pub use loss::{head_loss, total_loss, LossEval, LossKind, LossWeights};
pub use probe::{probe_retrain_heads, ProbeHead};
pub use schedule::LrSchedule;
pub use trainer::{train, train_from, HistoryRecord, Sampler, TrainConfig, TrainHistory};

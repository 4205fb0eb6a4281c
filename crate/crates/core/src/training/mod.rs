//! Smooth-L1 objective, Adam training loop, overfit probe and gradient checks.

mod gradcheck;
mod loss;
mod trainer;

pub use gradcheck::{gradient_check, Differentiable, GradCheckOptions, GradCheckReport, NetworkObjective, Objective, ToyNetwork};
pub use loss::{batch_loss, batch_targets, branch_pattern, smooth_l1, smooth_l1_planes, total_loss, LossBreakdown};
pub use trainer::{
    overfit_probe, prepare_batch, train, EpochMetrics, ProbeConfig, ProbeReport, TrainConfig, TrainSummary, Trainer,
    METRICS_HEADER,
};

//! Trainers for the full-weight, residual and DMP-parameter networks, the
//! ridge baseline, and grouped evaluation.

mod config;
mod eval;
mod fit;
mod model;

pub use config::{DataSplit, MeanScope, NetConfig, TrainConfig, RTP_EPOCHS, WPP_EPOCHS};
pub use eval::{evaluate, sample_trajectories, Evaluation, SampleEval};
pub use fit::{
    ddmp_targets, ground_truth_weights, train_ddmp, train_deep_mp, train_residual_deep_mp, train_ridge,
    EpochRecord, StopReason, TrainReport,
};
pub use model::{GroupMeans, Method, Model, OutputHead, Regressor, Standardizer, TargetSpace};

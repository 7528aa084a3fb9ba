//! The imitation benchmark over the meta-prior condition grid and the
//! two-agent interaction loop, with attractor classification and report files.

mod classify;
mod grid;
mod imitation;
mod rri;

use std::path::PathBuf;

use thiserror::Error;

pub use classify::{
    classify_dynamics, pooled_autocorrelation, read_trajectory_csv, summarize_rri,
    ClassifierConfig, DynamicsLabel, LabelCounts, RriSummary, SummaryRow,
};
pub use grid::{
    train_condition, train_condition_with_curve, train_grid, Condition, ConditionGrid, ModelKey,
};
pub use imitation::{
    imitate, imitation_score, pem_reconstruction, run_imitation_benchmark, test_gestures,
    DataLength, ImitationResult, ImitationRun, ImitationSetup, ImitationTable, PemMode,
};
pub use rri::{run_rri, run_trial, AgentRun, AgentSetup, RriConfig, RriTrial};

use crate::inference::InferenceError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("no trained model for condition {condition}, seed {seed}")]
    MissingCheckpoint { condition: usize, seed: u64 },
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("trajectory has {got} steps, classifier window needs {need}")]
    TooShort { need: usize, got: usize },
    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

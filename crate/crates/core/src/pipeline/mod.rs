//! The end-to-end experiment pipeline and the resampler x activation sweep.
//!
//! One run executes the full protocol: load or generate a cohort, pivot and
//! clean it, split 80/20 into train+/validation and the training portion
//! 80/20 again into train/test, resample the training split only, z-score
//! the configured features with statistics from the augmented training set,
//! train the CNN with early stopping, then evaluate the best checkpoint on
//! both held-out splits and write every artifact to the output directory.

mod config;
mod run;
mod sweep;

pub use config::{
    DataConfig, DataSource, ExperimentConfig, ResamplerConfig, SplitConfig, TableFormat,
    TrainSettings, MISSINGNESS_THRESHOLD,
};
pub use run::{
    clean_waves, evaluate, prepare_waves, run_pipeline, run_pipeline_with_seeds, PipelineAudit,
    PrepareSummary, RunOutput,
};
pub use sweep::{run_sweep, standard_grid, CellOutcome, SweepCell, SweepSummary};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Configuration problems; the CLI maps these to exit code 2.
    #[error("invalid config: {0}")]
    Config(String),
    /// A pipeline stage failed; the CLI maps these to exit code 1.
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
}

impl PipelineError {
    pub fn stage(stage: &'static str, err: impl std::fmt::Display) -> Self {
        PipelineError::Stage { stage, message: err.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Stage { .. } => 1,
        }
    }
}

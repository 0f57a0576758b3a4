//! Longitudinal data in long and short (wide) format, plus the preparation
//! rules the classifier depends on: pivoting, missingness filtering,
//! adjacent-wave imputation, stratified splitting and z-normalization.

mod long;
mod normalize;
mod split;
mod wave;

pub use long::{LongRecord, LongTable};
pub use normalize::{zscore_normalize, ColumnStats, NormStats};
pub use split::{stratified_split, SplitResult};
pub use wave::WaveTable;

use crate::matrix::MatrixError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("duplicate record for participant {pid}, wave {wave}")]
    DuplicateRecord { pid: String, wave: usize },
    #[error("record for participant {pid}, wave {wave} has {got} values, expected {expected}")]
    FeatureCountMismatch { pid: String, wave: usize, got: usize, expected: usize },
    #[error("wave must be >= 1 (participant {pid})")]
    ZeroWave { pid: String },
    #[error("participant {pid} has no target label")]
    MissingTarget { pid: String },
    #[error("adjacent-wave imputation is defined for 5 waves, table has {got}")]
    UnsupportedWaveCount { got: usize },
    #[error("class {label} has no members, cannot stratify")]
    EmptyClass { label: u8 },
    #[error("train fraction must be in (0, 1), got {got}")]
    BadFraction { got: f64 },
    #[error("missingness threshold must be in [0, 1], got {got}")]
    BadThreshold { got: f64 },
    #[error("reference wave {wave} out of range 1..={waves}")]
    WaveOutOfRange { wave: usize, waves: usize },
    #[error("table has no target labels")]
    NoTarget,
    #[error("column index {col} out of range for {cols} columns")]
    ColumnOutOfRange { col: usize, cols: usize },
    #[error("participant {pid} still has a missing value for {feature} wave {wave}")]
    MissingValue { pid: String, feature: String, wave: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

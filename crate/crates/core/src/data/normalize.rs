//! Column z-normalization with train-only statistics.

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::matrix::LabeledMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub column: usize,
    pub mean: f64,
    /// Population standard deviation (divides by n).
    pub std: f64,
    /// Set when the column was constant; such columns are mapped to 0.
    pub constant: bool,
}

/// The affine transform fitted on a training matrix, replayable on any
/// other matrix with the same column layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub columns: Vec<ColumnStats>,
}

impl NormStats {
    /// Fit mean/std for the selected columns on `train` only.
    pub fn fit(train: &LabeledMatrix, columns: &[usize]) -> Result<Self, DataError> {
        let n = train.n_rows() as f64;
        let mut stats = Vec::with_capacity(columns.len());
        for &col in columns {
            if col >= train.n_cols() {
                return Err(DataError::ColumnOutOfRange { col, cols: train.n_cols() });
            }
            let mean = train.column(col).sum::<f64>() / n;
            let var = train.column(col).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            stats.push(ColumnStats { column: col, mean, std, constant: std == 0.0 });
        }
        Ok(Self { columns: stats })
    }

    /// Apply the recorded transform: (x - mean) / std, constant columns to 0.
    pub fn apply(&self, matrix: &LabeledMatrix) -> Result<LabeledMatrix, DataError> {
        let mut out = matrix.clone();
        for stat in &self.columns {
            if stat.column >= out.n_cols() {
                return Err(DataError::ColumnOutOfRange { col: stat.column, cols: out.n_cols() });
            }
            for value in out.column_mut(stat.column) {
                *value = if stat.constant { 0.0 } else { (*value - stat.mean) / stat.std };
            }
        }
        Ok(out)
    }

    pub fn has_constant_columns(&self) -> bool {
        self.columns.iter().any(|s| s.constant)
    }
}

/// Z-score the selected columns of `train` (statistics from `train` alone)
/// and apply the same transform to every matrix in `others`. Meant to run
/// after resampling, so the statistics reflect the augmented training set.
pub fn zscore_normalize(
    train: &LabeledMatrix,
    columns: &[usize],
    others: &[&LabeledMatrix],
) -> Result<(LabeledMatrix, Vec<LabeledMatrix>, NormStats), DataError> {
    let stats = NormStats::fit(train, columns)?;
    let train_out = stats.apply(train)?;
    let others_out = others
        .iter()
        .map(|m| stats.apply(m))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((train_out, others_out, stats))
}

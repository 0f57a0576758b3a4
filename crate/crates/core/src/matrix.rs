//! Flat numeric design matrix with binary labels.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("data length {len} does not match {rows} rows x {cols} cols")]
    ShapeMismatch { len: usize, rows: usize, cols: usize },
    #[error("label vector length {labels} does not match row count {rows}")]
    LabelLengthMismatch { labels: usize, rows: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("label at row {row} is {value}, expected 0 or 1")]
    BadLabel { row: usize, value: u8 },
}

/// A dense n x d feature matrix plus a binary label per row.
///
/// Label 1 is the event/minority class (death), label 0 the majority class
/// (survival). The resamplers rely on that convention rather than on row
/// counts, so it stays well defined even after the classes are balanced.
/// Values must be finite; missing data has to be resolved before a table
/// is lowered into this type.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    cols: usize,
    x: Vec<f64>,
    y: Vec<u8>,
}

impl LabeledMatrix {
    pub fn new(x: Vec<f64>, y: Vec<u8>, cols: usize) -> Result<Self, MatrixError> {
        if cols == 0 || y.is_empty() {
            return Err(MatrixError::Empty);
        }
        if x.len() != y.len() * cols {
            return Err(MatrixError::ShapeMismatch { len: x.len(), rows: y.len(), cols });
        }
        for (i, value) in x.iter().enumerate() {
            if !value.is_finite() {
                return Err(MatrixError::NonFinite { row: i / cols, col: i % cols });
            }
        }
        for (row, &label) in y.iter().enumerate() {
            if label > 1 {
                return Err(MatrixError::BadLabel { row, value: label });
            }
        }
        Ok(Self { cols, x, y })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.cols..(i + 1) * self.cols]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.y[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn labels(&self) -> &[u8] {
        &self.y
    }

    /// (count of label 0, count of label 1)
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.y.iter().filter(|&&l| l == 1).count();
        (self.y.len() - ones, ones)
    }

    /// Row indices carrying the given label, in ascending order.
    pub fn indices_of(&self, label: u8) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.y[i] == label).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut x = Vec::with_capacity(indices.len() * self.cols);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Self { cols: self.cols, x, y }
    }

    /// Rows whose indices are not listed in `removed` (sorted ascending),
    /// keeping the original order.
    pub fn drop_rows(&self, removed: &[usize]) -> Self {
        debug_assert!(removed.windows(2).all(|w| w[0] < w[1]), "removed must be sorted");
        let mut next = removed.iter().peekable();
        let keep: Vec<usize> = (0..self.n_rows())
            .filter(|i| {
                if next.peek() == Some(&i) {
                    next.next();
                    false
                } else {
                    true
                }
            })
            .collect();
        self.select_rows(&keep)
    }

    pub(crate) fn push_row(&mut self, row: &[f64], label: u8) {
        debug_assert_eq!(row.len(), self.cols);
        self.x.extend_from_slice(row);
        self.y.push(label);
    }

    pub(crate) fn column_mut(&mut self, col: usize) -> impl Iterator<Item = &mut f64> {
        self.x.iter_mut().skip(col).step_by(self.cols)
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        self.x.iter().skip(col).step_by(self.cols).copied()
    }
}

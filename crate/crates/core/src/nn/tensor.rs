//! Batched sequence tensor in (batch, length, channels) row-major order.

use crate::matrix::LabeledMatrix;
use crate::nn::NnError;

/// A dense (n, L, C) array. Row-major means the C channel values of one
/// position are contiguous, which is what the convolution inner loops want.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    n: usize,
    len: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(n: usize, len: usize, channels: usize, data: Vec<f64>) -> Result<Self, NnError> {
        if data.len() != n * len * channels {
            return Err(NnError::Shape {
                layer: "tensor".into(),
                details: format!(
                    "data length {} does not match shape ({n}, {len}, {channels})",
                    data.len()
                ),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(NnError::NonFinite { context: "tensor input".into() });
        }
        Ok(Self { n, len, channels, data })
    }

    pub(super) fn zeros(n: usize, len: usize, channels: usize) -> Self {
        Self { n, len, channels, data: vec![0.0; n * len * channels] }
    }

    /// Skips the finite check; for internal buffers whose values were just
    /// computed from finite inputs.
    pub(super) fn from_raw(n: usize, len: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * len * channels);
        Self { n, len, channels, data }
    }

    /// Lifts matrix rows into a single-channel batch, one sequence per row.
    pub fn from_rows(matrix: &LabeledMatrix, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * matrix.n_cols());
        for &r in rows {
            data.extend_from_slice(matrix.row(r));
        }
        Self { n: rows.len(), len: matrix.n_cols(), channels: 1, data }
    }

    pub fn batch(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(super) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(super) fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, n: usize, p: usize, c: usize) -> usize {
        (n * self.len + p) * self.channels + c
    }

    #[inline]
    pub fn at(&self, n: usize, p: usize, c: usize) -> f64 {
        self.data[self.index(n, p, c)]
    }

    /// The contiguous (length x channels) block for one batch element.
    #[inline]
    pub(super) fn sample(&self, n: usize) -> &[f64] {
        let stride = self.len * self.channels;
        &self.data[n * stride..(n + 1) * stride]
    }
}

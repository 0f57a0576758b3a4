//! Hybrid resamplers: SMOTE followed by a cleaning pass.
//!
//! The cleaner runs on the augmented matrix, so its removed-row indices in
//! the combined report refer to rows of the oversampled data (originals
//! first, synthetics appended).

use crate::matrix::LabeledMatrix;
use crate::resample::oversample::smote;
use crate::resample::undersample::{edited_nearest_neighbours, tomek_links, TomekPolicy};
use crate::resample::{ResampleError, ResampleReport};

/// SMOTE to parity, then an ENN sweep over the balanced data.
pub fn smote_enn(
    data: &LabeledMatrix,
    k_smote: usize,
    k_enn: usize,
    seed: u64,
) -> Result<(LabeledMatrix, ResampleReport), ResampleError> {
    let (augmented, over) = smote(data, k_smote, seed)?;
    let (cleaned, clean) = edited_nearest_neighbours(&augmented, k_enn)?;
    Ok((cleaned, ResampleReport::hybrid("smote_enn", over, clean)))
}

/// SMOTE to parity, then Tomek-link removal over the balanced data.
pub fn smote_tomek(
    data: &LabeledMatrix,
    k_smote: usize,
    policy: TomekPolicy,
    seed: u64,
) -> Result<(LabeledMatrix, ResampleReport), ResampleError> {
    let (augmented, over) = smote(data, k_smote, seed)?;
    let (cleaned, clean) = tomek_links(&augmented, policy)?;
    Ok((cleaned, ResampleReport::hybrid("smote_tomek", over, clean)))
}

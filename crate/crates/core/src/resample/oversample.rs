//! Oversamplers: random duplication, SMOTE interpolation and the
//! density-adaptive ADASYN variant.
//!
//! All three grow class 1 (the event class, minority by convention) until it
//! matches class 0 and leave every original row untouched. Synthetic rows are
//! appended after the originals so callers can recover them by range.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::LabeledMatrix;
use crate::resample::neighbors::NeighborModel;
use crate::resample::{ClassCounts, ResampleError, ResampleReport};

/// Duplicates uniformly drawn minority rows until the classes balance.
pub fn random_oversample(
    data: &LabeledMatrix,
    seed: u64,
) -> Result<(LabeledMatrix, ResampleReport), ResampleError> {
    let before = ClassCounts::of(data);
    before.require_both()?;
    let minority: Vec<usize> = data.indices_of(1);
    let needed = before.class0.saturating_sub(before.class1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = data.clone();
    for _ in 0..needed {
        let pick = minority[rng.random_range(0..minority.len())];
        out.push_row(data.row(pick), 1);
    }
    let report = ResampleReport::oversample("ros", before, &out, data.n_rows(), seed);
    Ok((out, report))
}

/// SMOTE: each synthetic row lies on the segment between a random minority
/// row and one of its k nearest minority neighbours.
///
/// `k` is clamped to `m - 1` when the minority class has only m rows. Needs
/// at least two minority rows, otherwise there is no neighbour to
/// interpolate towards.
pub fn smote(
    data: &LabeledMatrix,
    k: usize,
    seed: u64,
) -> Result<(LabeledMatrix, ResampleReport), ResampleError> {
    if k == 0 {
        return Err(ResampleError::BadParam("smote requires k >= 1".into()));
    }
    let before = ClassCounts::of(data);
    before.require_both()?;
    if before.class1 < 2 {
        return Err(ResampleError::TooFewMinority { count: before.class1 });
    }
    let minority = data.indices_of(1);
    let k_eff = k.min(minority.len() - 1);
    let neighbor_lists = minority_neighbor_lists(data, &minority, k_eff);
    let needed = before.class0.saturating_sub(before.class1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = data.clone();
    for _ in 0..needed {
        let base = rng.random_range(0..minority.len());
        let pick = neighbor_lists[base][rng.random_range(0..k_eff)];
        let row = interpolate(data, minority[base], minority[pick], rng.random());
        out.push_row(&row, 1);
    }
    let report = ResampleReport::oversample("smote", before, &out, data.n_rows(), seed);
    Ok((out, report))
}

/// ADASYN: like SMOTE, but the number of synthetics per minority row is
/// proportional to how many of its k nearest neighbours in the *full*
/// dataset belong to the majority class, so generation focuses on rows near
/// the class boundary. `beta` in (0, 1] scales the total amount generated;
/// 1 aims for full balance (up to per-row rounding).
pub fn adasyn(
    data: &LabeledMatrix,
    k: usize,
    beta: f64,
    seed: u64,
) -> Result<(LabeledMatrix, ResampleReport), ResampleError> {
    if k == 0 {
        return Err(ResampleError::BadParam("adasyn requires k >= 1".into()));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(ResampleError::BadParam(format!(
            "adasyn beta must be in (0, 1], got {beta}"
        )));
    }
    let before = ClassCounts::of(data);
    before.require_both()?;
    if before.class1 < 2 {
        return Err(ResampleError::TooFewMinority { count: before.class1 });
    }
    let minority = data.indices_of(1);

    // Hardness ratio per minority row: majority share of its k nearest
    // neighbours across both classes.
    let full = NeighborModel::new(data.values(), data.n_cols());
    let k_full = k.min(data.n_rows() - 1);
    let mut ratios: Vec<f64> = Vec::with_capacity(minority.len());
    for &i in &minority {
        let nn = full.k_nearest(data.row(i), k_full, Some(i));
        let majority_count = nn.iter().filter(|&&j| data.label(j) == 0).count();
        ratios.push(majority_count as f64 / k_full as f64);
    }
    let total: f64 = ratios.iter().sum();
    if total > 0.0 {
        for r in &mut ratios {
            *r /= total;
        }
    } else {
        // All minority rows sit in pure minority neighbourhoods; fall back
        // to uniform weights rather than generating nothing.
        ratios.fill(1.0 / minority.len() as f64);
    }
    let g_total = beta * before.class0.saturating_sub(before.class1) as f64;
    let per_row: Vec<usize> = ratios.iter().map(|r| (r * g_total).round() as usize).collect();

    let k_eff = k.min(minority.len() - 1);
    let neighbor_lists = minority_neighbor_lists(data, &minority, k_eff);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = data.clone();
    for (base, &count) in per_row.iter().enumerate() {
        for _ in 0..count {
            let pick = neighbor_lists[base][rng.random_range(0..k_eff)];
            let row = interpolate(data, minority[base], minority[pick], rng.random());
            out.push_row(&row, 1);
        }
    }
    let report = ResampleReport::oversample("adasyn", before, &out, data.n_rows(), seed);
    Ok((out, report))
}

/// k nearest minority neighbours (as positions within `minority`) for each
/// minority row, computed once up front.
fn minority_neighbor_lists(
    data: &LabeledMatrix,
    minority: &[usize],
    k_eff: usize,
) -> Vec<Vec<usize>> {
    let cols = data.n_cols();
    let mut packed = Vec::with_capacity(minority.len() * cols);
    for &i in minority {
        packed.extend_from_slice(data.row(i));
    }
    let model = NeighborModel::new(&packed, cols);
    (0..minority.len())
        .map(|m| model.k_nearest(model.point(m), k_eff, Some(m)))
        .collect()
}

fn interpolate(data: &LabeledMatrix, base: usize, neighbor: usize, lambda: f64) -> Vec<f64> {
    data.row(base)
        .iter()
        .zip(data.row(neighbor))
        .map(|(&x, &n)| x + lambda * (n - x))
        .collect()
}

//! Cleaning undersamplers: edited nearest neighbours and Tomek links.
//!
//! Both only ever discard class-0 rows (the non-event majority), so the rare
//! event class is never shrunk by cleaning. The default Tomek policy removes
//! the majority member of each link; `TomekPolicy::Both` drops both members,
//! which some pipelines prefer when the minority side of a link is likely
//! noise as well.

use serde::{Deserialize, Serialize};

use crate::matrix::LabeledMatrix;
use crate::resample::neighbors::NeighborModel;
use crate::resample::{ClassCounts, ResampleError, ResampleReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TomekPolicy {
    /// Remove only the class-0 member of each link.
    #[default]
    MajorityOnly,
    /// Remove both members of each link.
    Both,
}

/// Edited nearest neighbours with a k-neighbour majority vote.
///
/// A class-0 row is removed when a strict majority of its k nearest
/// neighbours (across both classes, self excluded) carry label 1. Vote ties
/// keep the row. All votes are taken against the original data in a single
/// pass, so removals do not cascade.
pub fn edited_nearest_neighbours(
    data: &LabeledMatrix,
    k: usize,
) -> Result<(LabeledMatrix, ResampleReport), ResampleError> {
    if k == 0 {
        return Err(ResampleError::BadParam("enn requires k >= 1".into()));
    }
    if data.n_rows() <= k {
        return Err(ResampleError::BadParam(format!(
            "enn requires more than k = {k} rows, got {}",
            data.n_rows()
        )));
    }
    let before = ClassCounts::of(data);
    let model = NeighborModel::new(data.values(), data.n_cols());
    let mut removed = Vec::new();
    for i in 0..data.n_rows() {
        if data.label(i) != 0 {
            continue;
        }
        let nn = model.k_nearest(data.row(i), k, Some(i));
        let disagree = nn.iter().filter(|&&j| data.label(j) == 1).count();
        if 2 * disagree > k {
            removed.push(i);
        }
    }
    let out = data.drop_rows(&removed);
    let report = ResampleReport::clean("enn", before, &out, removed);
    Ok((out, report))
}

/// Tomek links: pairs of opposite-class rows that are mutual nearest
/// neighbours. An empty link set is fine and leaves the data unchanged.
pub fn tomek_links(
    data: &LabeledMatrix,
    policy: TomekPolicy,
) -> Result<(LabeledMatrix, ResampleReport), ResampleError> {
    let before = ClassCounts::of(data);
    before.require_both()?;
    let model = NeighborModel::new(data.values(), data.n_cols());
    let nn: Vec<usize> = (0..data.n_rows())
        .map(|i| model.nearest(data.row(i), Some(i)).expect("two classes imply n >= 2"))
        .collect();

    let mut removed = Vec::new();
    for i in 0..data.n_rows() {
        let j = nn[i];
        if i < j && nn[j] == i && data.label(i) != data.label(j) {
            match policy {
                TomekPolicy::MajorityOnly => {
                    removed.push(if data.label(i) == 0 { i } else { j });
                }
                TomekPolicy::Both => {
                    removed.push(i);
                    removed.push(j);
                }
            }
        }
    }
    removed.sort_unstable();
    let out = data.drop_rows(&removed);
    let report = ResampleReport::clean("tomek", before, &out, removed);
    Ok((out, report))
}

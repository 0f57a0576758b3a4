//! Resamplers for class-imbalanced training data.
//!
//! Oversamplers grow the event class (label 1) until it matches the
//! non-event class; cleaners remove ambiguous non-event rows near the class
//! boundary; the hybrids chain one of each. Everything here operates on a
//! [`LabeledMatrix`] and reports what it did in a [`ResampleReport`] so runs
//! can be audited after the fact.

mod hybrid;
mod neighbors;
mod oversample;
mod undersample;

pub use hybrid::{smote_enn, smote_tomek};
pub use neighbors::{squared_distance, NeighborModel};
pub use oversample::{adasyn, random_oversample, smote};
pub use undersample::{edited_nearest_neighbours, tomek_links, TomekPolicy};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::LabeledMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResampleError {
    #[error("resampling needs both classes present, got {class0} vs {class1}")]
    SingleClass { class0: usize, class1: usize },
    #[error("interpolation needs at least 2 minority rows, got {count}")]
    TooFewMinority { count: usize },
    #[error("{0}")]
    BadParam(String),
    #[error("unknown resampler {0:?}")]
    UnknownMethod(String),
}

/// Rows per class. Class 1 is the event class and stays the minority (or at
/// most reaches parity) throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub class0: usize,
    pub class1: usize,
}

impl ClassCounts {
    pub fn of(data: &LabeledMatrix) -> Self {
        let (class0, class1) = data.class_counts();
        Self { class0, class1 }
    }

    pub fn total(&self) -> usize {
        self.class0 + self.class1
    }

    fn require_both(&self) -> Result<(), ResampleError> {
        if self.class0 == 0 || self.class1 == 0 {
            Err(ResampleError::SingleClass { class0: self.class0, class1: self.class1 })
        } else {
            Ok(())
        }
    }
}

/// What a resampling step did: counts before and after, where the synthetic
/// rows sit, and which row indices a cleaning stage dropped. For hybrids the
/// removed indices refer to the oversampled (augmented) matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResampleReport {
    pub method: String,
    pub before: ClassCounts,
    pub after_oversample: Option<ClassCounts>,
    pub after: ClassCounts,
    /// Half-open row range of appended synthetic rows, if any were made.
    pub synthetic_rows: Option<(usize, usize)>,
    pub removed_rows: Vec<usize>,
    pub seed: Option<u64>,
}

impl ResampleReport {
    fn oversample(
        method: &str,
        before: ClassCounts,
        out: &LabeledMatrix,
        original_rows: usize,
        seed: u64,
    ) -> Self {
        let after = ClassCounts::of(out);
        Self {
            method: method.to_owned(),
            before,
            after_oversample: Some(after),
            after,
            synthetic_rows: Some((original_rows, out.n_rows())),
            removed_rows: Vec::new(),
            seed: Some(seed),
        }
    }

    fn clean(method: &str, before: ClassCounts, out: &LabeledMatrix, removed: Vec<usize>) -> Self {
        Self {
            method: method.to_owned(),
            before,
            after_oversample: None,
            after: ClassCounts::of(out),
            synthetic_rows: None,
            removed_rows: removed,
            seed: None,
        }
    }

    fn hybrid(method: &str, over: ResampleReport, clean: ResampleReport) -> Self {
        Self {
            method: method.to_owned(),
            before: over.before,
            after_oversample: Some(over.after),
            after: clean.after,
            synthetic_rows: over.synthetic_rows,
            removed_rows: clean.removed_rows,
            seed: over.seed,
        }
    }
}

/// Knobs shared by the resamplers; each method reads only the ones it uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResampleParams {
    /// Neighbour count for SMOTE and ADASYN generation.
    pub k: usize,
    /// Neighbour count for the ENN vote.
    pub k_enn: usize,
    /// ADASYN balance level in (0, 1].
    pub beta: f64,
    pub tomek_policy: TomekPolicy,
}

impl Default for ResampleParams {
    fn default() -> Self {
        Self { k: 5, k_enn: 3, beta: 1.0, tomek_policy: TomekPolicy::default() }
    }
}

/// Every resampler the toolkit knows, including the standalone cleaners.
/// The five methods compared in the experiment sweep are [`Method::SWEEP`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ros,
    Smote,
    Adasyn,
    Enn,
    Tomek,
    SmoteEnn,
    SmoteTomek,
}

impl Method {
    pub const SWEEP: [Method; 5] =
        [Method::Ros, Method::Smote, Method::Adasyn, Method::SmoteEnn, Method::SmoteTomek];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ros => "ros",
            Method::Smote => "smote",
            Method::Adasyn => "adasyn",
            Method::Enn => "enn",
            Method::Tomek => "tomek",
            Method::SmoteEnn => "smote_enn",
            Method::SmoteTomek => "smote_tomek",
        }
    }

    pub fn apply(
        self,
        data: &LabeledMatrix,
        params: &ResampleParams,
        seed: u64,
    ) -> Result<(LabeledMatrix, ResampleReport), ResampleError> {
        match self {
            Method::Ros => random_oversample(data, seed),
            Method::Smote => smote(data, params.k, seed),
            Method::Adasyn => adasyn(data, params.k, params.beta, seed),
            Method::Enn => edited_nearest_neighbours(data, params.k_enn),
            Method::Tomek => tomek_links(data, params.tomek_policy),
            Method::SmoteEnn => smote_enn(data, params.k, params.k_enn, seed),
            Method::SmoteTomek => smote_tomek(data, params.k, params.tomek_policy, seed),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ResampleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '+'], "_").as_str() {
            "ros" | "random_oversample" => Ok(Method::Ros),
            "smote" => Ok(Method::Smote),
            "adasyn" => Ok(Method::Adasyn),
            "enn" => Ok(Method::Enn),
            "tomek" | "tomek_links" => Ok(Method::Tomek),
            "smote_enn" => Ok(Method::SmoteEnn),
            "smote_tomek" => Ok(Method::SmoteTomek),
            _ => Err(ResampleError::UnknownMethod(s.to_owned())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for method in [
            Method::Ros,
            Method::Smote,
            Method::Adasyn,
            Method::Enn,
            Method::Tomek,
            Method::SmoteEnn,
            Method::SmoteTomek,
        ] {
            assert_eq!(method.name().parse::<Method>().unwrap(), method);
        }
        assert_eq!("SMOTE+ENN".parse::<Method>().unwrap(), Method::SmoteEnn);
        assert!("smoteenn".parse::<Method>().is_err());
    }

    #[test]
    fn apply_dispatches_every_sweep_method() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            x.extend([f64::from(i), 0.0]);
            y.push(0);
        }
        for i in 0..4 {
            x.extend([f64::from(i) * 0.5 + 30.0, 5.0]);
            y.push(1);
        }
        let data = LabeledMatrix::new(x, y, 2).unwrap();
        for method in Method::SWEEP {
            let (out, report) = method.apply(&data, &ResampleParams::default(), 1).unwrap();
            assert_eq!(report.method, method.name());
            assert!(out.n_rows() >= data.n_rows() - report.removed_rows.len());
            let (c0, c1) = out.class_counts();
            assert!(c1 >= 4, "{method}: minority shrank");
            assert!(c0 <= 20, "{method}: majority grew");
        }
    }
}

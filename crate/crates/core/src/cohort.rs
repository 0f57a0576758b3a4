//! Synthetic longitudinal cohort generation with a known mortality
//! mechanism.
//!
//! Real aging-study microdata is access restricted, so the toolkit ships a
//! generator that mimics the structure such studies share: biennial waves,
//! an age variable that advances two years per wave, sticky binary health
//! markers, accumulating chronic conditions and a rare death outcome driven
//! by age and disease burden. Because the generating mechanism is known and
//! saved alongside the data, end-to-end experiments can verify that a model
//! recovers real signal instead of memorizing noise.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{LongRecord, LongTable};

#[derive(Debug, Error)]
pub enum CohortError {
    #[error("invalid cohort config: {0}")]
    BadConfig(String),
    #[error("prevalence calibration failed: wanted {target} positives, best achievable {achieved}")]
    CalibrationFailed { target: usize, achieved: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("ground truth serialization: {0}")]
    Json(#[from] serde_json::Error),
}

/// Wave-1 prevalence of every binary feature.
const BINARY_BASE_RATE: f64 = 0.10;
/// Per-wave probability that a binary feature switches on.
const BINARY_ONSET_RATE: f64 = 0.05;
/// Years between waves.
const YEARS_PER_WAVE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortConfig {
    pub participants: usize,
    /// Total feature count, age included.
    pub features: usize,
    pub waves: usize,
    /// Target share of participants with label 1.
    pub prevalence: f64,
    /// Per-cell missingness rate for the binary features. Age is treated as
    /// an administrative variable and is never missing.
    pub missing_rate: f64,
    /// Uniform age range at wave 1.
    pub age_min: f64,
    pub age_max: f64,
    /// Stay-on probability for non-chronic binary markers: once 1, a marker
    /// remains 1 with this probability at each following wave.
    pub persistence: f64,
    /// How many features (after age) are chronic conditions: once present,
    /// present in every later wave, and counted into the mortality risk.
    pub chronic_features: usize,
    /// Logistic risk weight on standardized final-wave age.
    pub age_weight: f64,
    /// Logistic risk weight on standardized chronic burden at the final wave.
    pub chronic_weight: f64,
    pub seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            participants: 5314,
            features: 52,
            waves: 5,
            prevalence: 0.01,
            missing_rate: 0.01,
            age_min: 50.0,
            age_max: 90.0,
            persistence: 0.95,
            chronic_features: 10,
            age_weight: 1.0,
            chronic_weight: 2.0,
            seed: 0,
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<(), CohortError> {
        if self.participants == 0 {
            return Err(CohortError::BadConfig("participants must be >= 1".into()));
        }
        if self.features < 2 {
            return Err(CohortError::BadConfig("need age plus at least one binary feature".into()));
        }
        if self.waves == 0 {
            return Err(CohortError::BadConfig("waves must be >= 1".into()));
        }
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return Err(CohortError::BadConfig(format!(
                "prevalence must be in (0, 1), got {}",
                self.prevalence
            )));
        }
        if self.participants as f64 * self.prevalence < 2.0 {
            return Err(CohortError::BadConfig(format!(
                "n * prevalence must be >= 2 (got {} * {})",
                self.participants, self.prevalence
            )));
        }
        if !(0.0..=1.0).contains(&self.missing_rate) {
            return Err(CohortError::BadConfig(format!(
                "missing rate must be in [0, 1], got {}",
                self.missing_rate
            )));
        }
        if !(self.age_min.is_finite() && self.age_max.is_finite() && self.age_min < self.age_max) {
            return Err(CohortError::BadConfig(format!(
                "age range [{}, {}] is not a valid interval",
                self.age_min, self.age_max
            )));
        }
        if !(0.0..=1.0).contains(&self.persistence) {
            return Err(CohortError::BadConfig(format!(
                "persistence must be in [0, 1], got {}",
                self.persistence
            )));
        }
        if self.chronic_features + 1 > self.features {
            return Err(CohortError::BadConfig(format!(
                "{} chronic features do not fit into {} features alongside age",
                self.chronic_features, self.features
            )));
        }
        if !(self.age_weight.is_finite() && self.chronic_weight.is_finite()) {
            return Err(CohortError::BadConfig("risk weights must be finite".into()));
        }
        Ok(())
    }

    fn feature_names(&self) -> Vec<String> {
        let mut names = vec!["age".to_string()];
        for i in 1..=self.chronic_features {
            names.push(format!("chronic_{i:02}"));
        }
        for i in 1..=(self.features - 1 - self.chronic_features) {
            names.push(format!("marker_{i:02}"));
        }
        names
    }
}

/// The generating mechanism behind one cohort, kept for diagnostics: with it
/// a downstream experiment can compare learned rankings against the true
/// per-participant risk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub age_weight: f64,
    pub chronic_weight: f64,
    /// Calibrated logistic intercept.
    pub intercept: f64,
    pub target_prevalence: f64,
    pub realized_prevalence: f64,
    pub participants: Vec<ParticipantTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantTruth {
    pub pid: String,
    /// Latent risk score including the intercept; label = 1 was drawn with
    /// probability sigma(risk).
    pub risk: f64,
    pub label: u8,
}

impl GroundTruth {
    pub fn write_json(&self, path: &Path) -> Result<(), CohortError> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self, CohortError> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// Generates a long-format cohort plus its ground truth. Fully determined by
/// `config.seed`.
pub fn generate_cohort(config: &CohortConfig) -> Result<(LongTable, GroundTruth), CohortError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.participants;
    let n_binary = config.features - 1;
    let pid_width = n.to_string().len().max(4);

    let pids: Vec<String> = (1..=n).map(|i| format!("p{i:0pid_width$}")).collect();

    // Wave-1 ages, then per-participant binary trajectories in feature-major
    // order. Draw order is fixed so the whole table is seed-deterministic.
    let ages: Vec<f64> = (0..n).map(|_| rng.random_range(config.age_min..config.age_max)).collect();

    // trajectories[participant][feature][wave] for the binary features.
    let mut trajectories = vec![vec![vec![0u8; config.waves]; n_binary]; n];
    for person in trajectories.iter_mut() {
        for (f, states) in person.iter_mut().enumerate() {
            let chronic = f < config.chronic_features;
            let mut on = rng.random::<f64>() < BINARY_BASE_RATE;
            states[0] = u8::from(on);
            for state in states.iter_mut().skip(1) {
                on = if on {
                    chronic || rng.random::<f64>() < config.persistence
                } else {
                    rng.random::<f64>() < BINARY_ONSET_RATE
                };
                *state = u8::from(on);
            }
        }
    }

    // Latent risk from standardized final-wave age and chronic burden.
    let last = config.waves - 1;
    let final_ages: Vec<f64> =
        ages.iter().map(|a| a + YEARS_PER_WAVE * last as f64).collect();
    let burdens: Vec<f64> = trajectories
        .iter()
        .map(|person| {
            person[..config.chronic_features].iter().map(|s| f64::from(s[last])).sum::<f64>()
        })
        .collect();
    let z_age = standardize(&final_ages);
    let z_burden = standardize(&burdens);
    let scores: Vec<f64> = z_age
        .iter()
        .zip(&z_burden)
        .map(|(a, b)| config.age_weight * a + config.chronic_weight * b)
        .collect();

    // One uniform draw per participant; the intercept is then calibrated
    // against these fixed draws, so moving it never redraws anyone's fate.
    let draws: Vec<f64> =
        (0..n).map(|_| rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12)).collect();
    let target = (n as f64 * config.prevalence).round() as usize;
    let target = target.max(2);
    let intercept = calibrate_intercept(&scores, &draws, target)?;
    let labels: Vec<u8> = scores
        .iter()
        .zip(&draws)
        .map(|(s, u)| u8::from(sigmoid(intercept + s) > *u))
        .collect();
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let tolerance = (target as f64 * 0.2).ceil() as usize;
    if positives.abs_diff(target) > tolerance {
        return Err(CohortError::CalibrationFailed { target, achieved: positives });
    }

    // Assemble long records, injecting missingness into binary cells only.
    let mut records = Vec::with_capacity(n * config.waves);
    for (i, pid) in pids.iter().enumerate() {
        for w in 0..config.waves {
            let mut values: Vec<Option<f64>> = Vec::with_capacity(config.features);
            values.push(Some(ages[i] + YEARS_PER_WAVE * w as f64));
            for f in 0..n_binary {
                let missing = rng.random::<f64>() < config.missing_rate;
                values.push(if missing { None } else { Some(f64::from(trajectories[i][f][w])) });
            }
            records.push(LongRecord { pid: pid.clone(), wave: w + 1, values });
        }
    }
    let targets: BTreeMap<String, u8> =
        pids.iter().cloned().zip(labels.iter().copied()).collect();
    let table = LongTable::new(config.feature_names(), records, targets)
        .map_err(|e| CohortError::BadConfig(format!("internal table assembly: {e}")))?;

    let truth = GroundTruth {
        seed: config.seed,
        age_weight: config.age_weight,
        chronic_weight: config.chronic_weight,
        intercept,
        target_prevalence: config.prevalence,
        realized_prevalence: positives as f64 / n as f64,
        participants: pids
            .into_iter()
            .zip(scores)
            .zip(labels)
            .map(|((pid, s), label)| ParticipantTruth { pid, risk: intercept + s, label })
            .collect(),
    };
    Ok((table, truth))
}

fn standardize(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / std).collect()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Finds an intercept c so that exactly `target` participants satisfy
/// sigma(c + score_i) > draw_i. The count is a monotone step function of c,
/// so bisection between a count of 0 and a count of n lands on the target
/// (the draws are continuous, so ties have probability zero).
fn calibrate_intercept(scores: &[f64], draws: &[f64], target: usize) -> Result<f64, CohortError> {
    let n = scores.len();
    if target == 0 || target > n {
        return Err(CohortError::BadConfig(format!(
            "cannot calibrate {target} positives out of {n} participants"
        )));
    }
    let count = |c: f64| {
        scores.iter().zip(draws).filter(|&(s, u)| sigmoid(c + s) > *u).count()
    };
    let mut lo = -60.0;
    let mut hi = 60.0;
    while count(lo) >= target {
        lo *= 2.0;
    }
    while count(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..500 {
        let mid = 0.5 * (lo + hi);
        let c = count(mid);
        if c == target {
            return Ok(mid);
        }
        if c > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(CohortError::CalibrationFailed { target, achieved: count(0.5 * (lo + hi)) })
}

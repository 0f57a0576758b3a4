//! Experiment configuration: a single JSON document where every field has a
//! default and unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cohort::CohortConfig;
use crate::nn::{Activation, TrainConfig};
use crate::pipeline::PipelineError;
use crate::resample::{Method, ResampleParams, TomekPolicy};

/// Features whose wave-1 missingness is at or above this share are dropped
/// during preparation (the filter keeps features strictly below it).
pub const MISSINGNESS_THRESHOLD: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Generate a synthetic cohort from `cohort`.
    Generated,
    /// Read a CSV from `path`.
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    /// One row per participant and wave (`pid,wave,<features>[,y]`).
    #[default]
    Long,
    /// One row per participant (`pid,<feature>_w<k>...[,y]`).
    Wide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// Generator settings when `source` is `generated`. Its seed field is
    /// ignored by the pipeline, which derives the generator seed from the
    /// experiment seed.
    pub cohort: CohortConfig,
    /// Input file when `source` is `csv`.
    pub path: Option<PathBuf>,
    pub format: TableFormat,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Generated,
            cohort: CohortConfig::default(),
            path: None,
            format: TableFormat::Long,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// First split: train+ vs validation.
    pub train_fraction: f64,
    /// Second split, applied to train+: train vs test.
    pub inner_train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train_fraction: 0.8, inner_train_fraction: 0.8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResamplerConfig {
    pub name: Method,
    /// Neighbour count for SMOTE/ADASYN generation.
    pub k: usize,
    /// Neighbour count for the ENN vote.
    pub k_enn: usize,
    /// ADASYN balance level in (0, 1].
    pub beta: f64,
    pub tomek_policy: TomekPolicy,
}

impl Default for ResamplerConfig {
    fn default() -> Self {
        let p = ResampleParams::default();
        Self { name: Method::Ros, k: p.k, k_enn: p.k_enn, beta: p.beta, tomek_policy: p.tomek_policy }
    }
}

impl ResamplerConfig {
    pub fn params(&self) -> ResampleParams {
        ResampleParams {
            k: self.k,
            k_enn: self.k_enn,
            beta: self.beta,
            tomek_policy: self.tomek_policy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub lr: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let c = TrainConfig::default();
        Self { lr: c.lr, max_epochs: c.max_epochs, batch_size: c.batch_size, patience: c.patience }
    }
}

impl TrainSettings {
    pub fn to_train_config(self, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            max_epochs: self.max_epochs,
            batch_size: self.batch_size,
            patience: self.patience,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub split: SplitConfig,
    pub resampler: ResamplerConfig,
    pub activation: Activation,
    pub train: TrainSettings,
    /// Feature names to z-score (every wave column of each named feature).
    /// Names not present in the prepared table are ignored.
    pub normalize_features: Vec<String>,
    pub out_dir: PathBuf,
    /// Master seed; the generator, splits, resampler and trainer all derive
    /// their seeds from it.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            split: SplitConfig::default(),
            resampler: ResamplerConfig::default(),
            activation: Activation::Swish,
            train: TrainSettings::default(),
            normalize_features: vec!["age".to_string()],
            out_dir: PathBuf::from("runs/experiment"),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        for (name, f) in [
            ("split.train_fraction", self.split.train_fraction),
            ("split.inner_train_fraction", self.split.inner_train_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(PipelineError::Config(format!("{name} must be in (0, 1), got {f}")));
            }
        }
        match self.data.source {
            DataSource::Generated => {
                self.data.cohort.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
            }
            DataSource::Csv => {
                if self.data.path.is_none() {
                    return Err(PipelineError::Config(
                        "data.source is \"csv\" but data.path is not set".into(),
                    ));
                }
            }
        }
        if self.resampler.k == 0 || self.resampler.k_enn == 0 {
            return Err(PipelineError::Config("resampler.k and resampler.k_enn must be >= 1".into()));
        }
        if !(self.resampler.beta > 0.0 && self.resampler.beta <= 1.0) {
            return Err(PipelineError::Config(format!(
                "resampler.beta must be in (0, 1], got {}",
                self.resampler.beta
            )));
        }
        self.train
            .to_train_config(self.seed)
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self, PipelineError> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            PipelineError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_json_str(&text)
    }
}

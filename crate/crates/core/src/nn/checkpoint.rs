//! Model checkpoints: a versioned JSON record of topology, flat parameters,
//! seed and training history.
//!
//! JSON keeps the file self-describing and diffable; f64 values survive the
//! round-trip bit-exactly because the serializer emits shortest-recoverable
//! decimal forms.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::nn::model::{ModelSpec, ParamSet};
use crate::nn::train::History;
use crate::nn::NnError;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub spec: ModelSpec,
    pub params: Vec<f64>,
    pub seed: u64,
    pub history: History,
}

impl Checkpoint {
    pub fn new(spec: ModelSpec, params: &ParamSet, seed: u64, history: History) -> Self {
        Self { version: CHECKPOINT_VERSION, spec, params: params.values().to_vec(), seed, history }
    }

    pub fn params(&self) -> Result<ParamSet, NnError> {
        ParamSet::from_flat(&self.spec, self.params.clone())
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let file = File::create(path)?;
        serde_json::to_writer(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let file = File::open(path)?;
        let loaded: Checkpoint = serde_json::from_reader(BufReader::new(file))?;
        if loaded.version != CHECKPOINT_VERSION {
            return Err(NnError::CheckpointVersion {
                got: loaded.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        loaded.spec.validate()?;
        let _ = loaded.params()?;
        Ok(loaded)
    }
}

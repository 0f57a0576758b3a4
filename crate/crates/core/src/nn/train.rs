//! The training loop: seeded mini-batches, Adam, early stopping on
//! validation loss, best-epoch checkpointing.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::LabeledMatrix;
use crate::metrics::{accuracy, auc_from_scores};
use crate::nn::adam::{adam_step, AdamConfig, AdamState};
use crate::nn::loss::bce_loss;
use crate::nn::model::{backward, forward, predict_proba, ModelSpec, ParamSet};
use crate::nn::tensor::Tensor;
use crate::nn::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Epochs without strict validation-loss improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr: 0.01, max_epochs: 100, batch_size: 32, patience: 10, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.patience == 0 {
            return Err(NnError::BadConfig("patience must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(NnError::BadConfig("batch size must be >= 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(NnError::BadConfig("max epochs must be >= 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(NnError::BadConfig(format!("learning rate must be > 0, got {}", self.lr)));
        }
        Ok(())
    }
}

/// One epoch's metrics. Train-side numbers are computed from the mini-batch
/// outputs gathered during the epoch (the parameters move between batches);
/// validation numbers come from a full pass with the end-of-epoch
/// parameters. AUC is None when a split degenerates to a single class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub train_auc: Option<f64>,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub val_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

impl History {
    pub fn best(&self) -> &EpochStats {
        &self.epochs[self.best_epoch - 1]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,train_loss,train_accuracy,train_auc,val_loss,val_accuracy,val_auc")?;
        for e in &self.epochs {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                e.epoch,
                e.train_loss,
                e.train_accuracy,
                e.train_auc.map(|v| v.to_string()).unwrap_or_default(),
                e.val_loss,
                e.val_accuracy,
                e.val_auc.map(|v| v.to_string()).unwrap_or_default(),
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best_params: ParamSet,
    pub history: History,
    pub stopped_early: bool,
}

/// The stopping rule alone, separated so it can be driven with a scripted
/// loss trace: stop after `patience` consecutive epochs without a strict
/// improvement over the best validation loss seen so far.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best_loss: f64,
    best_epoch: usize,
    bad_epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self { patience, best_loss: f64::INFINITY, best_epoch: 0, bad_epochs: 0 }
    }

    /// Feed one epoch's validation loss. Returns (improved, stop_now).
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> (bool, bool) {
        if val_loss < self.best_loss {
            self.best_loss = val_loss;
            self.best_epoch = epoch;
            self.bad_epochs = 0;
            (true, false)
        } else {
            self.bad_epochs += 1;
            (false, self.bad_epochs >= self.patience)
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best_loss
    }
}

pub fn train(
    spec: &ModelSpec,
    train_set: &LabeledMatrix,
    val_set: &LabeledMatrix,
    config: &TrainConfig,
) -> Result<TrainOutcome, NnError> {
    config.validate()?;
    spec.validate()?;
    for (name, set) in [("train", train_set), ("validation", val_set)] {
        if set.n_cols() != spec.input_len {
            return Err(NnError::Shape {
                layer: format!("{name} set"),
                details: format!(
                    "feature dimension {} does not match model input length {}",
                    set.n_cols(),
                    spec.input_len
                ),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ParamSet::init_glorot_with(spec, &mut rng)?;
    let mut adam = AdamState::new(params.len(), AdamConfig { lr: config.lr, ..AdamConfig::default() });
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best_params = params.clone();
    let mut history = Vec::new();
    let mut stopped_early = false;

    let val_x = Tensor::from_rows(val_set, &(0..val_set.n_rows()).collect::<Vec<_>>());
    let mut order: Vec<usize> = (0..train_set.n_rows()).collect();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        // Per-sample outputs observed during the epoch, for train metrics.
        let mut seen_probs = Vec::with_capacity(order.len());
        let mut seen_labels = Vec::with_capacity(order.len());
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let x = Tensor::from_rows(train_set, batch);
            let y: Vec<u8> = batch.iter().map(|&i| train_set.label(i)).collect();
            let (probs, cache) = forward(spec, &params, &x)?;
            let batch_loss = bce_loss(&probs, &y)?;
            if !batch_loss.is_finite() {
                return Err(NnError::NonFiniteTrainLoss { epoch, batch: batch_idx });
            }
            seen_probs.extend_from_slice(&probs);
            seen_labels.extend_from_slice(&y);
            let grads = backward(spec, &params, &cache, &y)?;
            adam_step(params.values_mut(), &grads, &mut adam)?;
        }

        let train_loss = bce_loss(&seen_probs, &seen_labels)?;
        let train_accuracy = accuracy(&seen_probs, &seen_labels, 0.5)
            .map_err(|_| NnError::BadConfig("empty training epoch".into()))?;
        let train_auc = auc_from_scores(&seen_probs, &seen_labels).ok();

        let val_probs = predict_proba(spec, &params, &val_x)?;
        let val_loss = bce_loss(&val_probs, val_set.labels())?;
        if !val_loss.is_finite() {
            return Err(NnError::NonFiniteValLoss { epoch });
        }
        let val_accuracy = accuracy(&val_probs, val_set.labels(), 0.5)
            .map_err(|_| NnError::BadConfig("empty validation set".into()))?;
        let val_auc = auc_from_scores(&val_probs, val_set.labels()).ok();

        history.push(EpochStats {
            epoch,
            train_loss,
            train_accuracy,
            train_auc,
            val_loss,
            val_accuracy,
            val_auc,
        });

        let (improved, stop) = stopper.observe(epoch, val_loss);
        if improved {
            best_params = params.clone();
        }
        if stop {
            stopped_early = true;
            break;
        }
    }

    Ok(TrainOutcome {
        best_params,
        history: History { epochs: history, best_epoch: stopper.best_epoch() },
        stopped_early,
    })
}

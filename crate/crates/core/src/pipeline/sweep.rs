//! Resampler-by-activation grid runs over a shared prepared dataset.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::metrics::EvalReport;
use crate::nn::Activation;
use crate::pipeline::config::ExperimentConfig;
use crate::pipeline::run::{prepare_data, run_prepared, write_atomic, PreparedData};
use crate::pipeline::PipelineError;
use crate::resample::Method;

/// One grid position: which resampler and activation ran, under which seed,
/// and where its artifacts went.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub index: usize,
    pub resampler: Method,
    pub activation: Activation,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// A finished (or failed) cell: its metrics on both holdout splits, or the
/// error that stopped it.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub cell: SweepCell,
    pub val: Option<EvalReport>,
    pub test: Option<EvalReport>,
    pub error: Option<String>,
}

/// All cell outcomes of one sweep plus where the summary table was written.
#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub cells: Vec<CellOutcome>,
    pub csv_path: PathBuf,
}

impl SweepSummary {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }

    /// The outcome for a specific grid position, if it is in this sweep.
    pub fn find(&self, resampler: Method, activation: Activation) -> Option<&CellOutcome> {
        self.cells
            .iter()
            .find(|c| c.cell.resampler == resampler && c.cell.activation == activation)
    }

    /// The successful cell with the highest test AUC.
    pub fn best_by_test_auc(&self) -> Option<&CellOutcome> {
        self.cells
            .iter()
            .filter(|c| c.test.is_some())
            .max_by(|a, b| {
                let (a, b) = (a.test.as_ref().unwrap().auc, b.test.as_ref().unwrap().auc);
                a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
            })
    }

    /// Writes the summary table: one row per cell and split, validation
    /// before test, metric fields left empty for failed cells.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "resampler,activation,split,loss,accuracy,auc")?;
        for outcome in &self.cells {
            for (split, report) in
                [("validation", &outcome.val), ("test", &outcome.test)]
            {
                let (loss, accuracy, auc) = match report {
                    Some(r) => (r.loss.to_string(), r.accuracy.to_string(), r.auc.to_string()),
                    None => (String::new(), String::new(), String::new()),
                };
                writeln!(
                    w,
                    "{},{},{split},{loss},{accuracy},{auc}",
                    outcome.cell.resampler, outcome.cell.activation
                )?;
            }
        }
        Ok(())
    }
}

/// The standard grid: every sweep resampler crossed with every activation,
/// resampler-major. Cell `i` gets seed `base.seed + i` and writes under
/// `<base out_dir>/cells/<i>_<resampler>_<activation>`.
pub fn standard_grid(base: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let mut grid = Vec::with_capacity(Method::SWEEP.len() * Activation::ALL.len());
    for resampler in Method::SWEEP {
        for activation in Activation::ALL {
            let index = grid.len();
            let mut cell = base.clone();
            cell.resampler.name = resampler;
            cell.activation = activation;
            cell.seed = base.seed.wrapping_add(index as u64);
            cell.out_dir = base
                .out_dir
                .join("cells")
                .join(format!("{index:02}_{resampler}_{activation}"));
            grid.push(cell);
        }
    }
    grid
}

/// Runs every cell over a shared dataset and writes
/// `<out_dir>/sweep_summary.csv`.
///
/// The first cell's seed drives the data side (generation and splits) for
/// the whole sweep, so all cells see identical train/validation/test rows;
/// each cell's own seed drives its resampler and trainer. Cells with equal
/// data and split configuration share one prepared dataset. A cell that
/// fails is recorded with its error and the sweep continues; only an empty
/// grid or an unwritable summary is fatal.
pub fn run_sweep(
    cells: &[ExperimentConfig],
    out_dir: &Path,
) -> Result<SweepSummary, PipelineError> {
    if cells.is_empty() {
        return Err(PipelineError::Config("sweep grid is empty".to_string()));
    }
    let data_seed = cells[0].seed;

    let mut prepared: HashMap<String, PreparedData> = HashMap::new();
    let mut outcomes = Vec::with_capacity(cells.len());
    for (index, config) in cells.iter().enumerate() {
        let cell = SweepCell {
            index,
            resampler: config.resampler.name,
            activation: config.activation,
            seed: config.seed,
            out_dir: config.out_dir.clone(),
        };
        let result = config.validate().and_then(|()| {
            let key = prepare_key(config)?;
            if !prepared.contains_key(&key) {
                prepared.insert(key.clone(), prepare_data(config, data_seed)?);
            }
            run_prepared(config, &prepared[&key], config.seed)
        });
        outcomes.push(match result {
            Ok(output) => CellOutcome {
                cell,
                val: Some(output.val_report),
                test: Some(output.test_report),
                error: None,
            },
            Err(e) => CellOutcome { cell, val: None, test: None, error: Some(e.to_string()) },
        });
    }

    let summary = SweepSummary {
        cells: outcomes,
        csv_path: out_dir.join("sweep_summary.csv"),
    };
    std::fs::create_dir_all(out_dir)
        .map_err(|e| PipelineError::stage("write", e))?;
    let mut bytes = Vec::new();
    summary.write_csv(&mut bytes).map_err(|e| PipelineError::stage("write", e))?;
    write_atomic(&summary.csv_path, &bytes).map_err(|e| PipelineError::stage("write", e))?;
    Ok(summary)
}

fn prepare_key(config: &ExperimentConfig) -> Result<String, PipelineError> {
    let data = serde_json::to_string(&config.data)
        .map_err(|e| PipelineError::stage("load", e))?;
    let split = serde_json::to_string(&config.split)
        .map_err(|e| PipelineError::stage("load", e))?;
    Ok(format!("{data}|{split}"))
}

//! Single experiment execution: load, prepare, split, resample, normalize,
//! train, evaluate, write.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cohort::{generate_cohort, GroundTruth};
use crate::data::{
    stratified_split, DataError, LongTable, NormStats, WaveTable, zscore_normalize,
};
use crate::matrix::LabeledMatrix;
use crate::metrics::{accuracy, auc, render_roc_svg, roc_curve, EvalReport, RocCurve};
use crate::nn::{
    bce_loss, predict_proba, train, Checkpoint, History, ModelSpec, ParamSet, Tensor,
};
use crate::pipeline::config::{
    DataSource, ExperimentConfig, TableFormat, MISSINGNESS_THRESHOLD,
};
use crate::pipeline::PipelineError;
use crate::resample::ResampleReport;

// Offsets mixed into the experiment seed so each seeded stage gets its own
// stream. The generator and the two splits derive from the data seed; the
// resampler and trainer derive from the model seed, which a sweep varies per
// cell while the data stays fixed.
const SEED_SPLIT_OUTER: u64 = 1;
const SEED_SPLIT_INNER: u64 = 2;
const SEED_RESAMPLE: u64 = 3;
const SEED_TRAIN: u64 = 4;

/// What data preparation did: participants dropped for incomplete wave
/// coverage, features dropped by the wave-1 missingness filter, cells filled
/// by adjacent-wave imputation and rows dropped for missingness that
/// imputation could not fix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepareSummary {
    pub dropped_participants: usize,
    pub features_before: usize,
    pub features_after: usize,
    pub imputed_cells: usize,
    pub dropped_rows: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Pivot a long table to wide format and clean it: drop participants
/// without full wave coverage, drop features with wave-1 missingness at or
/// above `threshold`, impute remaining holes from adjacent waves, then drop
/// rows that still have missing cells.
pub fn prepare_waves(
    long: &LongTable,
    wave_count: usize,
    threshold: f64,
) -> Result<(WaveTable, PrepareSummary), DataError> {
    let (wide, dropped_participants) = WaveTable::pivot_long_to_wide(long, wave_count)?;
    let (clean, mut summary) = clean_waves(&wide, threshold)?;
    summary.dropped_participants = dropped_participants;
    Ok((clean, summary))
}

/// The cleaning half of [`prepare_waves`] for data that is already wide:
/// missingness filter, adjacent-wave imputation, incomplete-row drop.
pub fn clean_waves(
    wide: &WaveTable,
    threshold: f64,
) -> Result<(WaveTable, PrepareSummary), DataError> {
    let features_before = wide.n_features();
    let filtered = wide.filter_features_by_missingness(1, threshold)?;
    let features_after = filtered.n_features();
    let missing_before = filtered.count_missing();
    let (imputed, remaining) = filtered.impute_adjacent_waves()?;
    let (clean, dropped_rows) = imputed.drop_incomplete_rows();
    let summary = PrepareSummary {
        dropped_participants: 0,
        features_before,
        features_after,
        imputed_cells: missing_before - remaining,
        dropped_rows,
        rows: clean.n_rows(),
        cols: clean.n_cols(),
    };
    Ok((clean, summary))
}

/// The cleaned, split data a run (or a whole sweep) trains against.
pub(crate) struct PreparedData {
    pub train: LabeledMatrix,
    pub val: LabeledMatrix,
    pub test: LabeledMatrix,
    pub normalize_columns: Vec<usize>,
    pub truth: Option<GroundTruth>,
    pub summary: PrepareSummary,
}

pub(crate) fn prepare_data(
    config: &ExperimentConfig,
    data_seed: u64,
) -> Result<PreparedData, PipelineError> {
    let (wide, summary, truth) = match config.data.source {
        DataSource::Generated => {
            let mut cohort_config = config.data.cohort.clone();
            cohort_config.seed = data_seed;
            let (long, truth) =
                generate_cohort(&cohort_config).map_err(|e| PipelineError::stage("load", e))?;
            let (wide, summary) =
                prepare_waves(&long, cohort_config.waves, MISSINGNESS_THRESHOLD)
                    .map_err(|e| PipelineError::stage("prepare", e))?;
            (wide, summary, Some(truth))
        }
        DataSource::Csv => {
            let path = config.data.path.as_ref().expect("validated");
            match config.data.format {
                TableFormat::Long => {
                    let long = LongTable::read_csv_path(path)
                        .map_err(|e| PipelineError::stage("load", e))?;
                    let waves = long.records().iter().map(|r| r.wave).max().unwrap_or(1);
                    let (wide, summary) = prepare_waves(&long, waves, MISSINGNESS_THRESHOLD)
                        .map_err(|e| PipelineError::stage("prepare", e))?;
                    (wide, summary, None)
                }
                TableFormat::Wide => {
                    let wide = WaveTable::read_csv_path(path)
                        .map_err(|e| PipelineError::stage("load", e))?;
                    let (clean, summary) = clean_waves(&wide, MISSINGNESS_THRESHOLD)
                        .map_err(|e| PipelineError::stage("prepare", e))?;
                    (clean, summary, None)
                }
            }
        }
    };

    let outer = stratified_split(&wide, config.split.train_fraction, data_seed.wrapping_add(SEED_SPLIT_OUTER))
        .map_err(|e| PipelineError::stage("split", e))?;
    let inner = stratified_split(
        &outer.train,
        config.split.inner_train_fraction,
        data_seed.wrapping_add(SEED_SPLIT_INNER),
    )
    .map_err(|e| PipelineError::stage("split", e))?;

    let mut normalize_columns = Vec::new();
    for name in &config.normalize_features {
        if let Some(f) = inner.train.feature_index(name) {
            normalize_columns.extend(inner.train.feature_columns(f));
        }
    }

    let lower = |table: &WaveTable| {
        table.to_labeled_matrix().map_err(|e| PipelineError::stage("split", e))
    };
    Ok(PreparedData {
        train: lower(&inner.train)?,
        val: lower(&outer.holdout)?,
        test: lower(&inner.holdout)?,
        normalize_columns,
        truth,
        summary,
    })
}

/// Everything a finished run produced, with the on-disk artifact directory
/// and an audit trail for leakage checks.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub val_report: EvalReport,
    pub test_report: EvalReport,
    pub val_roc: RocCurve,
    pub test_roc: RocCurve,
    pub history: History,
    pub stopped_early: bool,
    pub resample_report: ResampleReport,
    pub norm_stats: NormStats,
    pub prepare_summary: PrepareSummary,
    pub audit: PipelineAudit,
    pub out_dir: PathBuf,
}

/// Matrices captured around the resampling and normalization stages so a
/// test can replay them: the held-out splits as they were before resampling,
/// the augmented training set the statistics were fitted on, and the
/// normalized splits that were actually evaluated.
#[derive(Debug, Clone)]
pub struct PipelineAudit {
    pub raw_train: LabeledMatrix,
    pub raw_val: LabeledMatrix,
    pub raw_test: LabeledMatrix,
    pub augmented_train: LabeledMatrix,
    pub normalized_val: LabeledMatrix,
    pub normalized_test: LabeledMatrix,
    pub normalize_columns: Vec<usize>,
}

pub fn run_pipeline(config: &ExperimentConfig) -> Result<RunOutput, PipelineError> {
    run_pipeline_with_seeds(config, config.seed, config.seed)
}

/// Like [`run_pipeline`] but with the data-side seed (generator and splits)
/// and model-side seed (resampler and trainer) supplied separately, which is
/// how a sweep varies cells over a fixed dataset.
pub fn run_pipeline_with_seeds(
    config: &ExperimentConfig,
    data_seed: u64,
    model_seed: u64,
) -> Result<RunOutput, PipelineError> {
    config.validate()?;
    let prepared = prepare_data(config, data_seed)?;
    run_prepared(config, &prepared, model_seed)
}

pub(crate) fn run_prepared(
    config: &ExperimentConfig,
    data: &PreparedData,
    model_seed: u64,
) -> Result<RunOutput, PipelineError> {
    let raw_train = data.train.clone();
    let raw_val = data.val.clone();
    let raw_test = data.test.clone();

    let (augmented, resample_report) = config
        .resampler
        .name
        .apply(&data.train, &config.resampler.params(), model_seed.wrapping_add(SEED_RESAMPLE))
        .map_err(|e| PipelineError::stage("resample", e))?;

    let (train_set, others, norm_stats) =
        zscore_normalize(&augmented, &data.normalize_columns, &[&data.val, &data.test])
            .map_err(|e| PipelineError::stage("normalize", e))?;
    let [val_set, test_set]: [LabeledMatrix; 2] =
        others.try_into().expect("two matrices in, two out");

    let spec = ModelSpec::wave_cnn(train_set.n_cols(), config.activation);
    let train_seed = model_seed.wrapping_add(SEED_TRAIN);
    let train_config = config.train.to_train_config(train_seed);
    let outcome = train(&spec, &train_set, &val_set, &train_config)
        .map_err(|e| PipelineError::stage("train", e))?;

    let (val_report, val_roc) = evaluate(&spec, &outcome.best_params, &val_set, "validation")
        .map_err(|e| PipelineError::stage("evaluate", e))?;
    let (test_report, test_roc) = evaluate(&spec, &outcome.best_params, &test_set, "test")
        .map_err(|e| PipelineError::stage("evaluate", e))?;

    let output = RunOutput {
        val_report,
        test_report,
        val_roc,
        test_roc,
        history: outcome.history.clone(),
        stopped_early: outcome.stopped_early,
        resample_report,
        norm_stats,
        prepare_summary: data.summary,
        audit: PipelineAudit {
            raw_train,
            raw_val,
            raw_test,
            augmented_train: augmented,
            normalized_val: val_set,
            normalized_test: test_set,
            normalize_columns: data.normalize_columns.clone(),
        },
        out_dir: config.out_dir.clone(),
    };
    write_artifacts(config, data, &output, &spec, &outcome.best_params, train_seed)
        .map_err(|e| PipelineError::stage("write", e))?;
    Ok(output)
}

/// Loss, accuracy, ROC and AUC of one parameter set on one split.
pub fn evaluate(
    spec: &ModelSpec,
    params: &ParamSet,
    set: &LabeledMatrix,
    split: &str,
) -> Result<(EvalReport, RocCurve), PipelineError> {
    let rows: Vec<usize> = (0..set.n_rows()).collect();
    let x = Tensor::from_rows(set, &rows);
    let probs = predict_proba(spec, params, &x).map_err(|e| PipelineError::stage("evaluate", e))?;
    let loss = bce_loss(&probs, set.labels()).map_err(|e| PipelineError::stage("evaluate", e))?;
    let acc = accuracy(&probs, set.labels(), 0.5)
        .map_err(|e| PipelineError::stage("evaluate", e))?;
    let curve =
        roc_curve(&probs, set.labels()).map_err(|e| PipelineError::stage("evaluate", e))?;
    let area = auc(&curve);
    let positives = set.labels().iter().filter(|&&l| l == 1).count();
    Ok((
        EvalReport {
            split: split.to_string(),
            loss,
            accuracy: acc,
            auc: area,
            n: set.n_rows(),
            positives,
        },
        curve,
    ))
}

/// Writes a file atomically: a temp file in the same directory, then rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".to_string());
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

fn to_json_pretty<T: Serialize>(value: &T) -> Result<Vec<u8>, std::io::Error> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(std::io::Error::other)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Seeds and stage reports of one run, written alongside the metrics.
#[derive(Debug, Clone, Serialize)]
struct RunRecord<'a> {
    seed: u64,
    train_seed: u64,
    prepare: &'a PrepareSummary,
    resample: &'a ResampleReport,
    best_epoch: usize,
    epochs_run: usize,
    stopped_early: bool,
}

fn write_artifacts(
    config: &ExperimentConfig,
    data: &PreparedData,
    output: &RunOutput,
    spec: &ModelSpec,
    best_params: &ParamSet,
    train_seed: u64,
) -> Result<(), std::io::Error> {
    let dir = &config.out_dir;
    std::fs::create_dir_all(dir)?;

    write_atomic(&dir.join("config.json"), &to_json_pretty(config)?)?;
    write_atomic(&dir.join("metrics_val.json"), &to_json_pretty(&output.val_report)?)?;
    write_atomic(&dir.join("metrics_test.json"), &to_json_pretty(&output.test_report)?)?;
    write_atomic(&dir.join("norm_stats.json"), &to_json_pretty(&output.norm_stats)?)?;
    write_atomic(
        &dir.join("run.json"),
        &to_json_pretty(&RunRecord {
            seed: config.seed,
            train_seed,
            prepare: &output.prepare_summary,
            resample: &output.resample_report,
            best_epoch: output.history.best_epoch,
            epochs_run: output.history.epochs.len(),
            stopped_early: output.stopped_early,
        })?,
    )?;

    for (name, curve) in [("val", &output.val_roc), ("test", &output.test_roc)] {
        let mut csv_bytes = Vec::new();
        curve.write_csv(&mut csv_bytes).map_err(std::io::Error::other)?;
        write_atomic(&dir.join(format!("roc_{name}.csv")), &csv_bytes)?;
        let title = format!(
            "ROC ({name}) {} + {}",
            output.resample_report.method, config.activation
        );
        write_atomic(&dir.join(format!("roc_{name}.svg")), render_roc_svg(curve, &title).as_bytes())?;
    }

    let mut history_bytes = Vec::new();
    output.history.write_csv(&mut history_bytes)?;
    write_atomic(&dir.join("history.csv"), &history_bytes)?;

    let checkpoint = Checkpoint::new(spec.clone(), best_params, train_seed, output.history.clone());
    let ckpt_bytes = serde_json::to_vec(&checkpoint).map_err(std::io::Error::other)?;
    write_atomic(&dir.join("checkpoint.json"), &ckpt_bytes)?;

    if let Some(truth) = &data.truth {
        write_atomic(&dir.join("ground_truth.json"), &to_json_pretty(truth)?)?;
    }
    Ok(())
}

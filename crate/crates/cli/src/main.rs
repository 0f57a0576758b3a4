//! Command line driver for the wavecnn experiment pipeline.
//!
//! Every subcommand reads the same JSON experiment config (`--config`, all
//! fields optional) and honours the global `--seed` and `--out` overrides.
//! `--format` picks how the stdout summary is rendered; file artifacts keep
//! their fixed formats.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use wavecnn::cohort::generate_cohort;
use wavecnn::data::{stratified_split, LongTable, NormStats, WaveTable};
use wavecnn::metrics::{auc, render_roc_svg, EvalReport};
use wavecnn::nn::Checkpoint;
use wavecnn::pipeline::{
    clean_waves, evaluate, prepare_waves, run_pipeline, run_sweep, standard_grid,
    ExperimentConfig, PipelineError, PrepareSummary, TableFormat, MISSINGNESS_THRESHOLD,
};

#[derive(Parser)]
#[command(name = "wavecnn", version, about = "Wave-aligned CNN mortality experiments")]
struct Cli {
    /// Experiment config JSON; defaults apply for every missing field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the output directory from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Stdout summary format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort: long CSV plus ground-truth JSON.
    Generate,
    /// Clean a table: pivot wide, filter, impute, drop incomplete rows.
    Prepare {
        /// Input CSV; defaults to the configured data path.
        input: Option<PathBuf>,
    },
    /// Stratified split of a wide CSV into train and holdout CSVs.
    Split {
        /// Input wide CSV; defaults to the configured data path.
        input: Option<PathBuf>,
    },
    /// Rebalance the classes of a wide CSV.
    Resample {
        /// Input wide CSV; defaults to the configured data path.
        input: Option<PathBuf>,
    },
    /// Run the full pipeline and write metrics, curves and a checkpoint.
    Train,
    /// Score a checkpoint against a labelled wide CSV.
    Evaluate {
        /// Checkpoint JSON written by `train`.
        checkpoint: PathBuf,
        /// Complete (no missing cells) wide CSV with a `y` column.
        data: PathBuf,
        /// `norm_stats.json` from the training run, applied before scoring.
        #[arg(long)]
        norm_stats: Option<PathBuf>,
        /// Split name used in the report and output file names.
        #[arg(long, default_value = "holdout")]
        split: String,
    },
    /// Run the full resampler-by-activation grid.
    Sweep,
    /// Write the ROC curve of a checkpoint on a labelled wide CSV.
    Roc {
        /// Checkpoint JSON written by `train`.
        checkpoint: PathBuf,
        /// Complete (no missing cells) wide CSV with a `y` column.
        data: PathBuf,
        /// `norm_stats.json` from the training run, applied before scoring.
        #[arg(long)]
        norm_stats: Option<PathBuf>,
        /// Split name used in the report and output file names.
        #[arg(long, default_value = "holdout")]
        split: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    config.validate()?;
    let format = cli.format;

    match cli.command {
        Command::Generate => generate(&config, format),
        Command::Prepare { input } => prepare(&config, input.as_deref(), format),
        Command::Split { input } => split(&config, input.as_deref(), format),
        Command::Resample { input } => resample(&config, input.as_deref(), format),
        Command::Train => train(&config, format),
        Command::Sweep => sweep(&config, format),
        Command::Evaluate { checkpoint, data, norm_stats, split } => {
            score(&config, &checkpoint, &data, norm_stats.as_deref(), &split, format, false)
        }
        Command::Roc { checkpoint, data, norm_stats, split } => {
            score(&config, &checkpoint, &data, norm_stats.as_deref(), &split, format, true)
        }
    }
}

/// The input a table subcommand works on: the positional path if given,
/// otherwise the configured data path.
fn input_path<'a>(config: &'a ExperimentConfig, input: Option<&'a Path>) -> Result<&'a Path, PipelineError> {
    input
        .or(config.data.path.as_deref())
        .ok_or_else(|| PipelineError::Config("no input path: pass one or set data.path".into()))
}

fn out_dir(config: &ExperimentConfig) -> Result<&Path, PipelineError> {
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| PipelineError::stage("write", e))?;
    Ok(&config.out_dir)
}

fn emit<T: Serialize>(format: Format, value: &T, csv: impl FnOnce() -> String) {
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(value).expect("summaries serialize")
        ),
        Format::Csv => println!("{}", csv()),
    }
}

fn generate(config: &ExperimentConfig, format: Format) -> Result<(), PipelineError> {
    let mut cohort = config.data.cohort.clone();
    cohort.seed = config.seed;
    let (long, truth) =
        generate_cohort(&cohort).map_err(|e| PipelineError::stage("load", e))?;
    let dir = out_dir(config)?;
    let cohort_csv = dir.join("cohort.csv");
    let truth_json = dir.join("ground_truth.json");
    long.write_csv_path(&cohort_csv).map_err(|e| PipelineError::stage("write", e))?;
    truth.write_json(&truth_json).map_err(|e| PipelineError::stage("write", e))?;

    #[derive(Serialize)]
    struct Summary {
        participants: usize,
        records: usize,
        realized_prevalence: f64,
        cohort_csv: PathBuf,
        ground_truth_json: PathBuf,
    }
    let summary = Summary {
        participants: truth.participants.len(),
        records: long.records().len(),
        realized_prevalence: truth.realized_prevalence,
        cohort_csv,
        ground_truth_json: truth_json,
    };
    emit(format, &summary, || {
        format!(
            "participants,records,realized_prevalence\n{},{},{}",
            summary.participants, summary.records, summary.realized_prevalence
        )
    });
    Ok(())
}

fn prepare(
    config: &ExperimentConfig,
    input: Option<&Path>,
    format: Format,
) -> Result<(), PipelineError> {
    let path = input_path(config, input)?;
    let (clean, summary) = match config.data.format {
        TableFormat::Long => {
            let long =
                LongTable::read_csv_path(path).map_err(|e| PipelineError::stage("load", e))?;
            let waves = long.records().iter().map(|r| r.wave).max().unwrap_or(1);
            prepare_waves(&long, waves, MISSINGNESS_THRESHOLD)
                .map_err(|e| PipelineError::stage("prepare", e))?
        }
        TableFormat::Wide => {
            let wide =
                WaveTable::read_csv_path(path).map_err(|e| PipelineError::stage("load", e))?;
            clean_waves(&wide, MISSINGNESS_THRESHOLD)
                .map_err(|e| PipelineError::stage("prepare", e))?
        }
    };
    let dir = out_dir(config)?;
    clean
        .write_csv_path(dir.join("prepared.csv"))
        .map_err(|e| PipelineError::stage("write", e))?;
    emit(format, &summary, || prepare_summary_csv(&summary));
    Ok(())
}

fn prepare_summary_csv(s: &PrepareSummary) -> String {
    format!(
        "dropped_participants,features_before,features_after,imputed_cells,dropped_rows,rows,cols\n{},{},{},{},{},{},{}",
        s.dropped_participants,
        s.features_before,
        s.features_after,
        s.imputed_cells,
        s.dropped_rows,
        s.rows,
        s.cols
    )
}

fn split(
    config: &ExperimentConfig,
    input: Option<&Path>,
    format: Format,
) -> Result<(), PipelineError> {
    let path = input_path(config, input)?;
    let wide = WaveTable::read_csv_path(path).map_err(|e| PipelineError::stage("load", e))?;
    let result = stratified_split(&wide, config.split.train_fraction, config.seed)
        .map_err(|e| PipelineError::stage("split", e))?;
    let dir = out_dir(config)?;
    result
        .train
        .write_csv_path(dir.join("train.csv"))
        .map_err(|e| PipelineError::stage("write", e))?;
    result
        .holdout
        .write_csv_path(dir.join("holdout.csv"))
        .map_err(|e| PipelineError::stage("write", e))?;

    #[derive(Serialize)]
    struct Summary {
        train_rows: usize,
        holdout_rows: usize,
        seed: u64,
    }
    let summary = Summary {
        train_rows: result.train.n_rows(),
        holdout_rows: result.holdout.n_rows(),
        seed: result.seed,
    };
    emit(format, &summary, || {
        format!(
            "train_rows,holdout_rows,seed\n{},{},{}",
            summary.train_rows, summary.holdout_rows, summary.seed
        )
    });
    Ok(())
}

fn resample(
    config: &ExperimentConfig,
    input: Option<&Path>,
    format: Format,
) -> Result<(), PipelineError> {
    let path = input_path(config, input)?;
    let wide = WaveTable::read_csv_path(path).map_err(|e| PipelineError::stage("load", e))?;
    let matrix = wide.to_labeled_matrix().map_err(|e| PipelineError::stage("load", e))?;
    let (resampled, report) = config
        .resampler
        .name
        .apply(&matrix, &config.resampler.params(), config.seed)
        .map_err(|e| PipelineError::stage("resample", e))?;

    // Resampled rows (duplicates, synthetics, survivors of cleaning) no
    // longer match the input participants, so they get fresh row tags.
    let pids = (1..=resampled.n_rows()).map(|i| format!("r{i:05}")).collect();
    let values = resampled.values().iter().map(|&v| Some(v)).collect();
    let out_table = WaveTable::new(
        pids,
        wide.feature_names().to_vec(),
        wide.wave_count(),
        values,
        Some(resampled.labels().to_vec()),
    )
    .map_err(|e| PipelineError::stage("resample", e))?;

    let dir = out_dir(config)?;
    out_table
        .write_csv_path(dir.join("resampled.csv"))
        .map_err(|e| PipelineError::stage("write", e))?;
    let report_json =
        serde_json::to_vec_pretty(&report).map_err(|e| PipelineError::stage("write", e))?;
    std::fs::write(dir.join("resample_report.json"), report_json)
        .map_err(|e| PipelineError::stage("write", e))?;
    emit(format, &report, || {
        format!(
            "method,before_class0,before_class1,after_class0,after_class1,removed_rows\n{},{},{},{},{},{}",
            report.method,
            report.before.class0,
            report.before.class1,
            report.after.class0,
            report.after.class1,
            report.removed_rows.len()
        )
    });
    Ok(())
}

fn report_csv(reports: &[&EvalReport]) -> String {
    let mut text = String::from("split,loss,accuracy,auc,n,positives");
    for r in reports {
        text.push_str(&format!(
            "\n{},{},{},{},{},{}",
            r.split, r.loss, r.accuracy, r.auc, r.n, r.positives
        ));
    }
    text
}

fn train(config: &ExperimentConfig, format: Format) -> Result<(), PipelineError> {
    let output = run_pipeline(config)?;
    let reports = [output.val_report.clone(), output.test_report.clone()];
    emit(format, &reports, || report_csv(&[&reports[0], &reports[1]]));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn score(
    config: &ExperimentConfig,
    checkpoint: &Path,
    data: &Path,
    norm_stats: Option<&Path>,
    split: &str,
    format: Format,
    roc_artifacts: bool,
) -> Result<(), PipelineError> {
    let checkpoint =
        Checkpoint::load(checkpoint).map_err(|e| PipelineError::stage("load", e))?;
    let params = checkpoint.params().map_err(|e| PipelineError::stage("load", e))?;
    let wide = WaveTable::read_csv_path(data).map_err(|e| PipelineError::stage("load", e))?;
    let mut matrix = wide.to_labeled_matrix().map_err(|e| PipelineError::stage("load", e))?;
    if let Some(stats_path) = norm_stats {
        let file = std::fs::File::open(stats_path).map_err(|e| PipelineError::stage("load", e))?;
        let stats: NormStats =
            serde_json::from_reader(file).map_err(|e| PipelineError::stage("load", e))?;
        matrix = stats.apply(&matrix).map_err(|e| PipelineError::stage("normalize", e))?;
    }
    let (report, curve) = evaluate(&checkpoint.spec, &params, &matrix, split)?;

    let dir = out_dir(config)?;
    if roc_artifacts {
        let mut bytes = Vec::new();
        curve.write_csv(&mut bytes).map_err(|e| PipelineError::stage("write", e))?;
        std::fs::write(dir.join(format!("roc_{split}.csv")), bytes)
            .map_err(|e| PipelineError::stage("write", e))?;
        let svg = render_roc_svg(&curve, &format!("ROC ({split})"));
        std::fs::write(dir.join(format!("roc_{split}.svg")), svg)
            .map_err(|e| PipelineError::stage("write", e))?;

        #[derive(Serialize)]
        struct Summary {
            split: String,
            auc: f64,
            points: usize,
        }
        let summary =
            Summary { split: split.to_string(), auc: auc(&curve), points: curve.points.len() };
        emit(format, &summary, || {
            format!("split,auc,points\n{},{},{}", summary.split, summary.auc, summary.points)
        });
    } else {
        let metrics_json = serde_json::to_vec_pretty(&report)
            .map_err(|e| PipelineError::stage("write", e))?;
        std::fs::write(dir.join(format!("metrics_{split}.json")), metrics_json)
            .map_err(|e| PipelineError::stage("write", e))?;
        emit(format, &report, || report_csv(&[&report]));
    }
    Ok(())
}

fn sweep(config: &ExperimentConfig, format: Format) -> Result<(), PipelineError> {
    let grid = standard_grid(config);
    let summary = run_sweep(&grid, &config.out_dir)?;
    if summary.failed_cells() == summary.cells.len() {
        return Err(PipelineError::stage("sweep", "every cell failed"));
    }

    #[derive(Serialize)]
    struct Row {
        resampler: String,
        activation: String,
        val_auc: Option<f64>,
        test_auc: Option<f64>,
        error: Option<String>,
    }
    let rows: Vec<Row> = summary
        .cells
        .iter()
        .map(|c| Row {
            resampler: c.cell.resampler.to_string(),
            activation: c.cell.activation.to_string(),
            val_auc: c.val.as_ref().map(|r| r.auc),
            test_auc: c.test.as_ref().map(|r| r.auc),
            error: c.error.clone(),
        })
        .collect();
    emit(format, &rows, || {
        let mut text = String::from("resampler,activation,val_auc,test_auc");
        for row in &rows {
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            text.push_str(&format!(
                "\n{},{},{},{}",
                row.resampler,
                row.activation,
                fmt(row.val_auc),
                fmt(row.test_auc)
            ));
        }
        text
    });
    eprintln!("summary written to {}", summary.csv_path.display());
    Ok(())
}

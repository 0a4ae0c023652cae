//! `fsvm` command-line harness.
//!
//! Exit codes: 0 success, 2 configuration or validation, 3 I/O,
//! 4 numerical (Gram matrix, grids), 5 optimization.

pub mod config;
pub mod experiment;
pub mod io;
pub mod plot;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::datagen::generate;
use crate::functional::fit;
use crate::Error;
use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Optimization(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Optimization(_) => 5,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::ConvergenceFailure { .. } | Error::DegenerateLabels => {
                CliError::Optimization(msg)
            }
            Error::InvalidParameter(_) | Error::UnsupportedOperator { .. } => CliError::Config(msg),
            _ => CliError::Numerical(msg),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fsvm",
    version,
    about = "Functional SVM on L-spline derivatives"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw synthetic curves (first grid level, first sample size) into a data CSV.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit a model on a data CSV and write it as JSON.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Score a data CSV with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Write predictions here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the (d, n, gamma, replicate) sweep; writes results.csv and plot.svg.
    Consistency {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Record wall-clock time per cell (makes results.csv non-reproducible).
        #[arg(long)]
        timing: bool,
    },
}

/// Runs a parsed command, printing to standard output.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { config, out, seed } => cmd_generate(&config, &out, seed),
        Command::Fit {
            data,
            config,
            model,
        } => {
            let line = cmd_fit(&data, &config, &model)?;
            println!("{line}");
            Ok(())
        }
        Command::Predict { model, data, out } => {
            let report = cmd_predict(&model, &data)?;
            match out {
                Some(path) => io::write_text(&path, &report.csv)?,
                None => print!("{}", report.csv),
            }
            println!("# error_rate={}", report.error_rate);
            Ok(())
        }
        Command::Consistency {
            config,
            out,
            jobs,
            seed,
            timing,
        } => {
            let summary = cmd_consistency(&config, out.as_deref(), jobs, seed, timing)?;
            print!("{summary}");
            Ok(())
        }
    }
}

pub fn cmd_generate(config: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(config)?;
    let grid = cfg.primary_grid()?;
    let mut gen = cfg.generator.clone();
    gen.seed = seed.unwrap_or(cfg.seed);
    let samples = generate(&gen, &grid, cfg.sample_sizes[0])?;
    let rows: Vec<(i8, &[f64])> = samples
        .iter()
        .map(|s| (s.label, s.function.values()))
        .collect();
    io::write_text(out, &io::render_dataset(&grid, &rows))
}

/// Fits, saves the model, and returns the one-line JSON report.
pub fn cmd_fit(data: &Path, config: &Path, model_path: &Path) -> Result<String, CliError> {
    let cfg = ExperimentConfig::load(config)?;
    let fit_cfg = cfg.fit_config()?;
    let ds = io::read_dataset(data)?;
    if ds.grid != fit_cfg.grid {
        return Err(CliError::Numerical(format!(
            "data grid ({} points) does not match the configured grid ({} points)",
            ds.grid.len(),
            fit_cfg.grid.len()
        )));
    }
    let model = match fit(&ds.samples, &ds.labels, &fit_cfg) {
        Err(e @ Error::IllConditionedGram { .. }) => {
            return Err(CliError::Numerical(format!(
                "{e}; set `jitter` in the config"
            )))
        }
        other => other?,
    };
    io::save_model(&model, model_path)?;
    let mut wrong = 0usize;
    for (s, &y) in ds.samples.iter().zip(&ds.labels) {
        if model.predict(s)?.label != y {
            wrong += 1;
        }
    }
    let report = serde_json::json!({
        "train_error": wrong as f64 / ds.samples.len() as f64,
        "C_used": model.c_used(),
        "support_vectors": model.core().support_vectors().len(),
        "iterations": model.iterations(),
    });
    Ok(report.to_string())
}

pub struct PredictReport {
    /// `predicted_label,score` rows with a header.
    pub csv: String,
    pub error_rate: f64,
}

pub fn cmd_predict(model_path: &Path, data: &Path) -> Result<PredictReport, CliError> {
    let model = io::load_model(model_path)?;
    let ds = io::read_dataset(data)?;
    if &ds.grid != model.gram().grid() {
        return Err(CliError::Numerical(format!(
            "data grid ({} points) does not match the model grid ({} points)",
            ds.grid.len(),
            model.gram().dim()
        )));
    }
    let mut csv = String::from("predicted_label,score\n");
    let mut wrong = 0usize;
    for (s, &y) in ds.samples.iter().zip(&ds.labels) {
        let p = model.predict(s)?;
        if p.label != y {
            wrong += 1;
        }
        let _ = writeln!(csv, "{},{}", io::format_label(p.label), p.score);
    }
    Ok(PredictReport {
        csv,
        error_rate: wrong as f64 / ds.samples.len() as f64,
    })
}

/// Runs the sweep, writes `results.csv` and `plot.svg`, returns the summary table.
pub fn cmd_consistency(
    config: &Path,
    out: Option<&Path>,
    jobs: Option<usize>,
    seed: Option<u64>,
    timing: bool,
) -> Result<String, CliError> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(dir) = out {
        cfg.output_dir = dir.to_path_buf();
    }
    if jobs == Some(0) {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", cfg.output_dir.display())))?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    let result = pool.install(|| experiment::run_experiment(&cfg, timing))?;

    let summary = experiment::summarize(&result);
    io::write_text(
        &cfg.output_dir.join("results.csv"),
        &experiment::render_results_csv(&result),
    )?;
    io::write_text(
        &cfg.output_dir.join("plot.svg"),
        &plot::render_svg(&summary, result.bayes_error),
    )?;
    let table = experiment::render_summary(&summary, result.bayes_error);
    let failed = experiment::failed_fraction(&result);
    if failed > experiment::MAX_FAILED_FRACTION {
        print!("{table}");
        return Err(CliError::Optimization(format!(
            "{:.1}% of cells failed to converge",
            100.0 * failed
        )));
    }
    Ok(table)
}

//! The `(d, n, γ, replicate)` consistency sweep.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::CliError;
use crate::datagen::{bayes_error, dyadic_grid, generate, GeneratorSpec, LabeledSample};
use crate::functional::{fit, FunctionalSvmConfig, FunctionalSvmModel};
use crate::Error;

pub const RESULTS_HEADER: &str =
    "d,n,gamma,replicate,train_error,test_error,bayes_error,C_used,converged,wall_time_ms";

/// Cells whose fit failed beyond this fraction make the run fail.
pub const MAX_FAILED_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub level: u32,
    pub d: usize,
    pub n: usize,
    pub gamma_index: usize,
    pub gamma: f64,
    pub replicate: usize,
    pub train_error: f64,
    pub test_error: f64,
    pub bayes_error: f64,
    pub c_used: f64,
    pub converged: bool,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub bayes_error: f64,
}

const TRAIN_STREAM: u64 = 0x7472_6169_6e00_0000;
const TEST_STREAM: u64 = 0x7465_7374_0000_0000;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent seed for one stream of the sweep.
pub fn derive_seed(base: u64, stream: u64, replicate: usize, n: usize) -> u64 {
    splitmix(splitmix(splitmix(base ^ stream) ^ replicate as u64) ^ n as u64)
}

fn error_rate(model: &FunctionalSvmModel, samples: &[LabeledSample]) -> Result<f64, Error> {
    let mut wrong = 0usize;
    for s in samples {
        if model.predict(&s.function)?.label != s.label {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / samples.len() as f64)
}

struct Cell {
    level: u32,
    n: usize,
    gamma_index: usize,
    gamma: f64,
    replicate: usize,
}

/// Runs every cell. Fits that fail to converge (or see a single class) are
/// recorded with `converged = false`; other numerical errors abort the run.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    record_timing: bool,
) -> Result<ExperimentResult, CliError> {
    let gammas = cfg.gammas();
    let base = GeneratorSpec {
        seed: 0,
        ..cfg.generator.clone()
    };
    let bayes = bayes_error(&base)?;

    let mut cells = Vec::new();
    for &level in &cfg.grid_levels {
        for &n in &cfg.sample_sizes {
            for (gamma_index, &gamma) in gammas.iter().enumerate() {
                for replicate in 0..cfg.replicates {
                    cells.push(Cell {
                        level,
                        n,
                        gamma_index,
                        gamma,
                        replicate,
                    });
                }
            }
        }
    }

    let run_cell = |cell: &Cell| -> Result<ResultRow, CliError> {
        let start = Instant::now();
        let grid = dyadic_grid(cell.level)?;
        let d = grid.len();
        let train_spec = GeneratorSpec {
            seed: derive_seed(cfg.seed, TRAIN_STREAM, cell.replicate, cell.n),
            ..base.clone()
        };
        let test_spec = GeneratorSpec {
            seed: derive_seed(cfg.seed, TEST_STREAM, cell.replicate, 0),
            ..base.clone()
        };
        let train = generate(&train_spec, &grid, cell.n)?;
        let test = generate(&test_spec, &grid, cfg.test_size)?;
        let fit_cfg = FunctionalSvmConfig {
            spec: base.spec,
            grid,
            gamma: cell.gamma,
            jitter: cfg.jitter,
            beta: cfg.beta_for(d),
            c_override: cfg.c_override,
        };
        let c_used = fit_cfg.c_for(cell.n)?;
        let samples: Vec<_> = train.iter().map(|s| s.function.clone()).collect();
        let labels: Vec<i8> = train.iter().map(|s| s.label).collect();

        let (train_error, test_error, converged) = match fit(&samples, &labels, &fit_cfg) {
            Ok(model) => (
                error_rate(&model, &train)?,
                error_rate(&model, &test)?,
                true,
            ),
            Err(Error::ConvergenceFailure { .. }) | Err(Error::DegenerateLabels) => {
                (f64::NAN, f64::NAN, false)
            }
            Err(e) => return Err(e.into()),
        };
        let wall_time_ms = if record_timing {
            start.elapsed().as_millis() as u64
        } else {
            0
        };
        Ok(ResultRow {
            level: cell.level,
            d,
            n: cell.n,
            gamma_index: cell.gamma_index,
            gamma: cell.gamma,
            replicate: cell.replicate,
            train_error,
            test_error,
            bayes_error: bayes,
            c_used,
            converged,
            wall_time_ms,
        })
    };

    let mut rows = cells
        .par_iter()
        .map(run_cell)
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| {
        (a.level, a.n, a.gamma_index, a.replicate).cmp(&(b.level, b.n, b.gamma_index, b.replicate))
    });
    Ok(ExperimentResult {
        rows,
        bayes_error: bayes,
    })
}

pub fn render_results_csv(result: &ExperimentResult) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.d,
            r.n,
            r.gamma,
            r.replicate,
            r.train_error,
            r.test_error,
            r.bayes_error,
            r.c_used,
            r.converged,
            r.wall_time_ms
        );
    }
    out
}

/// Mean and sample standard deviation of converged test errors per `(d, n, γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub d: usize,
    pub n: usize,
    pub gamma: f64,
    pub mean_test_error: f64,
    pub std_test_error: f64,
    pub converged: usize,
    pub total: usize,
}

pub fn summarize(result: &ExperimentResult) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    let mut groups: Vec<(usize, usize, usize, f64, Vec<&ResultRow>)> = Vec::new();
    for r in &result.rows {
        match groups.last_mut() {
            Some(g) if (g.0, g.1, g.2) == (r.d, r.n, r.gamma_index) => g.4.push(r),
            _ => groups.push((r.d, r.n, r.gamma_index, r.gamma, vec![r])),
        }
    }
    for (d, n, _, gamma, rows) in groups {
        let errs: Vec<f64> = rows
            .iter()
            .filter(|r| r.converged)
            .map(|r| r.test_error)
            .collect();
        let k = errs.len();
        let mean = if k > 0 {
            errs.iter().sum::<f64>() / k as f64
        } else {
            f64::NAN
        };
        let std = if k > 1 {
            (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
        } else {
            0.0
        };
        out.push(CellSummary {
            d,
            n,
            gamma,
            mean_test_error: mean,
            std_test_error: std,
            converged: k,
            total: rows.len(),
        });
    }
    out
}

pub fn render_summary(summary: &[CellSummary], bayes: f64) -> String {
    let mut out = format!("Bayes error: {bayes:.4}\n");
    let _ = writeln!(
        out,
        "{:>6} {:>7} {:>8} {:>18} {:>10}",
        "d", "n", "gamma", "test error", "converged"
    );
    for s in summary {
        let _ = writeln!(
            out,
            "{:>6} {:>7} {:>8} {:>9.4} ± {:<6.4} {:>5}/{}",
            s.d, s.n, s.gamma, s.mean_test_error, s.std_test_error, s.converged, s.total
        );
    }
    out
}

pub fn failed_fraction(result: &ExperimentResult) -> f64 {
    let failed = result.rows.iter().filter(|r| !r.converged).count();
    failed as f64 / result.rows.len().max(1) as f64
}

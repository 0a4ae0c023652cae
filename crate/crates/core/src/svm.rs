//! Soft-margin SVM dual on a precomputed kernel matrix, solved by SMO.
//!
//! The dual is
//!
//! ```text
//! max_α  Σ α_i − ½ Σ_ij α_i α_j y_i y_j k(x_i, x_j)
//! s.t.   Σ α_i y_i = 0,   0 ≤ α_i ≤ C
//! ```
//!
//! Each iteration picks the maximal violating pair and solves the
//! two-variable subproblem in closed form.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Curvature floor for pairs whose kernel rows coincide.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Box constraint `C`.
    pub c_bound: f64,
    /// Gaussian width, carried for the kernel that produced the matrix.
    pub gamma: f64,
    pub kkt_tolerance: f64,
    /// Consecutive sweeps of `n` pair updates without progress before giving
    /// up; `None` means `10·n`.
    pub max_passes: Option<usize>,
}

impl SvmParams {
    pub const DEFAULT_KKT_TOLERANCE: f64 = 1e-6;

    pub fn new(c_bound: f64, gamma: f64) -> Result<Self> {
        let params = Self {
            c_bound,
            gamma,
            kkt_tolerance: Self::DEFAULT_KKT_TOLERANCE,
            max_passes: None,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_kkt_tolerance(mut self, tol: f64) -> Result<Self> {
        self.kkt_tolerance = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn with_max_passes(mut self, passes: usize) -> Result<Self> {
        self.max_passes = Some(passes);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("C", self.c_bound)?;
        positive("gamma", self.gamma)?;
        positive("kkt_tolerance", self.kkt_tolerance)?;
        if self.max_passes == Some(0) {
            return Err(Error::InvalidParameter(
                "max_passes must be positive".into(),
            ));
        }
        Ok(())
    }

    fn stall_limit(&self, n: usize) -> usize {
        self.max_passes.unwrap_or(10 * n)
    }
}

/// Counts consecutive sweeps of `n` pair updates that neither raise the dual
/// objective beyond rounding nor reach a new smallest KKT gap.
struct Progress {
    best_objective: f64,
    best_gap: f64,
    stalled: usize,
}

impl Progress {
    fn new() -> Self {
        Self {
            best_objective: f64::NEG_INFINITY,
            best_gap: f64::INFINITY,
            stalled: 0,
        }
    }

    /// Records the state at a sweep boundary; returns the current stall count.
    fn end_sweep(&mut self, objective: f64, gap: f64) -> usize {
        let rose = objective > self.best_objective + f64::EPSILON * (1.0 + objective.abs());
        let narrowed = gap < self.best_gap;
        if rose || narrowed {
            self.stalled = 0;
        } else {
            self.stalled += 1;
        }
        self.best_objective = self.best_objective.max(objective);
        self.best_gap = self.best_gap.min(gap);
        self.stalled
    }
}

/// Optimal multipliers of the dual.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub dual_objective: f64,
    pub iterations: usize,
}

/// Solves the soft-margin dual for a symmetric PSD kernel matrix.
pub fn solve_dual(
    kernel: &DMatrix<f64>,
    labels: &[i8],
    params: &SvmParams,
) -> Result<DualSolution> {
    solve_dual_observed(kernel, labels, params, |_, _| {})
}

/// [`solve_dual`], calling `observer(alphas, objective)` after every pair update.
pub fn solve_dual_observed<F>(
    kernel: &DMatrix<f64>,
    labels: &[i8],
    params: &SvmParams,
    mut observer: F,
) -> Result<DualSolution>
where
    F: FnMut(&[f64], f64),
{
    params.validate()?;
    validate_problem(kernel, labels)?;

    let n = labels.len();
    let c = params.c_bound;
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[(i, j)];
    let stop_gap = 0.5 * params.kkt_tolerance;
    let stall_limit = params.stall_limit(n);

    let mut alpha = vec![0.0; n];
    // Gradient of ½αᵀQα − Σα.
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut progress = Progress::new();

    loop {
        let (i, j, gap) = select_pair(&alpha, &grad, &y, c);
        if gap <= stop_gap {
            break;
        }
        if iterations % n == 0
            && progress.end_sweep(incremental_objective(&alpha, &grad), gap) >= stall_limit
        {
            let bias = compute_bias(&alpha, &grad, &y, c);
            let worst_violation = kkt_report(kernel, labels, &alpha, bias, params)?;
            return Err(Error::ConvergenceFailure {
                iterations,
                worst_violation,
            });
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (qii, qjj, qij) = (q(i, i), q(j, j), q(i, j));
        if y[i] != y[j] {
            let curvature = positive_or_tau(qii + qjj + 2.0 * qij);
            let delta = (-grad[i] - grad[j]) / curvature;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let curvature = positive_or_tau(qii + qjj - 2.0 * qij);
            let delta = (grad[i] - grad[j]) / curvature;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
        observer(&alpha, incremental_objective(&alpha, &grad));
    }

    let bias = compute_bias(&alpha, &grad, &y, c);
    let dual_objective = dual_objective(kernel, labels, &alpha);
    Ok(DualSolution {
        alphas: alpha,
        bias,
        dual_objective,
        iterations,
    })
}

fn positive_or_tau(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        TAU
    }
}

fn in_up(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha < c) || (y < 0.0 && alpha > 0.0)
}

fn in_low(alpha: f64, y: f64, c: f64) -> bool {
    (y < 0.0 && alpha < c) || (y > 0.0 && alpha > 0.0)
}

/// Maximal violating pair: `i` maximizes `−y_t G_t` over the up set, `j`
/// minimizes it over the low set. Ties go to the lowest index.
fn select_pair(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> (usize, usize, f64) {
    let mut i = usize::MAX;
    let mut j = usize::MAX;
    let mut up_max = f64::NEG_INFINITY;
    let mut low_min = f64::INFINITY;
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if in_up(alpha[t], y[t], c) && v > up_max {
            up_max = v;
            i = t;
        }
        if in_low(alpha[t], y[t], c) && v < low_min {
            low_min = v;
            j = t;
        }
    }
    if i == usize::MAX || j == usize::MAX {
        return (0, 0, f64::NEG_INFINITY);
    }
    (i, j, up_max - low_min)
}

/// Mean of `y_i − Σ_j α_j y_j k_ji` over free vectors, else the midpoint of
/// the interval of biases compatible with the KKT conditions.
fn compute_bias(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut up_max = f64::NEG_INFINITY;
    let mut low_min = f64::INFINITY;
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += v;
            free_count += 1;
        }
        if in_up(alpha[t], y[t], c) {
            up_max = up_max.max(v);
        }
        if in_low(alpha[t], y[t], c) {
            low_min = low_min.min(v);
        }
    }
    if free_count > 0 {
        free_sum / free_count as f64
    } else if up_max.is_finite() && low_min.is_finite() {
        0.5 * (up_max + low_min)
    } else if up_max.is_finite() {
        up_max
    } else {
        low_min
    }
}

fn incremental_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    // Σα − ½αᵀQα with Qα = G + 1.
    alpha
        .iter()
        .zip(grad)
        .map(|(&a, &g)| a - 0.5 * a * (g + 1.0))
        .sum()
}

/// `Σ α_i − ½ Σ α_i α_j y_i y_j k_ij`, evaluated from scratch.
pub fn dual_objective(kernel: &DMatrix<f64>, labels: &[i8], alphas: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        let yi = f64::from(labels[i]);
        for j in 0..n {
            quad += alphas[i] * alphas[j] * yi * f64::from(labels[j]) * kernel[(i, j)];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

fn validate_problem(kernel: &DMatrix<f64>, labels: &[i8]) -> Result<()> {
    let n = labels.len();
    if kernel.nrows() != kernel.ncols() {
        return Err(Error::InvalidKernelMatrix(format!(
            "matrix is {}x{}, not square",
            kernel.nrows(),
            kernel.ncols()
        )));
    }
    if kernel.nrows() != n {
        return Err(Error::DimensionError {
            context: "kernel matrix vs labels",
            expected: n,
            found: kernel.nrows(),
        });
    }
    if let Some(l) = labels.iter().find(|&&l| l != 1 && l != -1) {
        return Err(Error::InvalidParameter(format!(
            "labels must be +1 or -1, got {l}"
        )));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(Error::DegenerateLabels);
    }
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (kernel[(i, j)], kernel[(j, i)]);
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidKernelMatrix(format!(
                    "non-finite entry at ({i}, {j})"
                )));
            }
            if (a - b).abs() > 1e-10 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::InvalidKernelMatrix(format!(
                    "asymmetric entries at ({i}, {j}): {a} vs {b}"
                )));
            }
        }
        if !kernel[(i, i)].is_finite() {
            return Err(Error::InvalidKernelMatrix(format!(
                "non-finite entry at ({i}, {i})"
            )));
        }
    }
    Ok(())
}

/// Largest violation of the KKT conditions, in units of the functional margin.
///
/// `α_i = 0` needs `y_i f(x_i) ≥ 1`, `α_i = C` needs `y_i f(x_i) ≤ 1`, and
/// free multipliers need `y_i f(x_i) = 1`.
pub fn kkt_report(
    kernel: &DMatrix<f64>,
    labels: &[i8],
    alphas: &[f64],
    bias: f64,
    params: &SvmParams,
) -> Result<f64> {
    let n = labels.len();
    if kernel.nrows() != n || kernel.ncols() != n {
        return Err(Error::DimensionError {
            context: "kkt_report kernel",
            expected: n,
            found: kernel.nrows().max(kernel.ncols()),
        });
    }
    if alphas.len() != n {
        return Err(Error::DimensionError {
            context: "kkt_report alphas",
            expected: n,
            found: alphas.len(),
        });
    }
    let c = params.c_bound;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let f: f64 = (0..n)
            .filter(|&j| alphas[j] != 0.0)
            .map(|j| alphas[j] * f64::from(labels[j]) * kernel[(j, i)])
            .sum::<f64>()
            + bias;
        let margin = f64::from(labels[i]) * f;
        let violation = if alphas[i] <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if alphas[i] >= c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(violation);
    }
    Ok(worst)
}

/// Trained classifier: support vectors with their signed multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` for each support vector.
    dual_coefs: Vec<f64>,
    bias: f64,
    params: SvmParams,
    kernel_id: String,
}

impl SvmModel {
    pub fn new(
        support_vectors: Vec<Vec<f64>>,
        dual_coefs: Vec<f64>,
        bias: f64,
        params: SvmParams,
        kernel_id: impl Into<String>,
    ) -> Result<Self> {
        params.validate()?;
        if support_vectors.len() != dual_coefs.len() {
            return Err(Error::DimensionError {
                context: "support vectors vs dual coefficients",
                expected: support_vectors.len(),
                found: dual_coefs.len(),
            });
        }
        let c = params.c_bound;
        if let Some(a) = dual_coefs
            .iter()
            .find(|a| !(a.abs() > 0.0 && a.abs() <= c + 1e-12))
        {
            return Err(Error::InvalidParameter(format!(
                "dual coefficient {a} outside (0, C] in magnitude"
            )));
        }
        let balance: f64 = dual_coefs.iter().sum();
        if balance.abs() > 1e-8 * c * dual_coefs.len().max(1) as f64 {
            return Err(Error::InvalidParameter(format!(
                "dual coefficients sum to {balance:e}, expected 0"
            )));
        }
        if !bias.is_finite() {
            return Err(Error::InvalidParameter("bias must be finite".into()));
        }
        Ok(Self {
            support_vectors,
            dual_coefs,
            bias,
            params,
            kernel_id: kernel_id.into(),
        })
    }

    /// Keeps the samples with `α_i > 0`.
    pub fn from_solution(
        features: &[Vec<f64>],
        labels: &[i8],
        solution: &DualSolution,
        params: SvmParams,
        kernel_id: impl Into<String>,
    ) -> Result<Self> {
        if features.len() != solution.alphas.len() || labels.len() != solution.alphas.len() {
            return Err(Error::DimensionError {
                context: "features/labels vs alphas",
                expected: solution.alphas.len(),
                found: features.len(),
            });
        }
        let (support_vectors, dual_coefs) = solution
            .alphas
            .iter()
            .zip(features.iter().zip(labels))
            .filter(|(&a, _)| a > 0.0)
            .map(|(&a, (x, &y))| (x.clone(), a * f64::from(y)))
            .unzip();
        Self::new(
            support_vectors,
            dual_coefs,
            solution.bias,
            params,
            kernel_id,
        )
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    pub fn dual_coefs(&self) -> &[f64] {
        &self.dual_coefs
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn params(&self) -> &SvmParams {
        &self.params
    }

    pub fn kernel_id(&self) -> &str {
        &self.kernel_id
    }

    /// `f(x) = Σ α_i y_i k(s_i, x) + b` given `k(s_i, x)` for each support vector.
    pub fn decision_function(&self, kernel_row: &[f64]) -> Result<f64> {
        decision_function(self, kernel_row)
    }
}

pub fn decision_function(model: &SvmModel, kernel_row: &[f64]) -> Result<f64> {
    if kernel_row.len() != model.dual_coefs.len() {
        return Err(Error::DimensionError {
            context: "decision_function kernel row",
            expected: model.dual_coefs.len(),
            found: kernel_row.len(),
        });
    }
    Ok(model
        .dual_coefs
        .iter()
        .zip(kernel_row)
        .map(|(a, k)| a * k)
        .sum::<f64>()
        + model.bias)
}

/// Sign of a decision value, with `0 ↦ +1`.
pub fn classify(score: f64) -> i8 {
    if score >= 0.0 {
        1
    } else {
        -1
    }
}

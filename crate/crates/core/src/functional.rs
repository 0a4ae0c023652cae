//! Gaussian SVM on L-derivatives, run on raw discretizations.
//!
//! For interpolating splines `h_1, h_2` of discretizations `x_1, x_2`,
//! `||L h_1 − L h_2||²_{L²} = (x_1 − x_2)ᵀ K_d⁻¹ (x_1 − x_2)`, so the Gaussian
//! kernel on derivatives equals the Euclidean Gaussian kernel composed with
//! `K_d^{-1/2}`. The fit path never forms `K_d^{-1/2}`: each sample is mapped
//! once through the Cholesky factor (`z = L⁻¹x`) and distances are taken
//! between the mapped vectors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::GramFactor;
use crate::kernel::{Grid, KernelSpec};
use crate::lspline::{DiscretizedFunction, LSpline};
use crate::svm::{self, SvmModel, SvmParams};

pub const KERNEL_ID: &str = "gauss-lspline";

/// `exp(−γ (x_1 − x_2)ᵀ (K_d + λI)⁻¹ (x_1 − x_2))`.
pub fn spline_gauss_kernel(gf: &GramFactor, gamma: f64, x1: &[f64], x2: &[f64]) -> Result<f64> {
    check_gamma(gamma)?;
    if x1.len() != gf.dim() || x2.len() != gf.dim() {
        return Err(Error::DimensionError {
            context: "spline_gauss_kernel",
            expected: gf.dim(),
            found: if x1.len() != gf.dim() {
                x1.len()
            } else {
                x2.len()
            },
        });
    }
    let diff: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
    let dist = gf.quad_form_inverse(&diff, &diff)?;
    Ok((-gamma * dist).exp())
}

/// `exp(−γ ||L h_1 − L h_2||²)` from spline norms and inner products:
/// `||h_1||² − 2<h_1, h_2> + ||h_2||²`.
///
/// Agrees with [`spline_gauss_kernel`] on the source values when both splines
/// interpolate (no smoothing).
pub fn derivative_gauss_kernel(
    s1: &LSpline,
    s2: &LSpline,
    gf: &GramFactor,
    gamma: f64,
) -> Result<f64> {
    check_gamma(gamma)?;
    let dist = s1.norm_sq(gf)? - 2.0 * s1.inner_product(s2, gf)? + s2.norm_sq(gf)?;
    Ok((-gamma * dist.max(0.0)).exp())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )))
    }
}

/// Box constraint `C_n = n^(1−β)` with `0 < β < 1/d`; `β` defaults to `1/(2d)`.
pub fn c_schedule(n: usize, d: usize, beta: Option<f64>) -> Result<f64> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "schedule needs n ≥ 1 and d ≥ 1, got n = {n}, d = {d}"
        )));
    }
    let beta = match beta {
        Some(b) => {
            check_beta(b, d)?;
            b
        }
        None => default_beta(d),
    };
    Ok((n as f64).powf(1.0 - beta))
}

pub fn default_beta(d: usize) -> f64 {
    1.0 / (2.0 * d as f64)
}

pub fn check_beta(beta: f64, d: usize) -> Result<()> {
    let upper = 1.0 / d as f64;
    if beta > 0.0 && beta < upper {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "beta must lie in (0, 1/d) = (0, {upper}) for d = {d}, got {beta}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSvmConfig {
    pub spec: KernelSpec,
    pub grid: Grid,
    pub gamma: f64,
    pub jitter: f64,
    pub beta: Option<f64>,
    pub c_override: Option<f64>,
}

impl FunctionalSvmConfig {
    pub fn new(spec: KernelSpec, grid: Grid, gamma: f64) -> Result<Self> {
        let cfg = Self {
            spec,
            grid,
            gamma,
            jitter: 0.0,
            beta: None,
            c_override: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "jitter must be nonnegative, got {}",
                self.jitter
            )));
        }
        if let Some(b) = self.beta {
            check_beta(b, self.grid.len())?;
        }
        if let Some(c) = self.c_override {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "C override must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }

    /// `C` used when fitting `n` samples.
    pub fn c_for(&self, n: usize) -> Result<f64> {
        match self.c_override {
            Some(c) => Ok(c),
            None => c_schedule(n, self.grid.len(), self.beta),
        }
    }
}

/// Label and decision value for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: i8,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct FunctionalSvmModel {
    config: FunctionalSvmConfig,
    gram: GramFactor,
    core: SvmModel,
    c_used: f64,
    converged_iterations: usize,
    /// `L⁻¹ s` for each support vector `s`.
    mapped_support: Vec<Vec<f64>>,
}

impl FunctionalSvmModel {
    /// Reassembles a model from persisted parts.
    pub fn from_parts(config: FunctionalSvmConfig, core: SvmModel, c_used: f64) -> Result<Self> {
        config.validate()?;
        let gram = GramFactor::new(config.spec, &config.grid, config.jitter)?;
        let mapped_support = core
            .support_vectors()
            .iter()
            .map(|s| gram.forward_solve(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            gram,
            core,
            c_used,
            converged_iterations: 0,
            mapped_support,
        })
    }

    pub fn config(&self) -> &FunctionalSvmConfig {
        &self.config
    }

    pub fn gram(&self) -> &GramFactor {
        &self.gram
    }

    pub fn core(&self) -> &SvmModel {
        &self.core
    }

    pub fn c_used(&self) -> f64 {
        self.c_used
    }

    /// SMO iterations spent during `fit` (zero for reloaded models).
    pub fn iterations(&self) -> usize {
        self.converged_iterations
    }

    pub fn predict(&self, sample: &DiscretizedFunction) -> Result<Prediction> {
        predict(self, sample)
    }
}

fn check_grid(expected: &Grid, got: &Grid, what: &str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{what} is discretized on {} points that differ from the model grid ({} points)",
            got.len(),
            expected.len()
        )))
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Kernel matrix `exp(−γ ||L⁻¹x_i − L⁻¹x_j||²)` over Cholesky-mapped samples.
pub fn kernel_matrix(
    gf: &GramFactor,
    gamma: f64,
    samples: &[DiscretizedFunction],
) -> Result<DMatrix<f64>> {
    check_gamma(gamma)?;
    let mapped = samples
        .iter()
        .map(|s| gf.forward_solve(s.values()))
        .collect::<Result<Vec<_>>>()?;
    Ok(gauss_matrix(&mapped, gamma))
}

fn gauss_matrix(mapped: &[Vec<f64>], gamma: f64) -> DMatrix<f64> {
    let n = mapped.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in 0..i {
            let v = (-gamma * sq_dist(&mapped[i], &mapped[j])).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Trains the SVM on discretizations with the composed Gaussian kernel.
pub fn fit(
    samples: &[DiscretizedFunction],
    labels: &[i8],
    config: &FunctionalSvmConfig,
) -> Result<FunctionalSvmModel> {
    config.validate()?;
    if samples.len() != labels.len() {
        return Err(Error::DimensionError {
            context: "fit samples vs labels",
            expected: samples.len(),
            found: labels.len(),
        });
    }
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no training samples".into()));
    }
    for s in samples {
        check_grid(&config.grid, s.grid(), "training sample")?;
    }
    let gram = GramFactor::new(config.spec, &config.grid, config.jitter)?;
    let mapped = samples
        .iter()
        .map(|s| gram.forward_solve(s.values()))
        .collect::<Result<Vec<_>>>()?;
    let kernel = gauss_matrix(&mapped, config.gamma);

    let c_used = config.c_for(samples.len())?;
    let params = SvmParams::new(c_used, config.gamma)?;
    let solution = svm::solve_dual(&kernel, labels, &params)?;

    let raw: Vec<Vec<f64>> = samples.iter().map(|s| s.values().to_vec()).collect();
    let core = SvmModel::from_solution(&raw, labels, &solution, params, KERNEL_ID)?;
    let mapped_support = solution
        .alphas
        .iter()
        .zip(mapped)
        .filter(|(&a, _)| a > 0.0)
        .map(|(_, z)| z)
        .collect();
    Ok(FunctionalSvmModel {
        config: config.clone(),
        gram,
        core,
        c_used,
        converged_iterations: solution.iterations,
        mapped_support,
    })
}

/// Decision value `Σ α_i y_i k(s_i, x) + b` and its sign (`0 ↦ +1`).
pub fn predict(model: &FunctionalSvmModel, sample: &DiscretizedFunction) -> Result<Prediction> {
    check_grid(&model.config.grid, sample.grid(), "sample")?;
    let z = model.gram.forward_solve(sample.values())?;
    let gamma = model.config.gamma;
    let row: Vec<f64> = model
        .mapped_support
        .iter()
        .map(|s| (-gamma * sq_dist(s, &z)).exp())
        .collect();
    let score = model.core.decision_function(&row)?;
    Ok(Prediction {
        label: svm::classify(score),
        score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lspline::interpolate;

    fn toy() -> (GramFactor, Grid) {
        let grid = Grid::new(vec![0.5, 1.0]).unwrap();
        let gf = GramFactor::new(KernelSpec::new(1).unwrap(), &grid, 0.0).unwrap();
        (gf, grid)
    }

    fn df(grid: &Grid, v: &[f64]) -> DiscretizedFunction {
        DiscretizedFunction::new(grid.clone(), v.to_vec()).unwrap()
    }

    #[test]
    fn worked_kernel_value() {
        let (gf, grid) = toy();
        let k = spline_gauss_kernel(&gf, 0.25, &[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((k - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(
            spline_gauss_kernel(&gf, 0.25, &[0.3, 0.7], &[0.3, 0.7]).unwrap(),
            1.0
        );

        let spec = KernelSpec::new(1).unwrap();
        let s1 = interpolate(&df(&grid, &[1.0, 0.0]), spec, &gf).unwrap();
        let s0 = interpolate(&df(&grid, &[0.0, 0.0]), spec, &gf).unwrap();
        let kd = derivative_gauss_kernel(&s1, &s0, &gf, 0.25).unwrap();
        assert!((kd - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(derivative_gauss_kernel(&s1, &s1, &gf, 0.25).unwrap(), 1.0);
    }

    #[test]
    fn kernel_errors() {
        let (gf, _) = toy();
        assert!(matches!(
            spline_gauss_kernel(&gf, 1.0, &[1.0], &[0.0, 0.0]),
            Err(Error::DimensionError { .. })
        ));
        assert!(spline_gauss_kernel(&gf, 0.0, &[1.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn schedule_values() {
        let c = c_schedule(100, 4, Some(0.125)).unwrap();
        assert!((c - 100f64.powf(0.875)).abs() < 1e-9 * c);
        assert!((c - 56.2341).abs() < 1e-4);
        assert_eq!(c_schedule(1, 7, None).unwrap(), 1.0);
        assert!((c_schedule(1000, 10, None).unwrap() - 707.946).abs() < 1e-3);
        assert!(c_schedule(100, 4, Some(0.25)).is_err());
        assert!(c_schedule(100, 4, Some(0.0)).is_err());
        assert!(c_schedule(0, 4, None).is_err());
    }

    #[test]
    fn fit_two_point_toy() {
        let (_, grid) = toy();
        let mut cfg =
            FunctionalSvmConfig::new(KernelSpec::new(1).unwrap(), grid.clone(), 0.25).unwrap();
        cfg.c_override = Some(10.0);
        let samples = vec![df(&grid, &[1.0, 0.0]), df(&grid, &[0.0, 0.0])];
        let model = fit(&samples, &[1, -1], &cfg).unwrap();
        let a = 1.0 / (1.0 - (-1.0f64).exp());
        assert_eq!(model.core().dual_coefs().len(), 2);
        assert!((model.core().dual_coefs()[0] - a).abs() < 1e-9);
        assert!((model.core().dual_coefs()[1] + a).abs() < 1e-9);
        assert!(model.core().bias().abs() < 1e-12);
        assert_eq!(model.c_used(), 10.0);

        let p = model.predict(&samples[0]).unwrap();
        assert_eq!(p.label, 1);
        assert!((p.score - 1.0).abs() < 1e-9);
        let p = model.predict(&samples[1]).unwrap();
        assert_eq!(p.label, -1);
        assert!((p.score + 1.0).abs() < 1e-9);
        let p = model.predict(&df(&grid, &[0.5, 0.0])).unwrap();
        assert_eq!(p.score, 0.0);
        assert_eq!(p.label, 1);
    }

    #[test]
    fn fit_errors() {
        let (_, grid) = toy();
        let cfg = FunctionalSvmConfig::new(KernelSpec::new(1).unwrap(), grid.clone(), 1.0).unwrap();
        let samples = vec![df(&grid, &[1.0, 0.0]), df(&grid, &[0.0, 0.0])];
        assert_eq!(
            fit(&samples, &[-1, -1], &cfg).unwrap_err(),
            Error::DegenerateLabels
        );

        let other = Grid::new(vec![0.25, 1.0]).unwrap();
        let mixed = vec![df(&grid, &[1.0, 0.0]), df(&other, &[0.0, 0.0])];
        assert!(matches!(
            fit(&mixed, &[1, -1], &cfg),
            Err(Error::GridMismatch(_))
        ));

        let model = fit(&samples, &[1, -1], &cfg).unwrap();
        assert!(matches!(
            model.predict(&df(&other, &[0.0, 0.0])),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn config_rejects_bad_beta() {
        let (_, grid) = toy();
        let mut cfg = FunctionalSvmConfig::new(KernelSpec::new(1).unwrap(), grid, 1.0).unwrap();
        cfg.beta = Some(0.5);
        assert!(cfg.validate().is_err());
        cfg.beta = Some(0.25);
        assert!(cfg.validate().is_ok());
        assert!((cfg.c_for(16).unwrap() - 16f64.powf(0.75)).abs() < 1e-12);
    }
}

//! Synthetic two-class curves with a known Bayes error.
//!
//! Each curve is a finite combination of kernel sections,
//! `x = Σ_a w_a K(u_a, ·)` with anchors `u_a = a / (q + 1)`, so it lies in
//! `H_1` exactly. Class `y` draws `w = y δ w⁰ + σ ε` where `w⁰` is the unit
//! alternating pattern `(+1, −1, +1, ...) / √q` and `ε` is standard normal
//! truncated to `[−6, 6]`. Labels are then flipped with probability `ρ`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Grid, KernelSpec};
use crate::lspline::DiscretizedFunction;

pub const MAX_DYADIC_LEVEL: u32 = 11;
pub const DEFAULT_ANCHOR_COUNT: usize = 7;
const NOISE_TRUNCATION: f64 = 6.0;

/// `{k / 2^level : k = 1..2^level}`.
pub fn dyadic_grid(level: u32) -> Result<Grid> {
    if !(1..=MAX_DYADIC_LEVEL).contains(&level) {
        return Err(Error::InvalidParameter(format!(
            "dyadic level must be in 1..={MAX_DYADIC_LEVEL}, got {level}"
        )));
    }
    let d = 1usize << level;
    Grid::new((1..=d).map(|k| k as f64 / d as f64).collect())
}

fn default_anchor_count() -> usize {
    DEFAULT_ANCHOR_COUNT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(rename = "order")]
    pub spec: KernelSpec,
    #[serde(default = "default_anchor_count")]
    pub anchor_count: usize,
    pub class_separation: f64,
    pub noise_scale: f64,
    pub flip_prob: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.anchor_count == 0 {
            return Err(Error::InvalidParameter(
                "anchor_count must be positive".into(),
            ));
        }
        if !(self.class_separation > 0.0 && self.class_separation.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "class_separation must be > 0, got {}",
                self.class_separation
            )));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise_scale must be >= 0, got {}",
                self.noise_scale
            )));
        }
        if !(0.0..0.5).contains(&self.flip_prob) {
            return Err(Error::InvalidParameter(format!(
                "flip_prob must lie in [0, 0.5), got {}",
                self.flip_prob
            )));
        }
        Ok(())
    }

    /// `u_a = a / (q + 1)`, `a = 1..q`.
    pub fn anchors(&self) -> Vec<f64> {
        let q = self.anchor_count;
        (1..=q).map(|a| a as f64 / (q + 1) as f64).collect()
    }

    /// Unit coefficient direction separating the classes.
    pub fn unit_pattern(&self) -> Vec<f64> {
        let q = self.anchor_count;
        let s = 1.0 / (q as f64).sqrt();
        (0..q).map(|a| if a % 2 == 0 { s } else { -s }).collect()
    }

    /// Upper bound on `||x||_1` over all generated curves:
    /// `(δ + 6σ√q) · sqrt(λ_max(G_q))` with `G_q` the anchor Gram matrix.
    pub fn norm_bound(&self) -> f64 {
        let u = self.anchors();
        let q = u.len();
        let g = nalgebra::DMatrix::from_fn(q, q, |i, j| self.spec.eval_unchecked(u[i], u[j]));
        let lambda_max = g.symmetric_eigenvalues().max();
        (self.class_separation + NOISE_TRUNCATION * self.noise_scale * (q as f64).sqrt())
            * lambda_max.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub function: DiscretizedFunction,
    pub label: i8,
    /// Label before the flip, kept for Bayes-error accounting.
    pub clean_label: i8,
}

/// Draws `n` labeled curves on `grid`. The stream is fully determined by `gs.seed`.
pub fn generate(gs: &GeneratorSpec, grid: &Grid, n: usize) -> Result<Vec<LabeledSample>> {
    Ok(generate_with_coefficients(gs, grid, n)?
        .into_iter()
        .map(|(s, _)| s)
        .collect())
}

/// Like [`generate`], also returning the anchor coefficients `w` of each curve.
pub fn generate_with_coefficients(
    gs: &GeneratorSpec,
    grid: &Grid,
    n: usize,
) -> Result<Vec<(LabeledSample, Vec<f64>)>> {
    gs.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be positive".into(),
        ));
    }
    let anchors = gs.anchors();
    let pattern = gs.unit_pattern();
    // K(u_a, t_k), row per grid point
    let sections: Vec<Vec<f64>> = grid
        .points()
        .iter()
        .map(|&t| {
            anchors
                .iter()
                .map(|&u| gs.spec.eval_unchecked(u, t))
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(gs.seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let clean_label: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let y = f64::from(clean_label);
        let w: Vec<f64> = pattern
            .iter()
            .map(|&p| y * gs.class_separation * p + gs.noise_scale * truncated_normal(&mut rng))
            .collect();
        let values = sections
            .iter()
            .map(|row| row.iter().zip(&w).map(|(k, c)| k * c).sum())
            .collect();
        let label = if rng.random::<f64>() < gs.flip_prob {
            -clean_label
        } else {
            clean_label
        };
        out.push((
            LabeledSample {
                function: DiscretizedFunction::new(grid.clone(), values)?,
                label,
                clean_label,
            },
            w,
        ));
    }
    Ok(out)
}

fn truncated_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let e: f64 = rng.sample(StandardNormal);
        if e.abs() <= NOISE_TRUNCATION {
            return e;
        }
    }
}

/// Bayes error of the generator.
///
/// Given the curve, the coefficients `w` are identified, and
/// `w | y ~ N(y δ w⁰, σ² I)` with `||w⁰|| = 1`; the optimal rule is
/// `sign(w⁰ᵀ w)` with clean error `Φ(−δ/σ)`. Label noise gives
/// `ρ + (1 − 2ρ) Φ(−δ/σ)`. The `[−6, 6]` truncation shifts this by less
/// than `1e-9` and is ignored.
pub fn bayes_error(gs: &GeneratorSpec) -> Result<f64> {
    gs.validate()?;
    let rho = gs.flip_prob;
    if gs.noise_scale == 0.0 {
        return Ok(rho);
    }
    let overlap = std_normal_cdf(-gs.class_separation / gs.noise_scale);
    Ok(rho + (1.0 - 2.0 * rho) * overlap)
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Deterministic shuffled split; `round(n · train_fraction)` samples go to training.
pub fn split<T: Clone>(
    samples: &[T],
    labels_of: impl Fn(&T) -> i8,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "split needs at least two samples".into(),
        ));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let has = |c: i8| samples.iter().any(|s| labels_of(s) == c);
    if !(has(1) && has(-1)) {
        return Err(Error::DegenerateLabels);
    }
    let n = samples.len();
    let n_train = (n as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidParameter(format!(
            "train_fraction {train_fraction} leaves an empty side for {n} samples"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train = order[..n_train]
        .iter()
        .map(|&i| samples[i].clone())
        .collect();
    let test = order[n_train..]
        .iter()
        .map(|&i| samples[i].clone())
        .collect();
    Ok((train, test))
}

/// [`split`] for generated samples.
pub fn split_samples(
    samples: &[LabeledSample],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledSample>, Vec<LabeledSample>)> {
    split(samples, |s| s.label, train_fraction, seed)
}

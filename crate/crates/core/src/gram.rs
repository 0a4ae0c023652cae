//! Gram matrices `K_d = (K(t_i, t_j))` and the quadratic forms they induce.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::kernel::{Grid, KernelSpec};

/// Pivots at or below `PIVOT_RELATIVE_TOLERANCE * max_i K_d[i, i]` count as singular.
pub const PIVOT_RELATIVE_TOLERANCE: f64 = 1e-12;

/// Largest grid for which the eigendecomposition path in [`GramFactor::whiten`] runs.
pub const MAX_WHITEN_DIM: usize = 2048;

/// Above this size the condition estimate uses Cholesky pivots instead of eigenvalues.
pub const EXACT_CONDITION_MAX_DIM: usize = 64;

/// Gram matrix of a grid, factored as `K_d + λI = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct GramFactor {
    spec: KernelSpec,
    grid: Grid,
    matrix: DMatrix<f64>,
    jitter: f64,
    factor: DMatrix<f64>,
    condition_estimate: f64,
    eigen: OnceLock<SymmetricEigen<f64, nalgebra::Dyn>>,
}

impl GramFactor {
    /// Assembles and factors `K_d + jitter·I`.
    pub fn new(spec: KernelSpec, grid: &Grid, jitter: f64) -> Result<Self> {
        if !(jitter >= 0.0 && jitter.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "jitter must be a finite nonnegative number, got {jitter}"
            )));
        }
        let matrix = assemble(&spec, grid);
        let max_diag = matrix.diagonal().max();
        let tolerance = PIVOT_RELATIVE_TOLERANCE * max_diag;

        let factor = match cholesky(&matrix, jitter, tolerance) {
            Ok(factor) => factor,
            Err((pivot_index, pivot)) => {
                let suggested_jitter = (-16..=-2)
                    .map(|e| 10f64.powi(e))
                    .filter(|&j| j > jitter)
                    .find(|&j| cholesky(&matrix, j, tolerance).is_ok());
                return Err(Error::IllConditionedGram {
                    pivot_index,
                    pivot,
                    tolerance,
                    suggested_jitter,
                });
            }
        };

        let d = grid.len();
        let condition_estimate = if d <= EXACT_CONDITION_MAX_DIM {
            let mut shifted = matrix.clone();
            for i in 0..d {
                shifted[(i, i)] += jitter;
            }
            let eig = shifted.symmetric_eigenvalues();
            eig.max() / eig.min()
        } else {
            let diag = factor.diagonal();
            (diag.max() / diag.min()).powi(2)
        };

        Ok(Self {
            spec,
            grid: grid.clone(),
            matrix,
            jitter,
            factor,
            condition_estimate,
            eigen: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    /// The unjittered matrix `K_d`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower-triangular `L` with `L Lᵀ = K_d + λI`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Eigenvalue ratio of `K_d + λI` for small grids, squared pivot ratio otherwise.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub(crate) fn matches(&self, spec: KernelSpec, grid: &Grid) -> bool {
        self.spec == spec && &self.grid == grid
    }

    fn check_len(&self, context: &'static str, v: &[f64]) -> Result<()> {
        if v.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionError {
                context,
                expected: self.dim(),
                found: v.len(),
            })
        }
    }

    /// `L⁻¹ u` by forward substitution.
    pub fn forward_solve(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len("forward_solve", u)?;
        Ok(forward(&self.factor, u))
    }

    /// `(K_d + λI)⁻¹ u`.
    pub fn solve(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len("solve", u)?;
        let z = forward(&self.factor, u);
        Ok(backward(&self.factor, z))
    }

    /// `uᵀ (K_d + λI)⁻¹ v`, computed as `(L⁻¹u)·(L⁻¹v)`.
    pub fn quad_form_inverse(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_len("quad_form_inverse", u)?;
        self.check_len("quad_form_inverse", v)?;
        let zu = forward(&self.factor, u);
        if std::ptr::eq(u, v) {
            return Ok(dot(&zu, &zu));
        }
        let zv = forward(&self.factor, v);
        Ok(dot(&zu, &zv))
    }

    /// Symmetric inverse square root `(K_d + λI)^{-1/2} u` from an eigendecomposition.
    ///
    /// The decomposition is computed on first use and cached.
    pub fn whiten(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len("whiten", u)?;
        if self.dim() > MAX_WHITEN_DIM {
            return Err(Error::DimensionError {
                context: "whiten (grid too large for the eigen path)",
                expected: MAX_WHITEN_DIM,
                found: self.dim(),
            });
        }
        let eig = self.eigen.get_or_init(|| {
            let mut shifted = self.matrix.clone();
            for i in 0..self.dim() {
                shifted[(i, i)] += self.jitter;
            }
            SymmetricEigen::new(shifted)
        });
        let u = DVector::from_column_slice(u);
        let mut coords = eig.eigenvectors.tr_mul(&u);
        for (c, &lambda) in coords.iter_mut().zip(eig.eigenvalues.iter()) {
            *c /= lambda.sqrt();
        }
        Ok((&eig.eigenvectors * coords).as_slice().to_vec())
    }
}

/// Builds the Gram matrix of `grid` and factors `K_d + jitter·I`.
pub fn gram_matrix(spec: KernelSpec, grid: &Grid, jitter: f64) -> Result<GramFactor> {
    GramFactor::new(spec, grid, jitter)
}

fn assemble(spec: &KernelSpec, grid: &Grid) -> DMatrix<f64> {
    let t = grid.points();
    let d = t.len();
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let k = spec.eval_unchecked(t[i], t[j]);
            m[(i, j)] = k;
            m[(j, i)] = k;
        }
    }
    m
}

/// Cholesky of `a + shift·I`; on failure returns the first offending pivot.
fn cholesky(
    a: &DMatrix<f64>,
    shift: f64,
    tolerance: f64,
) -> std::result::Result<DMatrix<f64>, (usize, f64)> {
    let n = a.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)] + shift;
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot.is_nan() || pivot <= tolerance {
            return Err((j, pivot));
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

fn forward(l: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

fn backward(l: &DMatrix<f64>, mut z: Vec<f64>) -> Vec<f64> {
    let n = z.len();
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

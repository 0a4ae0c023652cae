//! Support vector machines on the L-derivatives of smooth functions.
//!
//! A curve observed only through its values on a grid `t_1 < ... < t_d` is
//! represented by its minimal-norm L-spline interpolant in the reproducing
//! kernel Hilbert space `H_1` attached to `L = D^m`. Distances between the
//! derivatives `L h` of two interpolants reduce to a quadratic form in the
//! inverse Gram matrix `K_d^{-1}`, so a Gaussian SVM on derivatives is an
//! ordinary SVM on the raw discretizations with a whitened kernel.
//!
//! Module map:
//!
//! - [`kernel`]: reproducing kernels for `L = D^m`, `m ∈ {1, 2}`, and grids.
//! - [`gram`]: Gram matrices, their Cholesky factor, quadratic forms.
//! - [`lspline`]: interpolation, smoothing, norms and projections.
//! - [`svm`]: SMO solver for the soft-margin dual on a precomputed kernel.
//! - [`functional`]: the composed Gaussian kernel, the `C` schedule, fit/predict.
//! - [`datagen`]: synthetic two-class curves with known Bayes error.
//! - [`cli`]: the `fsvm` command-line harness.

pub mod cli;
pub mod datagen;
pub mod error;
pub mod functional;
pub mod gram;
pub mod kernel;
pub mod lspline;
pub mod svm;

pub use error::{Error, Result};
pub use functional::{FunctionalSvmConfig, FunctionalSvmModel, Prediction};
pub use gram::GramFactor;
pub use kernel::{Grid, KernelSpec};
pub use lspline::{DiscretizedFunction, LSpline};
pub use svm::{DualSolution, SvmModel, SvmParams};

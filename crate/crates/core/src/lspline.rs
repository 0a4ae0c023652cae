//! Minimal-norm L-spline interpolation of discretized functions.
//!
//! The interpolant of values `x` on a grid is `h = Σ c_i K(t_i, ·)` with
//! `K_d c = x`. It is the orthogonal projection in `H_1` of any function
//! matching `x` onto the span of the kernel sections at the grid, so
//! `<h_1, h_2>_1 = x_1ᵀ K_d⁻¹ x_2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::{dot, GramFactor};
use crate::kernel::{check_unit, Grid, KernelSpec};

/// Values of a function observed on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl DiscretizedFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionError {
                context: "discretized function values",
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "discretized values must be finite, got {v}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `h = Σ c_i K(t_i, ·)` fitted to discretized values, optionally smoothed.
#[derive(Debug, Clone, PartialEq)]
pub struct LSpline {
    spec: KernelSpec,
    grid: Grid,
    coefficients: Vec<f64>,
    source_values: Vec<f64>,
    jitter: f64,
}

/// Exact interpolant; `gf` must be the unjittered Gram factor of the sample's grid.
pub fn interpolate(df: &DiscretizedFunction, spec: KernelSpec, gf: &GramFactor) -> Result<LSpline> {
    if !gf.matches(spec, df.grid()) {
        return Err(mismatch("interpolate", gf, df.grid()));
    }
    if gf.jitter() != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "interpolation needs an unjittered Gram factor (got jitter {}); use smooth",
            gf.jitter()
        )));
    }
    Ok(LSpline {
        spec,
        grid: df.grid().clone(),
        coefficients: gf.solve(df.values())?,
        source_values: df.values().to_vec(),
        jitter: 0.0,
    })
}

/// Smoothing spline: coefficients solve `(K_d + λI) c = x`.
pub fn smooth(df: &DiscretizedFunction, spec: KernelSpec, lambda: f64) -> Result<LSpline> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "smoothing parameter must be positive, got {lambda}"
        )));
    }
    let gf = GramFactor::new(spec, df.grid(), lambda)?;
    Ok(LSpline {
        spec,
        grid: df.grid().clone(),
        coefficients: gf.solve(df.values())?,
        source_values: df.values().to_vec(),
        jitter: lambda,
    })
}

impl LSpline {
    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn source_values(&self) -> &[f64] {
        &self.source_values
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `h(t) = Σ c_i K(t_i, t)`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        check_unit(t)?;
        Ok(self
            .grid
            .points()
            .iter()
            .zip(&self.coefficients)
            .map(|(&ti, &c)| c * self.spec.eval_unchecked(ti, t))
            .sum())
    }

    /// `(L h)(t)`: piecewise constant for `m = 1`, piecewise linear for `m = 2`.
    pub fn l_derivative(&self, t: f64) -> Result<f64> {
        check_unit(t)?;
        if self.spec.order() == 1 && self.grid.points().contains(&t) {
            return Err(Error::AmbiguousAtKnot(t));
        }
        Ok(self
            .grid
            .points()
            .iter()
            .zip(&self.coefficients)
            .map(|(&ti, &c)| c * self.spec.green(ti, t))
            .sum())
    }

    fn check_factor(&self, context: &'static str, gf: &GramFactor) -> Result<()> {
        if gf.matches(self.spec, &self.grid) {
            Ok(())
        } else {
            Err(mismatch(context, gf, &self.grid))
        }
    }

    /// `||h||_1^2 = ∫ (Lh)^2`.
    ///
    /// For an interpolant with matching factor this is `xᵀ K_d⁻¹ x`; smoothing
    /// splines use `cᵀ K_d c`.
    pub fn norm_sq(&self, gf: &GramFactor) -> Result<f64> {
        self.inner_product(self, gf)
    }

    /// `<h_1, h_2>_1 = ∫ L h_1 · L h_2`.
    pub fn inner_product(&self, other: &LSpline, gf: &GramFactor) -> Result<f64> {
        self.check_factor("inner_product", gf)?;
        other.check_factor("inner_product", gf)?;
        if self.jitter == 0.0 && other.jitter == 0.0 && gf.jitter() == 0.0 {
            return gf.quad_form_inverse(&self.source_values, &other.source_values);
        }
        let k = gf.matrix();
        let kc = k * nalgebra::DVector::from_column_slice(&other.coefficients);
        Ok(dot(&self.coefficients, kc.as_slice()))
    }

    /// Squared `H_1` norm from the coefficients alone: `cᵀ K c = cᵀ (x − λ c)`.
    fn self_norm_sq(&self) -> f64 {
        self.coefficients
            .iter()
            .zip(&self.source_values)
            .map(|(&c, &x)| c * (x - self.jitter * c))
            .sum()
    }

    /// `||h − P_d h||_1^2` where `P_d` projects onto the kernel sections of `coarse_grid`.
    ///
    /// The projection is the interpolant of `h` on `coarse_grid`; the residual
    /// follows from `||h||^2 − ||P_d h||^2`.
    pub fn projection_residual_sq(
        &self,
        coarse_grid: &Grid,
        gf_coarse: &GramFactor,
    ) -> Result<f64> {
        if let Some(t) = coarse_grid.first_missing_from(&self.grid) {
            return Err(Error::GridNestingError(t));
        }
        let values = coarse_grid
            .points()
            .iter()
            .map(|&t| self.evaluate(t))
            .collect::<Result<Vec<_>>>()?;
        let coarse = DiscretizedFunction::new(coarse_grid.clone(), values)?;
        let projected = interpolate(&coarse, self.spec, gf_coarse)?;
        Ok(self.self_norm_sq() - projected.norm_sq(gf_coarse)?)
    }
}

fn mismatch(context: &'static str, gf: &GramFactor, grid: &Grid) -> Error {
    if gf.dim() != grid.len() {
        Error::DimensionError {
            context,
            expected: gf.dim(),
            found: grid.len(),
        }
    } else {
        Error::GridMismatch(format!(
            "{context}: spline grid or operator differs from the Gram factor"
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: u32) -> KernelSpec {
        KernelSpec::new(m).unwrap()
    }

    fn grid(p: &[f64]) -> Grid {
        Grid::new(p.to_vec()).unwrap()
    }

    fn fit(m: u32, p: &[f64], x: &[f64]) -> (LSpline, GramFactor) {
        let g = grid(p);
        let gf = GramFactor::new(spec(m), &g, 0.0).unwrap();
        let df = DiscretizedFunction::new(g, x.to_vec()).unwrap();
        (interpolate(&df, spec(m), &gf).unwrap(), gf)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn discretized_function_validation() {
        let g = grid(&[0.5, 1.0]);
        assert!(DiscretizedFunction::new(g.clone(), vec![1.0]).is_err());
        assert!(DiscretizedFunction::new(g, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn interpolation_coefficients() {
        let (s, _) = fit(1, &[0.5, 1.0], &[1.0, 0.0]);
        assert!(close(s.coefficients()[0], 4.0, 1e-12));
        assert!(close(s.coefficients()[1], -2.0, 1e-12));

        let (s, _) = fit(1, &[0.5], &[1.0]);
        assert!(close(s.coefficients()[0], 2.0, 1e-15));

        let (s, _) = fit(2, &[0.25, 0.5, 1.0], &[0.0, 0.0, 0.0]);
        assert!(s.coefficients().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn interpolate_rejects_mismatched_factor() {
        let gf = GramFactor::new(spec(1), &grid(&[0.5, 1.0]), 0.0).unwrap();
        let df = DiscretizedFunction::new(grid(&[0.5]), vec![1.0]).unwrap();
        assert!(matches!(
            interpolate(&df, spec(1), &gf),
            Err(Error::DimensionError { .. })
        ));
        let df = DiscretizedFunction::new(grid(&[0.25, 1.0]), vec![1.0, 0.0]).unwrap();
        assert!(interpolate(&df, spec(1), &gf).is_err());
        let df = DiscretizedFunction::new(grid(&[0.5, 1.0]), vec![1.0, 0.0]).unwrap();
        assert!(interpolate(&df, spec(2), &gf).is_err());
    }

    #[test]
    fn smoothing() {
        let df = DiscretizedFunction::new(grid(&[0.5]), vec![1.0]).unwrap();
        let s = smooth(&df, spec(1), 0.5).unwrap();
        assert!(close(s.coefficients()[0], 1.0, 1e-15));
        assert!(matches!(
            smooth(&df, spec(1), 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(smooth(&df, spec(1), -1.0).is_err());

        let df = DiscretizedFunction::new(grid(&[0.5, 1.0]), vec![1.0, 0.0]).unwrap();
        let s = smooth(&df, spec(1), 1e-8).unwrap();
        assert!(close(s.coefficients()[0], 4.0, 1e-6));
        assert!(close(s.coefficients()[1], -2.0, 1e-6));

        let df = DiscretizedFunction::new(grid(&[0.5, 1.0]), vec![0.0, 0.0]).unwrap();
        assert_eq!(
            smooth(&df, spec(2), 0.3).unwrap().coefficients(),
            &[0.0, 0.0]
        );
    }

    #[test]
    fn evaluation() {
        let (s, _) = fit(1, &[0.5, 1.0], &[1.0, 0.0]);
        assert!(close(s.evaluate(0.25).unwrap(), 0.5, 1e-12));
        assert!(close(s.evaluate(0.5).unwrap(), 1.0, 1e-12));
        assert!(close(s.evaluate(1.0).unwrap(), 0.0, 1e-12));
        assert_eq!(s.evaluate(0.0).unwrap(), 0.0);
        assert_eq!(s.evaluate(1.5), Err(Error::DomainError(1.5)));

        let (s, _) = fit(2, &[0.3, 0.6, 0.9], &[1.0, -1.0, 2.0]);
        assert_eq!(s.evaluate(0.0).unwrap(), 0.0);
        assert!(close(s.evaluate(0.6).unwrap(), -1.0, 1e-12));
    }

    #[test]
    fn derivative_values() {
        let (s, _) = fit(1, &[0.5, 1.0], &[1.0, 0.0]);
        assert!(close(s.l_derivative(0.25).unwrap(), 2.0, 1e-12));
        assert!(close(s.l_derivative(0.75).unwrap(), -2.0, 1e-12));
        assert_eq!(s.l_derivative(0.5), Err(Error::AmbiguousAtKnot(0.5)));
        assert_eq!(s.l_derivative(1.0), Err(Error::AmbiguousAtKnot(1.0)));

        let (s, _) = fit(2, &[0.3, 0.6, 0.9], &[1.0, -1.0, 2.0]);
        assert_eq!(s.l_derivative(1.0).unwrap(), 0.0);
        assert!(s.l_derivative(0.6).is_ok());
    }

    #[test]
    fn norms_and_inner_products() {
        let (s1, gf) = fit(1, &[0.5, 1.0], &[1.0, 0.0]);
        let (s2, _) = fit(1, &[0.5, 1.0], &[0.0, 1.0]);
        let (zero, _) = fit(1, &[0.5, 1.0], &[0.0, 0.0]);
        assert!(close(s1.norm_sq(&gf).unwrap(), 4.0, 1e-12));
        assert!(close(s1.inner_product(&s2, &gf).unwrap(), -2.0, 1e-12));
        assert_eq!(zero.norm_sq(&gf).unwrap(), 0.0);
        assert_eq!(s1.inner_product(&zero, &gf).unwrap(), 0.0);
        assert_eq!(
            s1.inner_product(&s1, &gf).unwrap(),
            s1.norm_sq(&gf).unwrap()
        );

        let (s, gf) = fit(1, &[0.5], &[1.0]);
        assert!(close(s.norm_sq(&gf).unwrap(), 2.0, 1e-15));

        let other_gf = GramFactor::new(spec(1), &grid(&[0.5]), 0.0).unwrap();
        assert!(s1.norm_sq(&other_gf).is_err());
    }

    #[test]
    fn smoothing_norm_uses_coefficients() {
        let g = grid(&[0.5, 1.0]);
        let gf = GramFactor::new(spec(1), &g, 0.0).unwrap();
        let df = DiscretizedFunction::new(g, vec![1.0, 0.0]).unwrap();
        let s = smooth(&df, spec(1), 0.1).unwrap();
        let c = s.coefficients();
        let expected = 0.5 * c[0] * c[0] + 2.0 * 0.5 * c[0] * c[1] + 1.0 * c[1] * c[1];
        assert!(close(s.norm_sq(&gf).unwrap(), expected, 1e-12));
        assert!(close(s.self_norm_sq(), expected, 1e-12));
    }

    #[test]
    fn projection_residuals() {
        let (fine, _) = fit(1, &[0.5, 1.0], &[1.0, 0.0]);
        let same = grid(&[0.5, 1.0]);
        let gf_same = GramFactor::new(spec(1), &same, 0.0).unwrap();
        assert!(fine.projection_residual_sq(&same, &gf_same).unwrap().abs() < 1e-12);

        let coarse = grid(&[0.5]);
        let gf_coarse = GramFactor::new(spec(1), &coarse, 0.0).unwrap();
        assert!(close(
            fine.projection_residual_sq(&coarse, &gf_coarse).unwrap(),
            2.0,
            1e-12
        ));

        let (zero, _) = fit(1, &[0.5, 1.0], &[0.0, 0.0]);
        assert_eq!(
            zero.projection_residual_sq(&coarse, &gf_coarse).unwrap(),
            0.0
        );

        let off = grid(&[0.25]);
        let gf_off = GramFactor::new(spec(1), &off, 0.0).unwrap();
        assert_eq!(
            fine.projection_residual_sq(&off, &gf_off),
            Err(Error::GridNestingError(0.25))
        );
    }
}

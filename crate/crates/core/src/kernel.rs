//! Reproducing kernels of `H_1` for `L = D^m` on `[0, 1]`.
//!
//! `H_1` is the subspace of the Sobolev space `H^m([0,1])` with
//! `h(0) = ... = h^(m-1)(0) = 0`, normed by `||h||_1^2 = ∫ (D^m h)^2`. Its
//! kernel is `K(s,t) = ∫ G_m(s,u) G_m(t,u) du` with the Green's function
//! `G_m(t,u) = (t-u)_+^(m-1) / (m-1)!`, which has closed forms for the
//! supported orders.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Differential operator `L = D^m` together with its reproducing kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct KernelSpec {
    order: u32,
}

impl KernelSpec {
    pub const SUPPORTED_ORDERS: [u32; 2] = [1, 2];

    pub fn new(order: u32) -> Result<Self> {
        if Self::SUPPORTED_ORDERS.contains(&order) {
            Ok(Self { order })
        } else {
            Err(Error::UnsupportedOperator { order })
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Kernel value for points already known to lie in `[0, 1]`.
    #[inline]
    pub(crate) fn eval_unchecked(&self, s: f64, t: f64) -> f64 {
        let (a, b) = if s <= t { (s, t) } else { (t, s) };
        match self.order {
            1 => a,
            // a^2 b / 2 - a^3 / 6
            _ => a * a * (3.0 * b - a) / 6.0,
        }
    }

    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        check_unit(s)?;
        check_unit(t)?;
        Ok(self.eval_unchecked(s, t))
    }

    /// Kernel section `K(t_i, ·)` hit by `L`: `(t_i - t)_+^(m-1) / (m-1)!`.
    ///
    /// For `m = 1` this is the indicator of `t < t_i`; callers must keep `t`
    /// away from `t_i` where it jumps.
    #[inline]
    pub(crate) fn green(&self, knot: f64, t: f64) -> f64 {
        match self.order {
            1 => {
                if t < knot {
                    1.0
                } else {
                    0.0
                }
            }
            _ => (knot - t).max(0.0),
        }
    }
}

impl TryFrom<u32> for KernelSpec {
    type Error = Error;

    fn try_from(order: u32) -> Result<Self> {
        Self::new(order)
    }
}

impl From<KernelSpec> for u32 {
    fn from(spec: KernelSpec) -> u32 {
        spec.order
    }
}

/// `K(s, t)` for the operator described by `spec`.
pub fn green_kernel(spec: &KernelSpec, s: f64, t: f64) -> Result<f64> {
    spec.eval(s, t)
}

pub(crate) fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::DomainError(t))
    }
}

/// Strictly increasing discretization points in `(0, 1]`.
///
/// Zero is excluded because every kernel section vanishes there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid(
                "grid must contain at least one point".into(),
            ));
        }
        for (k, &t) in points.iter().enumerate() {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidGrid(format!(
                    "point {k} = {t} is outside (0, 1]"
                )));
            }
        }
        if let Some(k) = points.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!(
                "points {k} and {} are not strictly increasing",
                k + 1
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when every point of `self` is also a point of `other`.
    pub fn is_subset_of(&self, other: &Grid) -> bool {
        self.first_missing_from(other).is_none()
    }

    pub(crate) fn first_missing_from(&self, other: &Grid) -> Option<f64> {
        self.points
            .iter()
            .copied()
            .find(|t| other.points.binary_search_by(|p| p.total_cmp(t)).is_err())
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;

    fn try_from(points: Vec<f64>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(grid: Grid) -> Vec<f64> {
        grid.points
    }
}

//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use fsvm::{Grid, LSpline};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Green's function `(t − u)_+^(m−1) / (m−1)!` of `D^m` with left-endpoint conditions.
pub fn green(m: u32, t: f64, u: f64) -> f64 {
    match m {
        1 => {
            if u < t {
                1.0
            } else {
                0.0
            }
        }
        2 => (t - u).max(0.0),
        _ => unreachable!(),
    }
}

/// Composite Simpson on `[a, b]` with `panels` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = panels.max(2) + panels % 2;
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// `∫_0^1 G_m(s,u) G_m(t,u) du` by composite Simpson, with `panels` total
/// panels split across the smooth pieces `[0,a]`, `[a,b]`, `[b,1]`.
pub fn kernel_by_quadrature(m: u32, s: f64, t: f64, panels: usize) -> f64 {
    let (a, b) = if s <= t { (s, t) } else { (t, s) };
    let f = |u: f64| green(m, s, u) * green(m, t, u);
    let pieces = [(0.0, a), (a, b), (b, 1.0)];
    pieces
        .iter()
        .map(|&(lo, hi)| {
            let share = ((hi - lo) * panels as f64).ceil() as usize;
            // One-sided limits at the piece ends so jumps at the breakpoints do not leak in.
            let nudge = 1e-13 * (hi - lo);
            simpson(|u| f(u.clamp(lo + nudge, hi - nudge)), lo, hi, share.max(2))
        })
        .sum()
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .unwrap();
        m.swap_rows(col, p);
        x.swap(col, p);
        for row in (col + 1)..n {
            let f = m[(row, col)] / m[(col, col)];
            for k in col..n {
                m[(row, k)] -= f * m[(col, k)];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in (col + 1)..n {
            s -= m[(col, k)] * x[k];
        }
        x[col] = s / m[(col, col)];
    }
    x
}

/// `L h(t)` evaluated straight from coefficients and the Green's function.
pub fn l_derivative_direct(s: &LSpline, t: f64) -> f64 {
    let m = s.spec().order();
    s.grid()
        .points()
        .iter()
        .zip(s.coefficients())
        .map(|(&ti, &c)| c * green(m, ti, t))
        .sum()
}

/// `∫_0^1 L h_1 · L h_2` integrated exactly piece by piece between knots.
///
/// Between knots `L h` is constant (`m = 1`, sampled at the midpoint) or
/// linear (`m = 2`, product integrated by Simpson's rule, exact for quadratics).
pub fn l2_inner_piecewise(s1: &LSpline, s2: &LSpline) -> f64 {
    let m = s1.spec().order();
    let mut breaks: Vec<f64> = vec![0.0, 1.0];
    breaks.extend_from_slice(s1.grid().points());
    breaks.extend_from_slice(s2.grid().points());
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let f = |t: f64| l_derivative_direct(s1, t) * l_derivative_direct(s2, t);
    breaks
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            if m == 1 {
                (b - a) * f(mid)
            } else {
                (b - a) / 6.0 * (f(a) + 4.0 * f(mid) + f(b))
            }
        })
        .sum()
}

/// Sorted random points in `(0, 1]` with minimum spacing `min_gap`.
pub fn random_grid(rng: &mut impl Rng, d: usize, min_gap: f64) -> Grid {
    loop {
        let mut p: Vec<f64> = (0..d).map(|_| rng.random_range(0.02..=1.0)).collect();
        p.sort_by(f64::total_cmp);
        if p.windows(2).all(|w| w[1] - w[0] >= min_gap) {
            return Grid::new(p).unwrap();
        }
    }
}

pub fn random_vec(rng: &mut impl Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn dual_objective(k: &DMatrix<f64>, y: &[i8], a: &[f64]) -> f64 {
    let n = a.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += a[i] * a[j] * f64::from(y[i]) * f64::from(y[j]) * k[(i, j)];
        }
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

/// Exact dual optimum by enumerating which multipliers sit at `0`, at `C`, or free.
///
/// For each assignment the free block solves the equality-constrained KKT
/// system; feasible stationary points are compared by objective.
pub fn brute_force_dual(k: &DMatrix<f64>, y: &[i8], c: f64) -> (f64, Vec<f64>) {
    let n = y.len();
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut state = vec![0u8; n];
        let mut z = code;
        for s in state.iter_mut() {
            *s = (z % 3) as u8;
            z /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state
            .iter()
            .map(|&s| if s == 1 { c } else { 0.0 })
            .collect();
        let fixed_balance: f64 = (0..n).map(|i| alpha[i] * yf[i]).sum();
        if free.is_empty() {
            if fixed_balance.abs() > 1e-12 * c * n as f64 {
                continue;
            }
        } else {
            // [Q_FF  y_F] [a_F]   [1 − Q_FB a_B]
            // [y_Fᵀ   0 ] [ b ] = [−y_Bᵀ a_B   ]
            let f = free.len();
            let mut sys = DMatrix::zeros(f + 1, f + 1);
            let mut rhs = vec![0.0; f + 1];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    sys[(r, s)] = yf[i] * yf[j] * k[(i, j)];
                }
                sys[(r, f)] = yf[i];
                sys[(f, r)] = yf[i];
                rhs[r] = 1.0
                    - (0..n)
                        .filter(|j| state[*j] == 1)
                        .map(|j| yf[i] * yf[j] * k[(i, j)] * c)
                        .sum::<f64>();
            }
            rhs[f] = -fixed_balance;
            if sys.clone().lu().determinant().abs() < 1e-13 {
                continue;
            }
            let sol = gauss_solve(&sys, &rhs);
            if free
                .iter()
                .enumerate()
                .any(|(r, _)| !(sol[r] >= -1e-12 && sol[r] <= c + 1e-12))
            {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, c);
            }
        }
        let obj = dual_objective(k, y, &alpha);
        if obj > best.0 {
            best = (obj, alpha);
        }
    }
    best
}

/// Gaussian kernel matrix on points in `R^p`.
pub fn gauss_kernel(points: &[Vec<f64>], gamma: f64) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = points[i]
            .iter()
            .zip(&points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (-gamma * d2).exp()
    })
}

/// Random SVM instance with both classes present.
pub fn random_instance(rng: &mut impl Rng, n: usize, p: usize) -> (Vec<Vec<f64>>, Vec<i8>) {
    loop {
        let points: Vec<Vec<f64>> = (0..n).map(|_| random_vec(rng, p, 1.0)).collect();
        let labels: Vec<i8> = (0..n)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        if labels.contains(&1) && labels.contains(&-1) {
            return (points, labels);
        }
    }
}

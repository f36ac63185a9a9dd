//! Small dense linear algebra and interpolation helpers shared across the
//! crate: partial-pivot elimination, 1-norm condition estimates, natural
//! cubic splines, and exact binomial coefficients.

use crate::error::Error;
use crate::Result;

/// Exact binomial coefficient C(n, k) as u64.
///
/// Valid for the sizes used here (n ≤ 20 keeps every intermediate exact).
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Solve A·x = b by Gaussian elimination with partial pivoting.
///
/// `a` is row-major, consumed as scratch. Fails with a condition-number
/// diagnostic when a pivot falls below `1e-13` times the largest entry.
#[allow(clippy::needless_range_loop)] // index form keeps the elimination kernel readable
pub fn solve_partial_pivot(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = a.len();
    assert!(a.iter().all(|row| row.len() == n) && b.len() == n);
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1e-300);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < 1e-13 * scale {
            return Err(Error::guard(
                "numeric",
                format!(
                    "singular matrix in partial-pivot solve (pivot {:.3e}, scale {:.3e})",
                    a[pivot_row][col].abs(),
                    scale
                ),
            ));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Ok(x)
}

/// Matrix inverse by column-wise partial-pivot solves. `None` if singular.
pub fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let x = solve_partial_pivot(a.to_vec(), e).ok()?;
        for row in 0..n {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

fn norm_1(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    (0..n)
        .map(|j| a.iter().map(|row| row[j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition number via the explicit inverse.
///
/// Intended for the small (n+1)×(n+1) basis matrices of the moment layers;
/// returns `f64::INFINITY` when the matrix does not invert.
pub fn condition_1norm(a: &[Vec<f64>]) -> f64 {
    match invert(a) {
        Some(inv) => norm_1(a) * norm_1(&inv),
        None => f64::INFINITY,
    }
}

/// Natural cubic spline through strictly increasing sample abscissae.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots (natural boundary: zero at the ends).
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::invalid(
                "cubic spline needs at least two samples with matching ordinates",
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "cubic spline abscissae must be strictly increasing",
            ));
        }
        // Tridiagonal system for the interior second derivatives.
        let mut m = vec![0.0; n];
        if n > 2 {
            let mut sub = vec![0.0; n - 2];
            let mut diag = vec![0.0; n - 2];
            let mut sup = vec![0.0; n - 2];
            let mut rhs = vec![0.0; n - 2];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                sub[i - 1] = h0;
                diag[i - 1] = 2.0 * (h0 + h1);
                sup[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            // Thomas algorithm.
            for i in 1..n - 2 {
                let w = sub[i] / diag[i - 1];
                diag[i] -= w * sup[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[n - 2] = rhs[n - 3] / diag[n - 3];
            for i in (1..n - 2).rev() {
                m[i] = (rhs[i - 1] - sup[i - 1] * m[i + 1]) / diag[i - 1];
            }
        }
        Ok(CubicSpline { xs, ys, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// Evaluate at `x`; errors outside the sampled domain.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if x < lo || x > hi {
            return Err(Error::domain(format!(
                "spline evaluation at {x} outside tabulated range [{lo}, {hi}]"
            )));
        }
        let i = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        Ok(a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(12, 6), 924);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(0, 0), 1);
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve_partial_pivot(a, vec![5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve_partial_pivot(a, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn condition_of_identity_is_one() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!((condition_1norm(&id) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spline_reproduces_cubic_data_near_knots() {
        let xs: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (0.7 * x).sin()).collect();
        let sp = CubicSpline::natural(xs, ys).unwrap();
        // Natural splines carry O(h^4) interior error for smooth data.
        for i in 5..35 {
            let x = i as f64 * 0.25 + 0.13;
            assert!((sp.eval(x).unwrap() - (0.7 * x).sin()).abs() < 5e-5);
        }
        assert!(sp.eval(-0.1).is_err());
        assert!(sp.eval(10.1).is_err());
    }
}

//! Classical layer: the equation ẍ + ω(t)²x = 0, frequency profiles, and the
//! Wronskian-normalized fundamental pair (q₁, q₂).
//!
//! Initial conditions are fixed to the identity at t₀ (q₁(t₀)=1, q̇₁(t₀)=0,
//! q₂(t₀)=0, q̇₂(t₀)=1), which pins the Wronskian q₁q̇₂ − q₂q̇₁ to 1 and makes
//! initial moment data map linearly onto basis coefficients downstream.

use crate::error::Error;
use crate::numeric::CubicSpline;
use crate::Result;

/// Time-dependent coupling ω(t), evaluable as ω(t)² at any time.
#[derive(Debug, Clone)]
pub enum FrequencyProfile {
    /// ω(t) = ω₀.
    Constant { omega0: f64 },
    /// ω(t)² = ω₀²(1 + ε·sin Ωt).
    Sinusoidal { omega0: f64, epsilon: f64, big_omega: f64 },
    /// Piecewise-constant ω: each (tᵢ, ωᵢ) holds on [tᵢ, tᵢ₊₁), the last
    /// segment extends to +∞. Times strictly increasing.
    PiecewiseConstant { breakpoints: Vec<(f64, f64)> },
    /// Cubic interpolation of tabulated ω samples (ω, not ω², so the squared
    /// coupling stays nonnegative for positive samples).
    Tabulated { samples: Vec<(f64, f64)> },
}

impl FrequencyProfile {
    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<(Self, CubicSpline)> {
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let spline = CubicSpline::natural(xs, ys)?;
        Ok((FrequencyProfile::Tabulated { samples }, spline))
    }

    /// Check structural invariants. Zero or sign-changing ω² is rejected
    /// unless `allow_inverted` opts into the inverted-oscillator regime.
    pub fn validate(&self, allow_inverted: bool) -> Result<()> {
        match self {
            FrequencyProfile::Constant { omega0 } => {
                if !omega0.is_finite() || *omega0 < 0.0 {
                    return Err(Error::invalid("constant profile requires finite ω₀ ≥ 0"));
                }
                if *omega0 == 0.0 && !allow_inverted {
                    return Err(Error::invalid(
                        "ω₀ = 0 (free particle) requires the inverted/free flag",
                    ));
                }
            }
            FrequencyProfile::Sinusoidal { omega0, epsilon, big_omega } => {
                if !(omega0.is_finite() && epsilon.is_finite() && big_omega.is_finite()) {
                    return Err(Error::invalid("sinusoidal profile parameters must be finite"));
                }
                if *omega0 <= 0.0 {
                    return Err(Error::invalid("sinusoidal profile requires ω₀ > 0"));
                }
                if epsilon.abs() >= 1.0 && !allow_inverted {
                    return Err(Error::invalid(
                        "|ε| ≥ 1 lets ω(t)² change sign; pass the inverted flag to permit it",
                    ));
                }
            }
            FrequencyProfile::PiecewiseConstant { breakpoints } => {
                if breakpoints.is_empty() {
                    return Err(Error::invalid("piecewise profile needs at least one segment"));
                }
                if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::invalid("piecewise breakpoint times must be strictly increasing"));
                }
                for &(t, w) in breakpoints {
                    if !t.is_finite() || !w.is_finite() || w < 0.0 {
                        return Err(Error::invalid("piecewise ω values must be finite and ≥ 0"));
                    }
                    if w == 0.0 && !allow_inverted {
                        return Err(Error::invalid("piecewise ω = 0 requires the inverted/free flag"));
                    }
                }
            }
            FrequencyProfile::Tabulated { samples } => {
                if samples.len() < 2 {
                    return Err(Error::invalid("tabulated profile needs at least two samples"));
                }
                if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::invalid("tabulated sample times must be strictly increasing"));
                }
                if samples.iter().any(|&(t, w)| !t.is_finite() || !w.is_finite()) {
                    return Err(Error::invalid("tabulated samples must be finite"));
                }
            }
        }
        Ok(())
    }

    /// ω(t)². Pure; errors when `t` falls outside a tabulated/piecewise domain.
    ///
    /// Piecewise segments are right-continuous: the value at a breakpoint is
    /// the new segment's.
    pub fn omega_sq(&self, t: f64) -> Result<f64> {
        match self {
            FrequencyProfile::Constant { omega0 } => Ok(omega0 * omega0),
            FrequencyProfile::Sinusoidal { omega0, epsilon, big_omega } => {
                Ok(omega0 * omega0 * (1.0 + epsilon * (big_omega * t).sin()))
            }
            FrequencyProfile::PiecewiseConstant { breakpoints } => {
                if t < breakpoints[0].0 {
                    return Err(Error::domain(format!(
                        "t = {t} precedes the first piecewise breakpoint {}",
                        breakpoints[0].0
                    )));
                }
                let w = breakpoints
                    .iter()
                    .rev()
                    .find(|&&(ti, _)| t >= ti)
                    .map(|&(_, w)| w)
                    .unwrap();
                Ok(w * w)
            }
            FrequencyProfile::Tabulated { samples } => {
                let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
                let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
                let spline = CubicSpline::natural(xs, ys)?;
                let w = spline.eval(t)?;
                Ok(w * w)
            }
        }
    }

    /// ω(t)² for an integrator stage inside the step whose midpoint is
    /// `step_mid`. Piecewise-constant profiles are sampled at the midpoint so
    /// that a step whose boundary coincides with a breakpoint sees a single
    /// segment throughout; stage times that land exactly on the jump would
    /// otherwise read the wrong side.
    pub fn omega_sq_at_stage(&self, t_stage: f64, step_mid: f64) -> Result<f64> {
        match self {
            FrequencyProfile::PiecewiseConstant { .. } => self.omega_sq(step_mid),
            _ => self.omega_sq(t_stage),
        }
    }

    /// Times where ω(t)² jumps. Finite-difference checks must not straddle
    /// these.
    pub fn discontinuities(&self) -> Vec<f64> {
        match self {
            FrequencyProfile::PiecewiseConstant { breakpoints } => {
                breakpoints.iter().skip(1).map(|&(t, _)| t).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Coarse upper bound on |ω| over [t0, t1], used for step-size warnings.
    pub fn max_abs_omega(&self, t0: f64, t1: f64) -> f64 {
        let mut max_sq = 0.0f64;
        let samples = 512;
        for i in 0..=samples {
            let t = t0 + (t1 - t0) * i as f64 / samples as f64;
            if let Ok(w2) = self.omega_sq(t) {
                max_sq = max_sq.max(w2.abs());
            }
        }
        max_sq.sqrt()
    }
}

/// System constants m and ħ, both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    m: f64,
    hbar: f64,
}

impl SystemParams {
    pub fn new(m: f64, hbar: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::invalid("mass must be finite and > 0"));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::invalid("hbar must be finite and > 0"));
        }
        Ok(SystemParams { m, hbar })
    }

    /// Natural units ħ = m = 1.
    pub fn natural() -> Self {
        SystemParams { m: 1.0, hbar: 1.0 }
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }
}

/// Uniform time grid t₀ + k·dt for k = 0..=count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    /// Number of steps; the grid has `count + 1` sample points.
    pub count: usize,
}

impl TimeGrid {
    /// Grid spanning [t0, t1] with a step as close to `dt` as divides evenly.
    pub fn spanning(t0: f64, t1: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt must be finite and > 0"));
        }
        if !t0.is_finite() || !t1.is_finite() || t1 <= t0 {
            return Err(Error::invalid("interval must satisfy t1 > t0"));
        }
        let count = ((t1 - t0) / dt).round().max(1.0) as usize;
        Ok(TimeGrid {
            t0,
            dt: (t1 - t0) / count as f64,
            count,
        })
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.count)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.count).map(move |k| self.t(k))
    }
}

/// A sample of the fundamental pair and its derivatives at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub q1: f64,
    pub q1dot: f64,
    pub q2: f64,
    pub q2dot: f64,
}

impl TrajectoryPoint {
    pub fn wronskian(&self) -> f64 {
        self.q1 * self.q2dot - self.q2 * self.q1dot
    }
}

/// The Wronskian-normalized fundamental solutions (q₁, q₂) of
/// ẍ + ω(t)²x = 0 on a uniform grid, with quintic Hermite dense output
/// (value, slope, and curvature q̈ = −ω²q are matched at both ends of each
/// cell).
#[derive(Debug, Clone)]
pub struct TrajectoryPair {
    pub grid: TimeGrid,
    pub q1: Vec<f64>,
    pub q1dot: Vec<f64>,
    pub q2: Vec<f64>,
    pub q2dot: Vec<f64>,
    /// ω(t)² at the grid nodes, retained for the interpolant's curvature data.
    pub omega_sq: Vec<f64>,
}

/// Drift tolerance on the Wronskian before the solve is rejected.
pub const WRONSKIAN_DRIFT_MAX: f64 = crate::tolerances::WRONSKIAN_DRIFT;

/// Solve the classical equation for the fundamental pair over `interval`
/// with fixed-step classical RK4.
///
/// The step is snapped to divide the interval exactly. A step too coarse for
/// the fastest frequency (dt·maxω > 0.1) logs a warning; Wronskian drift
/// beyond [`WRONSKIAN_DRIFT_MAX`] is a hard error.
pub fn solve_classical(
    profile: &FrequencyProfile,
    interval: (f64, f64),
    dt: f64,
) -> Result<TrajectoryPair> {
    let grid = TimeGrid::spanning(interval.0, interval.1, dt)?;
    let max_omega = profile.max_abs_omega(interval.0, interval.1);
    if grid.dt * max_omega > 0.1 {
        log::warn!(
            "solve_classical: dt·maxω = {:.3} exceeds 0.1; the fixed step may under-resolve the fastest oscillation",
            grid.dt * max_omega
        );
    }

    let n = grid.count + 1;
    let mut q1 = Vec::with_capacity(n);
    let mut q1dot = Vec::with_capacity(n);
    let mut q2 = Vec::with_capacity(n);
    let mut q2dot = Vec::with_capacity(n);
    let mut omega_sq = Vec::with_capacity(n);

    // State y = (q1, q1', q2, q2'); identity initial conditions.
    let mut y = [1.0, 0.0, 0.0, 1.0];
    omega_sq.push(profile.omega_sq(grid.t0)?);
    q1.push(y[0]);
    q1dot.push(y[1]);
    q2.push(y[2]);
    q2dot.push(y[3]);

    let deriv = |w2: f64, y: &[f64; 4]| [y[1], -w2 * y[0], y[3], -w2 * y[2]];

    let mut max_drift = 0.0f64;
    for k in 0..grid.count {
        let t = grid.t(k);
        let h = grid.dt;
        let mid = t + 0.5 * h;
        let w2_0 = profile.omega_sq_at_stage(t, mid)?;
        let w2_m = profile.omega_sq_at_stage(mid, mid)?;
        let w2_1 = profile.omega_sq_at_stage(t + h, mid)?;

        let k1 = deriv(w2_0, &y);
        let y2 = std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]);
        let k2 = deriv(w2_m, &y2);
        let y3 = std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]);
        let k3 = deriv(w2_m, &y3);
        let y4 = std::array::from_fn(|i| y[i] + h * k3[i]);
        let k4 = deriv(w2_1, &y4);
        for i in 0..4 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        let w = y[0] * y[3] - y[2] * y[1];
        max_drift = max_drift.max((w - 1.0).abs());
        omega_sq.push(profile.omega_sq(grid.t(k + 1))?);
        q1.push(y[0]);
        q1dot.push(y[1]);
        q2.push(y[2]);
        q2dot.push(y[3]);
    }

    if max_drift > WRONSKIAN_DRIFT_MAX {
        return Err(Error::guard(
            "classical_core",
            format!(
                "Wronskian drifted by {max_drift:.3e} (> {WRONSKIAN_DRIFT_MAX:.1e}); reduce dt"
            ),
        ));
    }

    Ok(TrajectoryPair {
        grid,
        q1,
        q1dot,
        q2,
        q2dot,
        omega_sq,
    })
}

impl TrajectoryPair {
    /// Largest |W − 1| over the stored nodes.
    pub fn max_wronskian_drift(&self) -> f64 {
        (0..=self.grid.count)
            .map(|k| {
                (self.q1[k] * self.q2dot[k] - self.q2[k] * self.q1dot[k] - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Dense output at arbitrary `t` inside the solved interval.
    pub fn evaluate(&self, t: f64) -> Result<TrajectoryPoint> {
        let g = &self.grid;
        let eps = 1e-9 * g.dt;
        if t < g.t0 - eps || t > g.t_end() + eps {
            return Err(Error::domain(format!(
                "trajectory evaluation at t = {t} outside solved interval [{}, {}]",
                g.t0,
                g.t_end()
            )));
        }
        let k = (((t - g.t0) / g.dt).floor() as isize)
            .clamp(0, g.count as isize - 1) as usize;
        let s = (t - g.t(k)) / g.dt;
        let (q1, q1dot) = quintic_eval(
            g.dt,
            s,
            self.q1[k],
            self.q1dot[k],
            -self.omega_sq[k] * self.q1[k],
            self.q1[k + 1],
            self.q1dot[k + 1],
            -self.omega_sq[k + 1] * self.q1[k + 1],
        );
        let (q2, q2dot) = quintic_eval(
            g.dt,
            s,
            self.q2[k],
            self.q2dot[k],
            -self.omega_sq[k] * self.q2[k],
            self.q2[k + 1],
            self.q2dot[k + 1],
            -self.omega_sq[k + 1] * self.q2[k + 1],
        );
        Ok(TrajectoryPoint {
            q1,
            q1dot,
            q2,
            q2dot,
        })
    }

    /// Max residual |q̈ + ω²q| / max(|q|, 1) under central finite differencing
    /// at interior nodes, for both solutions. Nodes adjacent to a
    /// discontinuity of ω² are excluded (the curvature jumps there).
    pub fn max_ode_residual(&self, skip_near: &[f64]) -> f64 {
        let h = self.grid.dt;
        let mut worst = 0.0f64;
        for k in 1..self.grid.count {
            let t = self.grid.t(k);
            if skip_near.iter().any(|&tb| (t - tb).abs() <= 1.5 * h) {
                continue;
            }
            for (q, _qd) in [(&self.q1, &self.q1dot), (&self.q2, &self.q2dot)] {
                let second = (q[k + 1] - 2.0 * q[k] + q[k - 1]) / (h * h);
                let res = (second + self.omega_sq[k] * q[k]).abs() / q[k].abs().max(1.0);
                worst = worst.max(res);
            }
        }
        worst
    }
}

#[allow(clippy::too_many_arguments)]
fn quintic_eval(
    dt: f64,
    s: f64,
    y0: f64,
    d0: f64,
    a0: f64,
    y1: f64,
    d1: f64,
    a1: f64,
) -> (f64, f64) {
    // Two-point quintic Hermite on the unit cell: matches value, first and
    // second derivative at both ends.
    let dd0 = d0 * dt;
    let dd1 = d1 * dt;
    let aa0 = a0 * dt * dt;
    let aa1 = a1 * dt * dt;
    let delta = y1 - y0;
    let c0 = y0;
    let c1 = dd0;
    let c2 = 0.5 * aa0;
    let c3 = 10.0 * delta - 6.0 * dd0 - 4.0 * dd1 - 1.5 * aa0 + 0.5 * aa1;
    let c4 = -15.0 * delta + 8.0 * dd0 + 7.0 * dd1 + 1.5 * aa0 - aa1;
    let c5 = 6.0 * delta - 3.0 * dd0 - 3.0 * dd1 - 0.5 * aa0 + 0.5 * aa1;
    let value = c0 + s * (c1 + s * (c2 + s * (c3 + s * (c4 + s * c5))));
    let slope = (c1 + s * (2.0 * c2 + s * (3.0 * c3 + s * (4.0 * c4 + s * 5.0 * c5)))) / dt;
    (value, slope)
}

/// Reconstruct q₂ from q₁ alone via q₂(t) = q₁(t)·∫ₜ₀ᵗ ds/q₁(s)² on a
/// zero-free window, using composite Simpson quadrature with interpolated
/// midpoints. The additive multiple of q₁ is fixed by matching the stored q₂
/// at the window start.
///
/// Returns (t, reconstructed q₂) at the grid nodes inside the window.
pub fn q2_from_q1(pair: &TrajectoryPair, window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let g = &pair.grid;
    let k_lo = ((window.0 - g.t0) / g.dt).ceil().max(0.0) as usize;
    let k_hi = (((window.1 - g.t0) / g.dt).floor() as usize).min(g.count);
    if k_hi <= k_lo {
        return Err(Error::invalid("q2_from_q1 window contains no grid interval"));
    }

    // Singularity guard: a sign change brackets a zero of q1 even when no
    // sample lands near it, so check both magnitude and sign.
    for k in k_lo..=k_hi {
        if pair.q1[k].abs() < 1e-6 {
            return Err(Error::guard(
                "classical_core",
                format!("|q1| = {:.3e} below 1e-6 at t = {}", pair.q1[k].abs(), g.t(k)),
            ));
        }
        if k < k_hi && pair.q1[k] * pair.q1[k + 1] < 0.0 {
            return Err(Error::guard(
                "classical_core",
                format!("q1 changes sign inside the cell starting at t = {}", g.t(k)),
            ));
        }
    }

    let t_start = g.t(k_lo);
    let offset = pair.q2[k_lo] / pair.q1[k_lo];
    let mut out = Vec::with_capacity(k_hi - k_lo + 1);
    let mut integral = 0.0;
    out.push((t_start, pair.q1[k_lo] * offset));
    for k in k_lo..k_hi {
        let f0 = 1.0 / (pair.q1[k] * pair.q1[k]);
        let mid = pair.evaluate(g.t(k) + 0.5 * g.dt)?;
        let fm = 1.0 / (mid.q1 * mid.q1);
        let f1 = 1.0 / (pair.q1[k + 1] * pair.q1[k + 1]);
        integral += g.dt / 6.0 * (f0 + 4.0 * fm + f1);
        out.push((g.t(k + 1), pair.q1[k + 1] * (integral + offset)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_sq_examples() {
        let c = FrequencyProfile::Constant { omega0: 1.0 };
        assert_eq!(c.omega_sq(3.7).unwrap(), 1.0);

        let s = FrequencyProfile::Sinusoidal {
            omega0: 1.0,
            epsilon: 0.5,
            big_omega: 2.0,
        };
        assert_eq!(s.omega_sq(0.0).unwrap(), 1.0);

        let p = FrequencyProfile::PiecewiseConstant {
            breakpoints: vec![(0.0, 1.0), (5.0, 2.0)],
        };
        assert_eq!(p.omega_sq(6.0).unwrap(), 4.0);
        assert_eq!(p.omega_sq(5.0).unwrap(), 4.0);
        assert_eq!(p.omega_sq(4.999).unwrap(), 1.0);
        assert!(p.omega_sq(-0.1).is_err());
    }

    #[test]
    fn validation_gates_inverted_regime() {
        let s = FrequencyProfile::Sinusoidal {
            omega0: 1.0,
            epsilon: 1.2,
            big_omega: 2.0,
        };
        assert!(s.validate(false).is_err());
        assert!(s.validate(true).is_ok());

        let free = FrequencyProfile::Constant { omega0: 0.0 };
        assert!(free.validate(false).is_err());
        assert!(free.validate(true).is_ok());

        assert!(SystemParams::new(0.0, 1.0).is_err());
        assert!(SystemParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn constant_profile_reproduces_cos_sin() {
        let profile = FrequencyProfile::Constant { omega0: 1.0 };
        let pair = solve_classical(&profile, (0.0, 2.0 * std::f64::consts::PI), 1e-3).unwrap();
        let mut worst = 0.0f64;
        for k in 0..=pair.grid.count {
            let t = pair.grid.t(k);
            worst = worst.max((pair.q1[k] - t.cos()).abs());
            worst = worst.max((pair.q2[k] - t.sin()).abs());
        }
        assert!(worst < 1e-8, "max error {worst:.3e}");
    }

    #[test]
    fn rescaled_frequency_at_quarter_period() {
        let profile = FrequencyProfile::Constant { omega0: 2.0 };
        let pair = solve_classical(&profile, (0.0, 1.0), 1e-4).unwrap();
        let pt = pair.evaluate(std::f64::consts::FRAC_PI_4).unwrap();
        assert!(pt.q1.abs() < 1e-8);
        assert!((pt.q2 - 0.5).abs() < 1e-8);
    }

    /// Independent oracle for the sinusoidal solve: a separately written RK4
    /// transcription with Richardson extrapolation over halved steps.
    fn oracle_sinusoidal(t_end: f64, dt: f64) -> [f64; 4] {
        fn integrate(t_end: f64, h: f64) -> [f64; 4] {
            let w2 = |t: f64| 1.0 + 0.3 * (2.0 * t).sin();
            let f = |t: f64, y: [f64; 4]| [y[1], -w2(t) * y[0], y[3], -w2(t) * y[2]];
            let steps = (t_end / h).round() as usize;
            let h = t_end / steps as f64;
            let mut y = [1.0, 0.0, 0.0, 1.0];
            for k in 0..steps {
                let t = k as f64 * h;
                let k1 = f(t, y);
                let k2 = f(t + 0.5 * h, std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]));
                let k3 = f(t + 0.5 * h, std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]));
                let k4 = f(t + h, std::array::from_fn(|i| y[i] + h * k3[i]));
                for i in 0..4 {
                    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            y
        }
        let coarse = integrate(t_end, dt);
        let fine = integrate(t_end, dt / 2.0);
        // One Richardson step on the 4th-order error.
        std::array::from_fn(|i| fine[i] + (fine[i] - coarse[i]) / 15.0)
    }

    #[test]
    fn sinusoidal_matches_independent_integration() {
        // Expected values frozen from the Richardson-extrapolated oracle at
        // t = 5 for ω² = 1 + 0.3·sin 2t; the oracle is re-run here to keep
        // the provenance visible.
        #[allow(clippy::excessive_precision)] // digits exactly as frozen
        const EXPECTED: [f64; 4] = [
            5.31484974298377710e-1,
            1.31654290123148954e0,
            -6.32430785217403368e-1,
            3.14924687048273477e-1,
        ];
        let oracle = oracle_sinusoidal(5.0, 2e-4);
        for i in 0..4 {
            assert!(
                (oracle[i] - EXPECTED[i]).abs() < 1e-10,
                "oracle drifted from frozen value at {i}: {:.17e}",
                oracle[i]
            );
        }

        let profile = FrequencyProfile::Sinusoidal {
            omega0: 1.0,
            epsilon: 0.3,
            big_omega: 2.0,
        };
        let pair = solve_classical(&profile, (0.0, 5.0), 1e-3).unwrap();
        let pt = pair.evaluate(5.0).unwrap();
        for (value, expected) in [pt.q1, pt.q1dot, pt.q2, pt.q2dot].iter().zip(EXPECTED) {
            assert!((value - expected).abs() < 1e-8, "{value} vs {expected}");
        }
    }

    #[test]
    fn wronskian_conserved_across_profiles() {
        let profiles = [
            FrequencyProfile::Constant { omega0: 1.0 },
            FrequencyProfile::Sinusoidal {
                omega0: 1.0,
                epsilon: 0.3,
                big_omega: 2.0,
            },
            FrequencyProfile::PiecewiseConstant {
                breakpoints: vec![(0.0, 1.0), (5.0, 2.0)],
            },
        ];
        for profile in &profiles {
            let pair = solve_classical(profile, (0.0, 10.0), 1e-3).unwrap();
            assert!(pair.max_wronskian_drift() < 1e-8);
        }
    }

    #[test]
    fn linear_combination_matches_basis() {
        // Linearity: a solution with ICs (a, b, ...) equals a·q1 + b·q2.
        let profile = FrequencyProfile::Sinusoidal {
            omega0: 1.0,
            epsilon: 0.3,
            big_omega: 2.0,
        };
        let pair = solve_classical(&profile, (0.0, 10.0), 1e-3).unwrap();
        let (a, b) = (0.7, -1.3);
        let f = |t: f64, y: [f64; 2]| [y[1], -(1.0 + 0.3 * (2.0 * t).sin()) * y[0]];
        let mut y = [a, b];
        let h = pair.grid.dt;
        for k in 0..pair.grid.count {
            let t = pair.grid.t(k);
            let k1 = f(t, y);
            let k2 = f(t + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = f(t + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = f(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        let end = pair.grid.count;
        assert!((y[0] - (a * pair.q1[end] + b * pair.q2[end])).abs() < 1e-9);
        assert!((y[1] - (a * pair.q1dot[end] + b * pair.q2dot[end])).abs() < 1e-9);
    }

    #[test]
    fn ten_periods_of_constant_omega() {
        let profile = FrequencyProfile::Constant { omega0: 1.0 };
        let t_end = 20.0 * std::f64::consts::PI;
        let pair = solve_classical(&profile, (0.0, t_end), 1e-3).unwrap();
        let mut worst = 0.0f64;
        for k in (0..=pair.grid.count).step_by(97) {
            let t = pair.grid.t(k);
            worst = worst.max((pair.q1[k] - t.cos()).abs());
            worst = worst.max((pair.q2[k] - t.sin()).abs());
        }
        assert!(worst < 1e-8, "max error over 10 periods {worst:.3e}");
    }

    #[test]
    fn ode_residual_small_with_piecewise_jump_excluded() {
        let profile = FrequencyProfile::PiecewiseConstant {
            breakpoints: vec![(0.0, 1.0), (5.0, 2.0)],
        };
        let pair = solve_classical(&profile, (0.0, 10.0), 1e-3).unwrap();
        // Central second differences are O(h²); tolerance reflects that, not
        // the solver accuracy.
        assert!(pair.max_ode_residual(&[5.0]) < 1e-5);
    }

    #[test]
    fn q2_reconstruction_on_cosine_window() {
        let profile = FrequencyProfile::Constant { omega0: 1.0 };
        // q1 = cos t stays well away from zero on [0, 0.7].
        let pair = solve_classical(&profile, (0.0, 0.7), 1e-3).unwrap();
        let rec = q2_from_q1(&pair, (0.0, 0.7)).unwrap();
        let mut worst = 0.0f64;
        for &(t, q2r) in &rec {
            worst = worst.max((q2r - t.sin()).abs());
        }
        assert!(worst < 1e-6, "q2 reconstruction error {worst:.3e}");
    }

    #[test]
    fn q2_reconstruction_free_particle() {
        let profile = FrequencyProfile::Constant { omega0: 0.0 };
        let pair = solve_classical(&profile, (0.0, 2.0), 1e-3).unwrap();
        let rec = q2_from_q1(&pair, (0.0, 2.0)).unwrap();
        for &(t, q2r) in &rec {
            assert!((q2r - t).abs() < 1e-9);
        }
    }

    #[test]
    fn q2_reconstruction_sinusoidal_cross_check() {
        let profile = FrequencyProfile::Sinusoidal {
            omega0: 1.0,
            epsilon: 0.3,
            big_omega: 2.0,
        };
        let pair = solve_classical(&profile, (0.0, 1.2), 1e-3).unwrap();
        let rec = q2_from_q1(&pair, (0.0, 1.2)).unwrap();
        let mut worst = 0.0f64;
        for (k, &(t, q2r)) in rec.iter().enumerate() {
            assert_eq!(t, pair.grid.t(k));
            worst = worst.max((q2r - pair.q2[k]).abs());
        }
        assert!(worst < 1e-6, "cross-check error {worst:.3e}");
    }

    #[test]
    fn q2_reconstruction_rejects_zero_crossing() {
        let profile = FrequencyProfile::Constant { omega0: 1.0 };
        // q1 = cos t vanishes at π/2 ≈ 1.5708, inside this window.
        let pair = solve_classical(&profile, (0.0, 2.0), 1e-3).unwrap();
        assert!(matches!(
            q2_from_q1(&pair, (0.0, 2.0)),
            Err(Error::Guard { .. })
        ));
    }

    #[test]
    fn tabulated_profile_tracks_its_source() {
        // Tabulate ω(t) = sqrt(1 + 0.3 sin 2t) densely and compare the solve
        // against the analytic sinusoidal profile.
        let samples: Vec<(f64, f64)> = (0..=600)
            .map(|i| {
                let t = i as f64 * 0.01;
                (t, (1.0 + 0.3 * (2.0 * t).sin()).sqrt())
            })
            .collect();
        let tab = FrequencyProfile::Tabulated { samples };
        tab.validate(false).unwrap();
        let sin = FrequencyProfile::Sinusoidal {
            omega0: 1.0,
            epsilon: 0.3,
            big_omega: 2.0,
        };
        let pair_tab = solve_classical(&tab, (0.0, 5.0), 1e-3).unwrap();
        let pair_sin = solve_classical(&sin, (0.0, 5.0), 1e-3).unwrap();
        let end = pair_tab.grid.count;
        assert!((pair_tab.q1[end] - pair_sin.q1[end]).abs() < 1e-6);
        assert!((pair_tab.q2[end] - pair_sin.q2[end]).abs() < 1e-6);
        assert!(tab.omega_sq(6.5).is_err(), "outside tabulated range");
    }
}

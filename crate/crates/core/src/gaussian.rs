//! Variational dynamics of a Gaussian wave packet in the potential
//! V(x,t) = V₀ + ½·mω(t)²·x² + (V₄/24)·x⁴.
//!
//! The packet is parametrized by its center (q, p), width pair (α, β), and a
//! global phase γ. (q, p) and (α, β) are canonical pairs of the effective
//! Hamiltonian returned by [`effective_hamiltonian`]; the quartic term
//! couples them, while for V₄ = 0 the center obeys the classical equation
//! and the width decouples.

use crate::classical::{FrequencyProfile, SystemParams, TimeGrid, TrajectoryPair};
use crate::error::Error;
use crate::moments::{MomentLayer, MomentState};
use crate::numeric::{binomial, solve_partial_pivot};
use crate::Result;

/// Potential data beyond the mass: constant offset, quartic strength, and
/// the harmonic frequency profile.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub v0: f64,
    pub v4: f64,
    pub profile: FrequencyProfile,
}

impl PotentialSpec {
    pub fn harmonic(profile: FrequencyProfile) -> Self {
        PotentialSpec {
            v0: 0.0,
            v4: 0.0,
            profile,
        }
    }

    /// Quadratic coefficient V₂(t) = m·ω(t)².
    pub fn v2(&self, t: f64, params: &SystemParams) -> Result<f64> {
        Ok(params.m() * self.profile.omega_sq(t)?)
    }

    /// V(x, t).
    pub fn eval(&self, x: f64, t: f64, params: &SystemParams) -> Result<f64> {
        let v2 = self.v2(t, params)?;
        Ok(self.v0 + 0.5 * v2 * x * x + self.v4 * x.powi(4) / 24.0)
    }
}

/// Gaussian packet parameters: center (q, p), width α with conjugate β, and
/// overall phase γ. The packet's covariance is σxx = α², σxp = αβ,
/// σpp = β² + ħ²/4α².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub q: f64,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl GaussianState {
    pub fn new(q: f64, p: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let fields = [q, p, alpha, beta, gamma];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("gaussian parameters must be finite"));
        }
        if alpha <= 0.0 {
            return Err(Error::invalid("gaussian width must be positive"));
        }
        Ok(GaussianState {
            q,
            p,
            alpha,
            beta,
            gamma,
        })
    }

    /// Minimum-uncertainty packet of frequency ω centered at (q, p):
    /// α = √(ħ/2mω), β = 0.
    pub fn coherent(params: &SystemParams, omega: f64, q: f64, p: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::invalid("coherent width needs ω > 0"));
        }
        GaussianState::new(
            q,
            p,
            (params.hbar() / (2.0 * params.m() * omega)).sqrt(),
            0.0,
            0.0,
        )
    }
}

/// Time series of Gaussian states.
#[derive(Debug, Clone)]
pub struct GaussianSeries {
    pub samples: Vec<(f64, GaussianState)>,
}

impl GaussianSeries {
    pub fn last(&self) -> (f64, GaussianState) {
        *self.samples.last().expect("series is never empty")
    }
}

/// Equations of motion (q̇, ṗ, α̇, β̇) at time `t`; γ is a spectator.
pub fn effective_rhs(
    g: &GaussianState,
    pot: &PotentialSpec,
    params: &SystemParams,
    t: f64,
) -> Result<[f64; 4]> {
    let v2 = pot.v2(t, params)?;
    Ok(rhs_with_v2(g, v2, pot.v4, params))
}

fn rhs_with_v2(g: &GaussianState, v2: f64, v4: f64, params: &SystemParams) -> [f64; 4] {
    let (m, hbar) = (params.m(), params.hbar());
    let (q, p, a, b) = (g.q, g.p, g.alpha, g.beta);
    [
        p / m,
        -(v2 * q + v4 * q.powi(3) / 6.0 + v4 * q * a * a / 2.0),
        b / m,
        hbar * hbar / (4.0 * m * a.powi(3)) - (v2 * a + v4 * a.powi(3) / 2.0 + v4 * q * q * a / 2.0),
    ]
}

/// Energy of the packet: kinetic and width-kinetic terms, the quantum width
/// pressure, and the Gaussian average of the potential. Conserved when ω is
/// constant; (q, p) and (α, β) obey its Hamilton equations always.
pub fn effective_hamiltonian(
    g: &GaussianState,
    pot: &PotentialSpec,
    params: &SystemParams,
    t: f64,
) -> Result<f64> {
    let (m, hbar) = (params.m(), params.hbar());
    let v2 = pot.v2(t, params)?;
    let (q, p, a, b) = (g.q, g.p, g.alpha, g.beta);
    Ok(p * p / (2.0 * m)
        + b * b / (2.0 * m)
        + hbar * hbar / (8.0 * m * a * a)
        + pot.v0
        + 0.5 * v2 * (q * q + a * a)
        + pot.v4 * (q.powi(4) + 6.0 * q * q * a * a + 3.0 * a.powi(4)) / 24.0)
}

/// Integrate the packet equations with fixed-step classical RK4, recording a
/// sample every `sample_stride` steps (endpoints always included).
///
/// The width is guarded: a step that drives α below 10⁻¹² of its starting
/// value (or out of the positive reals) aborts with a numerical-guard error
/// rather than continuing through the collapse.
pub fn evolve_gaussian(
    initial: &GaussianState,
    pot: &PotentialSpec,
    params: &SystemParams,
    t0: f64,
    t_end: f64,
    dt: f64,
    sample_stride: usize,
) -> Result<GaussianSeries> {
    if sample_stride == 0 {
        return Err(Error::invalid("sample_stride must be at least 1"));
    }
    let grid = TimeGrid::spanning(t0, t_end, dt)?;
    let alpha_floor = 1e-12 * initial.alpha;

    let mut g = *initial;
    let mut samples = vec![(t0, g)];
    for k in 0..grid.count {
        let t = grid.t(k);
        let h = grid.dt;
        let mid = t + 0.5 * h;
        let v2_0 = params.m() * pot.profile.omega_sq_at_stage(t, mid)?;
        let v2_m = params.m() * pot.profile.omega_sq_at_stage(mid, mid)?;
        let v2_1 = params.m() * pot.profile.omega_sq_at_stage(t + h, mid)?;

        let y = [g.q, g.p, g.alpha, g.beta];
        let apply = |y: &[f64; 4], v2: f64| {
            let state = GaussianState {
                q: y[0],
                p: y[1],
                alpha: y[2],
                beta: y[3],
                gamma: 0.0,
            };
            rhs_with_v2(&state, v2, pot.v4, params)
        };
        let k1 = apply(&y, v2_0);
        let y2 = std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]);
        let k2 = apply(&y2, v2_m);
        let y3 = std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]);
        let k3 = apply(&y3, v2_m);
        let y4 = std::array::from_fn(|i| y[i] + h * k3[i]);
        let k4 = apply(&y4, v2_1);
        let next: [f64; 4] =
            std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]));

        if next.iter().any(|v| !v.is_finite()) || next[2] <= alpha_floor {
            return Err(Error::guard(
                "gaussian_effective",
                format!(
                    "width collapsed or diverged at t = {:.6} (α = {:.3e}); reduce dt or revisit the state",
                    t + h,
                    next[2]
                ),
            ));
        }
        g = GaussianState {
            q: next[0],
            p: next[1],
            alpha: next[2],
            beta: next[3],
            gamma: g.gamma,
        };
        if (k + 1) % sample_stride == 0 || k + 1 == grid.count {
            samples.push((grid.t(k + 1), g));
        }
    }
    Ok(GaussianSeries { samples })
}

/// Centered phase-space moments E[(x−q)^j (p−p̄)^k] of the packet's Wigner
/// distribution, which is a classical Gaussian with the packet covariance.
fn central_moments(sxx: f64, sxp: f64, spp: f64, n_max: u32) -> Vec<Vec<f64>> {
    let size = n_max as usize + 1;
    let mut cm = vec![vec![0.0; size]; size];
    cm[0][0] = 1.0;
    for k in 2..size {
        cm[0][k] = (k - 1) as f64 * spp * cm[0][k - 2];
    }
    for j in 1..size {
        for k in 0..size - j {
            let from_xx = if j >= 2 {
                (j - 1) as f64 * sxx * cm[j - 2][k]
            } else {
                0.0
            };
            let from_xp = if k >= 1 {
                k as f64 * sxp * cm[j - 1][k - 1]
            } else {
                0.0
            };
            cm[j][k] = from_xx + from_xp;
        }
    }
    cm
}

/// Symmetrized moments ⟨O_{n,ℓ}⟩ of the packet for every degree n ≤ `n_max`.
///
/// The Weyl symbol of O_{n,ℓ} is the plain monomial x^{n−ℓ}p^ℓ, so the
/// quantum moments are classical moments of the Gaussian Wigner function.
pub fn gaussian_moments(
    g: &GaussianState,
    params: &SystemParams,
    n_max: u32,
) -> Result<MomentState> {
    if g.alpha <= 0.0 {
        return Err(Error::invalid("gaussian width must be positive"));
    }
    let hbar = params.hbar();
    let sxx = g.alpha * g.alpha;
    let sxp = g.alpha * g.beta;
    let spp = g.beta * g.beta + hbar * hbar / (4.0 * sxx);
    let cm = central_moments(sxx, sxp, spp, n_max);

    let raw = |a: u32, b: u32| -> f64 {
        let mut acc = 0.0;
        for i in 0..=a {
            for j in 0..=b {
                acc += binomial(a as usize, i as usize) as f64
                    * binomial(b as usize, j as usize) as f64
                    * g.q.powi((a - i) as i32)
                    * g.p.powi((b - j) as i32)
                    * cm[i as usize][j as usize];
            }
        }
        acc
    };

    let mut layers = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let values: Vec<f64> = (0..=n).map(|l| raw(n - l, l)).collect();
        layers.push(MomentLayer::new(n, values)?);
    }
    MomentState::new(0.0, layers)
}

/// The degree-2 conserved quantity written in packet variables:
/// (qβ − pα)² + ħ²q²/4α² + ħ²/4. Algebraically equal to v₀v₂ − v₁² on the
/// packet's second-moment layer.
pub fn ermakov_gaussian(g: &GaussianState, params: &SystemParams) -> f64 {
    let hbar = params.hbar();
    let cross = g.q * g.beta - g.p * g.alpha;
    cross * cross + hbar * hbar * g.q * g.q / (4.0 * g.alpha * g.alpha) + hbar * hbar / 4.0
}

/// Least-squares fit of the squared width over a series onto the span
/// {q₁², q₂², q₁q₂} of the classical pair. Returns the three coefficients
/// and the worst pointwise residual; for V₄ = 0 and a mean-centered packet
/// the fit is exact up to integration error.
pub fn fit_width_squared(
    series: &GaussianSeries,
    pair: &TrajectoryPair,
) -> Result<([f64; 3], f64)> {
    if series.samples.len() < 4 {
        return Err(Error::invalid("width fit needs at least four samples"));
    }
    let mut normal = vec![vec![0.0; 3]; 3];
    let mut rhs = vec![0.0; 3];
    let mut rows = Vec::with_capacity(series.samples.len());
    for &(t, g) in &series.samples {
        let pt = pair.evaluate(t)?;
        let phi = [pt.q1 * pt.q1, pt.q2 * pt.q2, pt.q1 * pt.q2];
        let y = g.alpha * g.alpha;
        for i in 0..3 {
            for j in 0..3 {
                normal[i][j] += phi[i] * phi[j];
            }
            rhs[i] += phi[i] * y;
        }
        rows.push((phi, y));
    }
    let c = solve_partial_pivot(normal, rhs)?;
    let worst = rows
        .iter()
        .map(|(phi, y)| (c[0] * phi[0] + c[1] * phi[1] + c[2] * phi[2] - y).abs())
        .fold(0.0, f64::max);
    Ok(([c[0], c[1], c[2]], worst))
}

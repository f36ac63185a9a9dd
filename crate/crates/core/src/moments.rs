//! Expectation-value dynamics of the symmetrized monomials O_{n,ℓ} in a
//! harmonic potential with time-dependent frequency.
//!
//! For each degree n the vector v_ℓ = ⟨O_{n,ℓ}⟩, ℓ = 0..n, closes on itself:
//!
//!   v̇_ℓ = (n−ℓ)/m · v_{ℓ+1} − m ω(t)² ℓ · v_{ℓ−1},
//!
//! so the full hierarchy is block-diagonal over degrees. Every layer is also
//! solvable in closed form through the classical fundamental pair: the n+1
//! products of powers of (q₁, q₂) and their derivatives span the solution
//! space, and [`basis_moment`] evaluates that basis exactly.

use crate::classical::{FrequencyProfile, SystemParams, TimeGrid, TrajectoryPair, TrajectoryPoint};
use crate::error::Error;
use crate::numeric::{binomial, condition_1norm, solve_partial_pivot};
use crate::Result;

/// Moment vector of one degree: `values[l]` = ⟨O_{n,l}⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentLayer {
    n: u32,
    values: Vec<f64>,
}

impl MomentLayer {
    pub fn new(n: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != n as usize + 1 {
            return Err(Error::invalid(format!(
                "degree-{n} layer needs {} entries, got {}",
                n + 1,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("moment values must be finite"));
        }
        Ok(MomentLayer { n, values })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, l: u32) -> f64 {
        self.values[l as usize]
    }

    /// Largest |value|, used to scale absolute tolerances.
    pub fn magnitude(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// All tracked layers at one instant. Layers are held in strictly increasing
/// degree; degrees may be sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub t: f64,
    layers: Vec<MomentLayer>,
}

impl MomentState {
    pub fn new(t: f64, layers: Vec<MomentLayer>) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::invalid("state time must be finite"));
        }
        if layers.windows(2).any(|w| w[1].n <= w[0].n) {
            return Err(Error::invalid(
                "layers must be supplied in strictly increasing degree",
            ));
        }
        Ok(MomentState { t, layers })
    }

    pub fn layers(&self) -> &[MomentLayer] {
        &self.layers
    }

    pub fn layer(&self, n: u32) -> Option<&MomentLayer> {
        self.layers.iter().find(|l| l.n == n)
    }
}

/// Time series of moment states produced by an evolution routine.
#[derive(Debug, Clone)]
pub struct MomentSeries {
    pub states: Vec<MomentState>,
}

impl MomentSeries {
    pub fn last(&self) -> &MomentState {
        self.states.last().expect("series is never empty")
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.t)
    }
}

/// Right-hand side of one layer's linear system at a given ω².
pub fn layer_rhs(layer: &MomentLayer, m: f64, omega_sq: f64) -> Vec<f64> {
    layer_rhs_raw(layer.n, &layer.values, m, omega_sq)
}

fn layer_rhs_raw(n: u32, v: &[f64], m: f64, omega_sq: f64) -> Vec<f64> {
    let size = n as usize + 1;
    let mut rhs = vec![0.0; size];
    for l in 0..size {
        let up = if l + 1 < size {
            (n as f64 - l as f64) / m * v[l + 1]
        } else {
            0.0
        };
        let down = if l > 0 {
            m * omega_sq * l as f64 * v[l - 1]
        } else {
            0.0
        };
        rhs[l] = up - down;
    }
    rhs
}

/// Integrate every layer of `initial` to `t_end` with fixed-step classical
/// RK4, recording a state every `sample_stride` steps (the endpoints are
/// always recorded).
///
/// Layers never couple, so the cost is linear in the number of tracked
/// degrees. Piecewise-constant profiles are sampled at step midpoints; align
/// steps with the breakpoints for exact handling of the jump.
pub fn evolve_layers(
    initial: &MomentState,
    profile: &FrequencyProfile,
    params: &SystemParams,
    t_end: f64,
    dt: f64,
    sample_stride: usize,
) -> Result<MomentSeries> {
    if sample_stride == 0 {
        return Err(Error::invalid("sample_stride must be at least 1"));
    }
    if initial.layers.is_empty() {
        return Err(Error::invalid("no layers to evolve"));
    }
    let grid = TimeGrid::spanning(initial.t, t_end, dt)?;
    let m = params.m();

    let mut layers = initial.layers.clone();
    let mut states = vec![initial.clone()];
    for k in 0..grid.count {
        let t = grid.t(k);
        let h = grid.dt;
        let mid = t + 0.5 * h;
        let w0 = profile.omega_sq_at_stage(t, mid)?;
        let wm = profile.omega_sq_at_stage(mid, mid)?;
        let w1 = profile.omega_sq_at_stage(t + h, mid)?;

        for layer in &mut layers {
            let n = layer.n;
            let v = &mut layer.values;
            let k1 = layer_rhs_raw(n, v, m, w0);
            let s2: Vec<f64> = v.iter().zip(&k1).map(|(y, d)| y + 0.5 * h * d).collect();
            let k2 = layer_rhs_raw(n, &s2, m, wm);
            let s3: Vec<f64> = v.iter().zip(&k2).map(|(y, d)| y + 0.5 * h * d).collect();
            let k3 = layer_rhs_raw(n, &s3, m, wm);
            let s4: Vec<f64> = v.iter().zip(&k3).map(|(y, d)| y + h * d).collect();
            let k4 = layer_rhs_raw(n, &s4, m, w1);
            for (i, y) in v.iter_mut().enumerate() {
                *y += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
            }
            if v.iter().any(|y| !y.is_finite()) {
                return Err(Error::guard(
                    "moment_dynamics",
                    format!("layer {n} became non-finite at t = {:.6}", t + h),
                ));
            }
        }

        if (k + 1) % sample_stride == 0 || k + 1 == grid.count {
            states.push(MomentState {
                t: grid.t(k + 1),
                layers: layers.clone(),
            });
        }
    }
    Ok(MomentSeries { states })
}

/// Value of the r-th closed-form basis solution's ℓ-entry at the classical
/// point `pt`:
///
///   mˡ Σ_a [C(n−ℓ, r−a)·C(ℓ, a) / C(n, r)] · q̇₁^a q̇₂^{ℓ−a} q₁^{r−a} q₂^{n−r−ℓ+a}.
///
/// At the identity point (q₁, q̇₁, q₂, q̇₂) = (1, 0, 0, 1) this reduces to a
/// single entry m^{n−r}/C(n, r) at ℓ = n−r, so the n+1 solutions are
/// independent and every layer trajectory is a combination of them.
pub fn basis_moment(n: u32, l: u32, r: u32, m: f64, pt: &TrajectoryPoint) -> f64 {
    debug_assert!(l <= n && r <= n);
    let (n, l, r) = (n as i64, l as i64, r as i64);
    let a_lo = (r + l - n).max(0);
    let a_hi = r.min(l);
    let mut sum = 0.0;
    for a in a_lo..=a_hi {
        let b = l - a;
        let coef = binomial((n - l) as usize, (r - a) as usize) as f64
            * binomial(l as usize, a as usize) as f64
            / binomial(n as usize, r as usize) as f64;
        sum += coef
            * pt.q1dot.powi(a as i32)
            * pt.q2dot.powi(b as i32)
            * pt.q1.powi((r - a) as i32)
            * pt.q2.powi((n - r - b) as i32);
    }
    m.powi(l as i32) * sum
}

/// Coordinates of one layer trajectory in the closed-form basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisCoefficients {
    pub n: u32,
    pub kappa: Vec<f64>,
}

/// Matrix M[ℓ][r] = [`basis_moment`](n, ℓ, r) of all basis solutions at one
/// classical point.
pub fn basis_matrix(n: u32, m: f64, pt: &TrajectoryPoint) -> Vec<Vec<f64>> {
    (0..=n)
        .map(|l| (0..=n).map(|r| basis_moment(n, l, r, m, pt)).collect())
        .collect()
}

/// 1-norm condition number of the basis matrix; large values mean moment
/// data at this time pins the basis coordinates poorly.
pub fn basis_condition(n: u32, m: f64, pt: &TrajectoryPoint) -> f64 {
    condition_1norm(&basis_matrix(n, m, pt))
}

/// Solve for the basis coordinates of `layer` given the classical point at
/// the same time.
pub fn fit_basis(layer: &MomentLayer, m: f64, pt: &TrajectoryPoint) -> Result<BasisCoefficients> {
    let kappa = solve_partial_pivot(basis_matrix(layer.n, m, pt), layer.values.clone())?;
    Ok(BasisCoefficients { n: layer.n, kappa })
}

/// Evaluate the closed-form layer Σ_r κ_r·basis_r at the classical point `pt`.
pub fn closed_form_layer(coeffs: &BasisCoefficients, m: f64, pt: &TrajectoryPoint) -> MomentLayer {
    let n = coeffs.n;
    let values = (0..=n)
        .map(|l| {
            (0..=n)
                .map(|r| coeffs.kappa[r as usize] * basis_moment(n, l, r, m, pt))
                .sum()
        })
        .collect();
    MomentLayer { n, values }
}

/// Check the closed form against the layer equations themselves: central
/// finite differences of the closed-form trajectory must reproduce
/// [`layer_rhs`] at interior sample times. Returns the worst relative
/// residual |Δ| / max(1, |fd|, |rhs|) over degrees 1..=`n_max`.
///
/// Sample points whose difference stencil would straddle a discontinuity of
/// ω² are skipped: the derivative is one-sided there.
pub fn verify_closed_form(
    profile: &FrequencyProfile,
    params: &SystemParams,
    n_max: u32,
    interval: (f64, f64),
    samples: usize,
) -> Result<f64> {
    use crate::tolerances::FD_STEP;
    let pair = solve_classical_for(profile, interval)?;
    let jumps = profile.discontinuities();
    let m = params.m();

    let mut worst = 0.0f64;
    for n in 1..=n_max {
        // A fixed generic starting layer; the map to basis coordinates is
        // linear, so one non-degenerate vector exercises the whole basis.
        let values: Vec<f64> = (0..=n)
            .map(|l| 1.0 + 0.5 * l as f64 - 0.07 * (l * l) as f64)
            .collect();
        let layer = MomentLayer::new(n, values)?;
        let coeffs = fit_basis(&layer, m, &pair.evaluate(interval.0)?)?;

        for s in 0..samples {
            let span = interval.1 - interval.0;
            let t = interval.0 + span * (s as f64 + 0.5) / samples as f64;
            if t - FD_STEP <= interval.0 || t + FD_STEP >= interval.1 {
                continue;
            }
            if jumps.iter().any(|&tb| (t - tb).abs() <= 2.0 * FD_STEP) {
                continue;
            }
            let minus = closed_form_layer(&coeffs, m, &pair.evaluate(t - FD_STEP)?);
            let plus = closed_form_layer(&coeffs, m, &pair.evaluate(t + FD_STEP)?);
            let here = closed_form_layer(&coeffs, m, &pair.evaluate(t)?);
            let rhs = layer_rhs(&here, m, profile.omega_sq(t)?);
            for (l, r) in rhs.iter().enumerate() {
                let fd = (plus.values[l] - minus.values[l]) / (2.0 * FD_STEP);
                let denom = fd.abs().max(r.abs()).max(1.0);
                worst = worst.max((fd - r).abs() / denom);
            }
        }
    }
    Ok(worst)
}

fn solve_classical_for(profile: &FrequencyProfile, interval: (f64, f64)) -> Result<TrajectoryPair> {
    crate::classical::solve_classical(profile, interval, 1e-3)
}

/// 𝒞 = v₀v₂ − v₁² on a degree-2 layer: conserved for every frequency
/// profile.
pub fn ermakov_invariant(layer: &MomentLayer) -> Result<f64> {
    if layer.n != 2 {
        return Err(Error::invalid(format!(
            "ermakov invariant needs the degree-2 layer, got degree {}",
            layer.n
        )));
    }
    Ok(layer.values[0] * layer.values[2] - layer.values[1] * layer.values[1])
}

/// Degree-n conserved quadratic ½ Σ_ℓ (−1)^ℓ C(n,ℓ) v_ℓ v_{n−ℓ}.
///
/// Identically zero for odd n; equals [`ermakov_invariant`] at n = 2.
pub fn higher_invariant(layer: &MomentLayer) -> f64 {
    let n = layer.n as usize;
    let mut acc = 0.0;
    for l in 0..=n {
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial(n, l) as f64 * layer.values[l] * layer.values[n - l];
    }
    0.5 * acc
}

/// Symmetrized covariance determinant
/// (⟨x²⟩−⟨x⟩²)(⟨p²⟩−⟨p⟩²) − (⟨D⟩−⟨x⟩⟨p⟩)², bounded below by ħ²/4 for
/// states.
pub fn uncertainty_product(first: &MomentLayer, second: &MomentLayer) -> Result<f64> {
    if first.n != 1 || second.n != 2 {
        return Err(Error::invalid(
            "uncertainty product needs the degree-1 and degree-2 layers",
        ));
    }
    let (x, p) = (first.values[0], first.values[1]);
    let var_x = second.values[0] - x * x;
    let var_p = second.values[2] - p * p;
    let cov = second.values[1] - x * p;
    Ok(var_x * var_p - cov * cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::solve_classical;
    use proptest::prelude::*;

    fn natural() -> SystemParams {
        SystemParams::natural()
    }

    #[test]
    fn rhs_matches_hand_expansion() {
        let layer = MomentLayer::new(2, vec![3.0, -1.0, 2.0]).unwrap();
        // m = 1, ω² = 4: (2v₁, v₂ − 4v₀, −8v₁).
        assert_eq!(layer_rhs(&layer, 1.0, 4.0), vec![-2.0, 2.0 - 12.0, 8.0]);

        let first = MomentLayer::new(1, vec![0.5, -2.0]).unwrap();
        // m = 2, ω² = 9: (v₁/m, −mω²v₀).
        assert_eq!(layer_rhs(&first, 2.0, 9.0), vec![-1.0, -9.0]);
    }

    #[test]
    fn stationary_layer_stays_put() {
        // v = (1/2, 0, 1/2) is an equilibrium of the ω = 1 layer equations.
        let profile = FrequencyProfile::Constant { omega0: 1.0 };
        let init = MomentState::new(
            0.0,
            vec![MomentLayer::new(2, vec![0.5, 0.0, 0.5]).unwrap()],
        )
        .unwrap();
        let series = evolve_layers(&init, &profile, &natural(), 3.0, 1e-3, 500).unwrap();
        for state in &series.states {
            let v = state.layer(2).unwrap().values();
            assert!((v[0] - 0.5).abs() < 1e-12);
            assert!(v[1].abs() < 1e-12);
            assert!((v[2] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_frequency_layer_matches_trig_solution() {
        // Initial (1, 0, 0) at ω = m = 1 evolves as (cos²t, −cos t sin t, sin²t).
        let profile = FrequencyProfile::Constant { omega0: 1.0 };
        let init = MomentState::new(
            0.0,
            vec![MomentLayer::new(2, vec![1.0, 0.0, 0.0]).unwrap()],
        )
        .unwrap();
        let series = evolve_layers(&init, &profile, &natural(), 2.0, 1e-3, 100).unwrap();
        for state in &series.states {
            let t = state.t;
            let v = state.layer(2).unwrap().values();
            assert!((v[0] - t.cos().powi(2)).abs() < 1e-9);
            assert!((v[1] + t.cos() * t.sin()).abs() < 1e-9);
            assert!((v[2] - t.sin().powi(2)).abs() < 1e-9);
        }
    }

    #[test]
    fn basis_at_identity_point_is_diagonal() {
        let id = TrajectoryPoint {
            q1: 1.0,
            q1dot: 0.0,
            q2: 0.0,
            q2dot: 1.0,
        };
        for n in 1..=6u32 {
            for r in 0..=n {
                for l in 0..=n {
                    let got = basis_moment(n, l, r, 1.5, &id);
                    let want = if l == n - r {
                        1.5f64.powi((n - r) as i32) / binomial(n as usize, r as usize) as f64
                    } else {
                        0.0
                    };
                    assert!(
                        (got - want).abs() < 1e-14,
                        "n={n} l={l} r={r}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn closed_form_tracks_integrated_layers() {
        let profile = FrequencyProfile::Sinusoidal {
            omega0: 1.0,
            epsilon: 0.3,
            big_omega: 2.0,
        };
        let params = natural();
        let pair = solve_classical(&profile, (0.0, 5.0), 1e-3).unwrap();
        for n in 1..=4u32 {
            let values: Vec<f64> = (0..=n).map(|l| 0.8 + 0.3 * l as f64).collect();
            let layer = MomentLayer::new(n, values).unwrap();
            let init = MomentState::new(0.0, vec![layer.clone()]).unwrap();
            let series = evolve_layers(&init, &profile, &params, 5.0, 1e-3, 250).unwrap();
            let coeffs = fit_basis(&layer, 1.0, &pair.evaluate(0.0).unwrap()).unwrap();
            for state in &series.states {
                let pt = pair.evaluate(state.t).unwrap();
                let cf = closed_form_layer(&coeffs, 1.0, &pt);
                for l in 0..=n as usize {
                    let diff = (cf.values()[l] - state.layer(n).unwrap().values()[l]).abs();
                    assert!(diff < 1e-8, "n={n} l={l} t={}: diff {diff:.3e}", state.t);
                }
            }
        }
    }

    #[test]
    fn fit_at_later_time_recovers_initial_layer() {
        let profile = FrequencyProfile::Sinusoidal {
            omega0: 1.0,
            epsilon: 0.3,
            big_omega: 2.0,
        };
        let pair = solve_classical(&profile, (0.0, 4.0), 1e-3).unwrap();
        let layer0 = MomentLayer::new(3, vec![1.0, -0.2, 0.4, 0.1]).unwrap();
        let init = MomentState::new(0.0, vec![layer0.clone()]).unwrap();
        let series = evolve_layers(&init, &profile, &natural(), 4.0, 1e-3, 4000).unwrap();
        let end = series.last();
        // Fit coordinates from the evolved data at t = 4, then run the
        // closed form back to t = 0.
        let coeffs = fit_basis(
            end.layer(3).unwrap(),
            1.0,
            &pair.evaluate(end.t).unwrap(),
        )
        .unwrap();
        let back = closed_form_layer(&coeffs, 1.0, &pair.evaluate(0.0).unwrap());
        for l in 0..=3 {
            assert!((back.values()[l] - layer0.values()[l]).abs() < 1e-7);
        }
    }

    #[test]
    fn closed_form_satisfies_layer_equations() {
        let profiles = [
            FrequencyProfile::Constant { omega0: 1.0 },
            FrequencyProfile::Sinusoidal {
                omega0: 1.0,
                epsilon: 0.3,
                big_omega: 2.0,
            },
            FrequencyProfile::PiecewiseConstant {
                breakpoints: vec![(0.0, 1.0), (2.5, 2.0)],
            },
        ];
        for profile in &profiles {
            let worst = verify_closed_form(profile, &natural(), 4, (0.0, 5.0), 40).unwrap();
            assert!(worst < 1e-6, "residual {worst:.3e}");
        }
    }

    #[test]
    fn basis_condition_is_modest_mid_evolution() {
        let profile = FrequencyProfile::Sinusoidal {
            omega0: 1.0,
            epsilon: 0.3,
            big_omega: 2.0,
        };
        let pair = solve_classical(&profile, (0.0, 10.0), 1e-3).unwrap();
        for k in 0..20 {
            let t = 0.5 + k as f64 * 0.47;
            let pt = pair.evaluate(t).unwrap();
            for n in 1..=6 {
                let cond = basis_condition(n, 1.0, &pt);
                assert!(cond < 1e6, "n={n} t={t}: condition {cond:.3e}");
            }
        }
    }

    #[test]
    fn ermakov_invariant_is_conserved() {
        let profile = FrequencyProfile::Sinusoidal {
            omega0: 1.0,
            epsilon: 0.3,
            big_omega: 2.0,
        };
        let init = MomentState::new(
            0.0,
            vec![MomentLayer::new(2, vec![0.7, 0.1, 0.9]).unwrap()],
        )
        .unwrap();
        let series = evolve_layers(&init, &profile, &natural(), 10.0, 1e-3, 100).unwrap();
        let c0 = ermakov_invariant(series.states[0].layer(2).unwrap()).unwrap();
        for state in &series.states {
            let c = ermakov_invariant(state.layer(2).unwrap()).unwrap();
            assert!((c - c0).abs() < 1e-9, "drift {:.3e}", (c - c0).abs());
        }
    }

    #[test]
    fn quartic_invariant_is_conserved() {
        let profile = FrequencyProfile::PiecewiseConstant {
            breakpoints: vec![(0.0, 1.0), (5.0, 2.0)],
        };
        let init = MomentState::new(
            0.0,
            vec![MomentLayer::new(4, vec![0.9, 0.05, 0.4, -0.1, 0.8]).unwrap()],
        )
        .unwrap();
        let series = evolve_layers(&init, &profile, &natural(), 10.0, 1e-3, 100).unwrap();
        let c0 = higher_invariant(series.states[0].layer(4).unwrap());
        for state in &series.states {
            let c = higher_invariant(state.layer(4).unwrap());
            assert!((c - c0).abs() < 1e-9, "drift {:.3e}", (c - c0).abs());
        }
    }

    #[test]
    fn invariant_errors_on_wrong_degree() {
        let layer = MomentLayer::new(3, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(ermakov_invariant(&layer).is_err());
    }

    proptest! {
        #[test]
        fn odd_invariants_vanish_identically(
            values in proptest::collection::vec(-10.0f64..10.0, 4)
        ) {
            let layer = MomentLayer::new(3, values).unwrap();
            let scale = layer.magnitude().max(1.0);
            prop_assert!(higher_invariant(&layer).abs() < 1e-13 * scale * scale);
        }

        #[test]
        fn degree_two_invariant_equals_ermakov(
            values in proptest::collection::vec(-10.0f64..10.0, 3)
        ) {
            let layer = MomentLayer::new(2, values).unwrap();
            let scale = layer.magnitude().max(1.0);
            let diff = (higher_invariant(&layer) - ermakov_invariant(&layer).unwrap()).abs();
            prop_assert!(diff < 1e-14 * scale * scale);
        }
    }
}

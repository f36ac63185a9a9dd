//! Independent check on every other subsystem: integrate the full
//! Schrödinger equation iħ∂ₜψ = [−ħ²/2m ∂ₓ² + V(x,t)]ψ on a periodic grid
//! with Strang-split spectral steps, and extract symmetrized moments by
//! quadrature.
//!
//! Both split factors are diagonal (one in position, one in momentum), so
//! each step is exactly unitary; the only errors are the O(dt²) splitting
//! defect and spatial truncation, which the boundary-mass guard watches.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::classical::SystemParams;
use crate::error::Error;
use crate::gaussian::{GaussianState, PotentialSpec};
use crate::moments::{MomentLayer, MomentSeries, MomentState};
use crate::tolerances::{BOUNDARY_MASS_MAX, MOMENT_IMAG_MAX, PDE_NORM_DRIFT};
use crate::Result;

/// Uniform periodic grid on [x_min, x_max) with n cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::invalid("grid needs finite x_max > x_min"));
        }
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::invalid("grid size must be even and at least 16"));
        }
        Ok(GridSpec { x_min, x_max, n })
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    /// Wavenumber of FFT bin i in the usual signed layout.
    pub fn k(&self, i: usize) -> f64 {
        let j = if i < self.n / 2 {
            i as f64
        } else {
            i as f64 - self.n as f64
        };
        2.0 * std::f64::consts::PI * j / self.length()
    }
}

/// Discretized wavefunction on a [`GridSpec`].
#[derive(Debug, Clone)]
pub struct GridWavefunction {
    pub spec: GridSpec,
    pub psi: Vec<Complex<f64>>,
}

impl GridWavefunction {
    pub fn norm_sq(&self) -> f64 {
        self.spec.dx() * self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn renormalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            for c in &mut self.psi {
                *c *= inv;
            }
        }
    }

    /// Probability held in the outer 5% of cells on each side; a proxy for
    /// how badly the periodic box truncates the state.
    pub fn boundary_mass(&self) -> f64 {
        let edge = (self.spec.n / 20).max(1);
        let dx = self.spec.dx();
        let left: f64 = self.psi[..edge].iter().map(|c| c.norm_sqr()).sum();
        let right: f64 = self.psi[self.spec.n - edge..]
            .iter()
            .map(|c| c.norm_sqr())
            .sum();
        (left + right) * dx
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Sample a Gaussian packet on the grid: the [`GaussianState`] covariance
/// dictionary gives ψ ∝ exp(iγ + ip(x−q)/ħ − A(x−q)²) with
/// A = 1/4α² − iβ/2ħα. The amplitude is renormalized on the grid, and a
/// packet that touches the box edges is rejected.
pub fn init_gaussian(
    spec: &GridSpec,
    g: &GaussianState,
    params: &SystemParams,
) -> Result<GridWavefunction> {
    if g.alpha <= 0.0 {
        return Err(Error::invalid("gaussian width must be positive"));
    }
    let hbar = params.hbar();
    let a_re = 1.0 / (4.0 * g.alpha * g.alpha);
    let a_im = -g.beta / (2.0 * hbar * g.alpha);
    let psi: Vec<Complex<f64>> = (0..spec.n)
        .map(|i| {
            let d = spec.x(i) - g.q;
            let phase = g.gamma + g.p * d / hbar - a_im * d * d;
            let mag = (-a_re * d * d).exp();
            Complex::from_polar(mag, phase)
        })
        .collect();
    let mut wf = GridWavefunction { spec: *spec, psi };
    if wf.norm() == 0.0 {
        return Err(Error::invalid("gaussian underflows to zero on this grid"));
    }
    wf.renormalize();
    let mass = wf.boundary_mass();
    if mass > BOUNDARY_MASS_MAX {
        return Err(Error::guard(
            "pde_oracle",
            format!("initial packet leaks {mass:.3e} probability into the box edges; enlarge the grid"),
        ));
    }
    Ok(wf)
}

/// Strang stepper with the kinetic phase and coordinate powers precomputed
/// for a fixed step size.
pub struct SplitStepper {
    spec: GridSpec,
    dt: f64,
    kinetic_phase: Vec<Complex<f64>>,
    x2: Vec<f64>,
    x4: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl SplitStepper {
    pub fn new(spec: &GridSpec, params: &SystemParams, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt must be finite and > 0"));
        }
        let (m, hbar) = (params.m(), params.hbar());
        let kinetic_phase = (0..spec.n)
            .map(|i| {
                let k = spec.k(i);
                Complex::from_polar(1.0, -hbar * k * k * dt / (2.0 * m))
            })
            .collect();
        let x2: Vec<f64> = (0..spec.n).map(|i| spec.x(i) * spec.x(i)).collect();
        let x4 = x2.iter().map(|v| v * v).collect();
        let (fft, ifft) = plans(spec.n);
        Ok(SplitStepper {
            spec: *spec,
            dt,
            kinetic_phase,
            x2,
            x4,
            fft,
            ifft,
        })
    }

    /// Advance one step from `t`: half potential, full kinetic, half
    /// potential, with the potential held at its t + dt/2 value.
    pub fn step(
        &self,
        wf: &mut GridWavefunction,
        pot: &PotentialSpec,
        params: &SystemParams,
        t: f64,
    ) -> Result<()> {
        if wf.spec != self.spec {
            return Err(Error::invalid("wavefunction grid does not match stepper"));
        }
        let hbar = params.hbar();
        let mid = t + 0.5 * self.dt;
        let v2 = params.m() * pot.profile.omega_sq_at_stage(mid, mid)?;
        let scale = -0.5 * self.dt / hbar;

        let half_potential = |psi: &mut [Complex<f64>]| {
            for (i, c) in psi.iter_mut().enumerate() {
                let v = pot.v0 + 0.5 * v2 * self.x2[i] + pot.v4 * self.x4[i] / 24.0;
                *c *= Complex::from_polar(1.0, scale * v);
            }
        };

        half_potential(&mut wf.psi);
        self.fft.process(&mut wf.psi);
        let inv_n = 1.0 / self.spec.n as f64;
        for (c, phase) in wf.psi.iter_mut().zip(&self.kinetic_phase) {
            *c *= phase * inv_n;
        }
        self.ifft.process(&mut wf.psi);
        half_potential(&mut wf.psi);
        Ok(())
    }
}

/// p̂^j ψ for j = 0..=j_max via Fourier multipliers, shared by all moment
/// extractions at one sample.
fn momentum_powers(
    wf: &GridWavefunction,
    params: &SystemParams,
    j_max: u32,
) -> Vec<Vec<Complex<f64>>> {
    let n = wf.spec.n;
    let (fft, ifft) = plans(n);
    let mut hat = wf.psi.clone();
    fft.process(&mut hat);
    let inv_n = 1.0 / n as f64;

    let mut powers = Vec::with_capacity(j_max as usize + 1);
    powers.push(wf.psi.clone());
    for j in 1..=j_max {
        let mut phi: Vec<Complex<f64>> = (0..n)
            .map(|i| hat[i] * (params.hbar() * wf.spec.k(i)).powi(j as i32) * inv_n)
            .collect();
        ifft.process(&mut phi);
        powers.push(phi);
    }
    powers
}

fn moment_from_powers(
    wf: &GridWavefunction,
    powers: &[Vec<Complex<f64>>],
    n: u32,
    l: u32,
) -> Result<f64> {
    let dx = wf.spec.dx();
    let mut total = Complex::new(0.0, 0.0);
    for k in 0..=l {
        let weight = crate::numeric::binomial(l as usize, k as usize) as f64
            / 2f64.powi(l as i32);
        let bra = &powers[k as usize];
        let ket = &powers[(l - k) as usize];
        let mut acc = Complex::new(0.0, 0.0);
        for i in 0..wf.spec.n {
            acc += bra[i].conj() * wf.spec.x(i).powi((n - l) as i32) * ket[i];
        }
        total += weight * acc * dx;
    }
    if total.im.abs() > MOMENT_IMAG_MAX * total.re.abs().max(1.0) {
        return Err(Error::guard(
            "pde_oracle",
            format!(
                "moment ({n},{l}) has spurious imaginary part {:.3e}",
                total.im
            ),
        ));
    }
    Ok(total.re)
}

/// Symmetrized moment ⟨O_{n,l}⟩ of the grid state.
pub fn grid_moment(wf: &GridWavefunction, params: &SystemParams, n: u32, l: u32) -> Result<f64> {
    if l > n {
        return Err(Error::invalid("grid_moment requires l <= n"));
    }
    let powers = momentum_powers(wf, params, l);
    moment_from_powers(wf, &powers, n, l)
}

/// All layers ⟨O_{n,ℓ}⟩ for n ≤ `n_max` at once, reusing the momentum
/// powers across every entry. The state time is reported as `t`.
pub fn moments_up_to(
    wf: &GridWavefunction,
    params: &SystemParams,
    n_max: u32,
    t: f64,
) -> Result<MomentState> {
    let powers = momentum_powers(wf, params, n_max);
    let mut layers = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let values = (0..=n)
            .map(|l| moment_from_powers(wf, &powers, n, l))
            .collect::<Result<Vec<f64>>>()?;
        layers.push(MomentLayer::new(n, values)?);
    }
    MomentState::new(t, layers)
}

/// Full-equation moment series together with the conservation diagnostics
/// accumulated along the run.
#[derive(Debug, Clone)]
pub struct OracleOutput {
    pub series: MomentSeries,
    /// Largest |norm − 1| seen at any sample.
    pub norm_drift: f64,
    /// Largest boundary mass seen at any sample.
    pub boundary_mass_max: f64,
}

/// Integrate a Gaussian initial state through the full equation and sample
/// moment layers every `sample_stride` steps.
///
/// Guards abort the run when probability reaches the box edges or when the
/// norm drifts beyond [`PDE_NORM_DRIFT`]: past either point the spectral
/// representation no longer describes the intended state.
#[allow(clippy::too_many_arguments)]
pub fn run_oracle(
    initial: &GaussianState,
    pot: &PotentialSpec,
    params: &SystemParams,
    spec: &GridSpec,
    t0: f64,
    t_end: f64,
    dt: f64,
    n_max: u32,
    sample_stride: usize,
) -> Result<OracleOutput> {
    let wf = init_gaussian(spec, initial, params)?;
    run_oracle_wavefunction(wf, pot, params, t0, t_end, dt, n_max, sample_stride)
}

/// [`run_oracle`] starting from an arbitrary prepared grid state.
#[allow(clippy::too_many_arguments)]
pub fn run_oracle_wavefunction(
    mut wf: GridWavefunction,
    pot: &PotentialSpec,
    params: &SystemParams,
    t0: f64,
    t_end: f64,
    dt: f64,
    n_max: u32,
    sample_stride: usize,
) -> Result<OracleOutput> {
    if sample_stride == 0 {
        return Err(Error::invalid("sample_stride must be at least 1"));
    }
    let grid = crate::classical::TimeGrid::spanning(t0, t_end, dt)?;
    let stepper = SplitStepper::new(&wf.spec, params, grid.dt)?;

    let mut norm_drift = 0.0f64;
    let mut boundary_max = 0.0f64;
    let mut states = Vec::new();

    let mut observe = |wf: &GridWavefunction, t: f64| -> Result<MomentState> {
        let drift = (wf.norm() - 1.0).abs();
        let mass = wf.boundary_mass();
        if mass > BOUNDARY_MASS_MAX {
            return Err(Error::guard(
                "pde_oracle",
                format!("boundary mass {mass:.3e} at t = {t:.6}; the box is too small for this run"),
            ));
        }
        if drift > PDE_NORM_DRIFT {
            return Err(Error::guard(
                "pde_oracle",
                format!("norm drifted by {drift:.3e} at t = {t:.6}"),
            ));
        }
        norm_drift = norm_drift.max(drift);
        boundary_max = boundary_max.max(mass);
        moments_up_to(wf, params, n_max, t)
    };

    states.push(observe(&wf, t0)?);
    for k in 0..grid.count {
        stepper.step(&mut wf, pot, params, grid.t(k))?;
        if (k + 1) % sample_stride == 0 || k + 1 == grid.count {
            states.push(observe(&wf, grid.t(k + 1))?);
        }
    }
    Ok(OracleOutput {
        series: MomentSeries { states },
        norm_drift,
        boundary_mass_max: boundary_max,
    })
}

//! Drive the core subsystems from a validated configuration and return their
//! moment series in a common shape for output and comparison.

use moment_lab_core::classical::{solve_classical, TimeGrid};
use moment_lab_core::gaussian::{evolve_gaussian, gaussian_moments, GaussianState};
use moment_lab_core::moments::{
    closed_form_layer, evolve_layers, fit_basis, MomentLayer, MomentSeries, MomentState,
};
use moment_lab_core::oracle::run_oracle;
use moment_lab_core::{Error, Result};

use crate::config::{Engine, InitialSection, Loaded};

/// One engine's output: the moment series plus scalar diagnostics worth
/// echoing into the summary.
pub struct EngineRun {
    pub engine: Engine,
    pub series: MomentSeries,
    pub diagnostics: Vec<(&'static str, f64)>,
}

/// Execute every engine listed in the configuration, in listed order.
pub fn run_engines(loaded: &Loaded) -> Result<Vec<EngineRun>> {
    loaded
        .cfg
        .engines
        .iter()
        .map(|engine| run_engine(*engine, loaded))
        .collect()
}

fn run_engine(engine: Engine, loaded: &Loaded) -> Result<EngineRun> {
    match engine {
        Engine::Hierarchy => run_hierarchy(loaded),
        Engine::ClosedForm => run_closed_form(loaded),
        Engine::Gaussian => run_gaussian(loaded),
        Engine::Pde => run_pde(loaded),
    }
}

fn initial_gaussian(loaded: &Loaded) -> Result<GaussianState> {
    match &loaded.cfg.initial {
        InitialSection::Gaussian {
            q,
            p,
            alpha,
            beta,
            gamma,
        } => GaussianState::new(*q, *p, *alpha, *beta, *gamma),
        InitialSection::Moments { .. } => Err(Error::invalid(
            "this engine needs a gaussian initial state",
        )),
    }
}

/// Initial moment layers at t0, either given directly or derived from the
/// gaussian packet.
fn initial_moments(loaded: &Loaded) -> Result<MomentState> {
    let run = &loaded.cfg.run;
    match &loaded.cfg.initial {
        InitialSection::Gaussian { .. } => {
            let g = initial_gaussian(loaded)?;
            let state = gaussian_moments(&g, &loaded.params, run.n_max)?;
            MomentState::new(run.t0, state.layers().to_vec())
        }
        InitialSection::Moments { layers } => {
            let layers = layers
                .iter()
                .map(|l| MomentLayer::new(l.n, l.values.clone()))
                .collect::<Result<Vec<_>>>()?;
            MomentState::new(run.t0, layers)
        }
    }
}

fn run_hierarchy(loaded: &Loaded) -> Result<EngineRun> {
    let run = &loaded.cfg.run;
    let initial = initial_moments(loaded)?;
    let series = evolve_layers(
        &initial,
        &loaded.pot.profile,
        &loaded.params,
        run.t1,
        run.dt,
        run.sample_stride,
    )?;
    Ok(EngineRun {
        engine: Engine::Hierarchy,
        series,
        diagnostics: Vec::new(),
    })
}

fn run_closed_form(loaded: &Loaded) -> Result<EngineRun> {
    let run = &loaded.cfg.run;
    let initial = initial_moments(loaded)?;
    let pair = solve_classical(&loaded.pot.profile, (run.t0, run.t1), run.dt)?;
    let start = pair.evaluate(run.t0)?;
    let m = loaded.params.m();

    let fits = initial
        .layers()
        .iter()
        .map(|layer| fit_basis(layer, m, &start))
        .collect::<Result<Vec<_>>>()?;

    let grid = TimeGrid::spanning(run.t0, run.t1, run.dt)?;
    let states = sample_times(&grid, run.sample_stride)
        .into_iter()
        .map(|t| {
            let pt = pair.evaluate(t)?;
            let layers = fits
                .iter()
                .map(|coeffs| closed_form_layer(coeffs, m, &pt))
                .collect();
            MomentState::new(t, layers)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(EngineRun {
        engine: Engine::ClosedForm,
        series: MomentSeries { states },
        diagnostics: vec![("wronskian_drift", pair.max_wronskian_drift())],
    })
}

fn run_gaussian(loaded: &Loaded) -> Result<EngineRun> {
    let run = &loaded.cfg.run;
    let g0 = initial_gaussian(loaded)?;
    let series = evolve_gaussian(
        &g0,
        &loaded.pot,
        &loaded.params,
        run.t0,
        run.t1,
        run.dt,
        run.sample_stride,
    )?;
    let final_alpha = series.last().1.alpha;
    let states = series
        .samples
        .iter()
        .map(|(t, g)| {
            let state = gaussian_moments(g, &loaded.params, run.n_max)?;
            MomentState::new(*t, state.layers().to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EngineRun {
        engine: Engine::Gaussian,
        series: MomentSeries { states },
        diagnostics: vec![("final_alpha", final_alpha)],
    })
}

fn run_pde(loaded: &Loaded) -> Result<EngineRun> {
    let run = &loaded.cfg.run;
    let g0 = initial_gaussian(loaded)?;
    let spec = loaded
        .grid
        .ok_or_else(|| Error::invalid("engine pde needs a grid section"))?;

    // Choose a step that subdivides the sampling interval exactly, so the
    // full-equation samples land on the same times as the other engines'.
    let span = run.t1 - run.t0;
    let n_samples = (span / (run.dt * run.sample_stride as f64))
        .round()
        .max(1.0);
    let sample_dt = span / n_samples;
    let requested = run.pde_dt.unwrap_or(run.dt / 5.0);
    let per_sample = (sample_dt / requested).round().max(1.0) as usize;
    let dt = sample_dt / per_sample as f64;

    let out = run_oracle(
        &g0,
        &loaded.pot,
        &loaded.params,
        &spec,
        run.t0,
        run.t1,
        dt,
        run.n_max,
        per_sample,
    )?;
    Ok(EngineRun {
        engine: Engine::Pde,
        series: out.series,
        diagnostics: vec![
            ("norm_drift", out.norm_drift),
            ("boundary_mass_max", out.boundary_mass_max),
        ],
    })
}

/// The sampling instants used by the stepping engines: every `stride` steps
/// plus both endpoints.
pub fn sample_times(grid: &TimeGrid, stride: usize) -> Vec<f64> {
    let mut ts = vec![grid.t0];
    for k in 0..grid.count {
        if (k + 1) % stride == 0 || k + 1 == grid.count {
            ts.push(grid.t(k + 1));
        }
    }
    ts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn two_engine_config() -> Loaded {
        Config::parse(
            r#"{
                "potential": {"profile": {"type": "sinusoidal", "omega0": 1.0, "epsilon": 0.3, "big_omega": 2.0}},
                "initial": {"type": "gaussian", "q": 0.5, "p": 0.0, "alpha": 0.5, "beta": 0.0},
                "run": {"t0": 0.0, "t1": 2.0, "dt": 0.001, "n_max": 3, "sample_stride": 200},
                "engines": ["hierarchy", "closed_form"]
            }"#,
        )
        .unwrap()
        .prepare(false)
        .unwrap()
    }

    #[test]
    fn engines_share_sample_times_and_agree() {
        let loaded = two_engine_config();
        let runs = run_engines(&loaded).unwrap();
        assert_eq!(runs.len(), 2);
        let (a, b) = (&runs[0].series, &runs[1].series);
        assert_eq!(a.states.len(), b.states.len());
        for (sa, sb) in a.states.iter().zip(&b.states) {
            assert!((sa.t - sb.t).abs() < 1e-12);
            for n in 1..=3u32 {
                let (la, lb) = (sa.layer(n).unwrap(), sb.layer(n).unwrap());
                for l in 0..=n {
                    assert!(
                        (la.value(l) - lb.value(l)).abs() < 1e-8,
                        "n={n} l={l} t={}",
                        sa.t
                    );
                }
            }
        }
    }

    #[test]
    fn sample_times_cover_endpoints() {
        let grid = TimeGrid::spanning(0.0, 1.0, 0.3).unwrap();
        let ts = sample_times(&grid, 2);
        assert_eq!(ts.first().copied(), Some(0.0));
        assert!((ts.last().unwrap() - 1.0).abs() < 1e-12);
    }
}

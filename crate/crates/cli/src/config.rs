//! JSON run configuration: schema, loading, and conversion into the core
//! library's validated objects.

use std::fmt;
use std::path::{Path, PathBuf};

use moment_lab_core::gaussian::PotentialSpec;
use moment_lab_core::oracle::GridSpec;
use moment_lab_core::{Error, FrequencyProfile, SystemParams};
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub system: SystemSection,
    pub potential: PotentialSection,
    pub initial: InitialSection,
    pub run: RunSection,
    pub engines: Vec<Engine>,
    #[serde(default)]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub allow_inverted: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection { m: 1.0, hbar: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default)]
    pub v0: f64,
    #[serde(default)]
    pub v4: f64,
    pub profile: ProfileSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSection {
    Constant {
        omega0: f64,
    },
    Sinusoidal {
        omega0: f64,
        epsilon: f64,
        big_omega: f64,
    },
    Piecewise {
        breakpoints: Vec<(f64, f64)>,
    },
    Tabulated {
        samples: Vec<(f64, f64)>,
    },
}

impl ProfileSection {
    pub fn to_profile(&self) -> FrequencyProfile {
        match self {
            ProfileSection::Constant { omega0 } => FrequencyProfile::Constant { omega0: *omega0 },
            ProfileSection::Sinusoidal {
                omega0,
                epsilon,
                big_omega,
            } => FrequencyProfile::Sinusoidal {
                omega0: *omega0,
                epsilon: *epsilon,
                big_omega: *big_omega,
            },
            ProfileSection::Piecewise { breakpoints } => FrequencyProfile::PiecewiseConstant {
                breakpoints: breakpoints.clone(),
            },
            ProfileSection::Tabulated { samples } => FrequencyProfile::Tabulated {
                samples: samples.clone(),
            },
        }
    }
}

impl fmt::Display for ProfileSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileSection::Constant { omega0 } => write!(f, "constant omega0={omega0:e}"),
            ProfileSection::Sinusoidal {
                omega0,
                epsilon,
                big_omega,
            } => write!(
                f,
                "sinusoidal omega0={omega0:e} epsilon={epsilon:e} big_omega={big_omega:e}"
            ),
            ProfileSection::Piecewise { breakpoints } => {
                write!(f, "piecewise")?;
                for (t, w) in breakpoints {
                    write!(f, " {t:e}:{w:e}")?;
                }
                Ok(())
            }
            ProfileSection::Tabulated { samples } => {
                write!(f, "tabulated {} samples", samples.len())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    Gaussian {
        q: f64,
        p: f64,
        alpha: f64,
        beta: f64,
        #[serde(default)]
        gamma: f64,
    },
    Moments {
        layers: Vec<LayerSection>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSection {
    pub n: u32,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub n_max: u32,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    /// Step for the full-equation engine; defaults to a fifth of `dt`.
    #[serde(default)]
    pub pde_dt: Option<f64>,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Hierarchy,
    ClosedForm,
    Gaussian,
    Pde,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Hierarchy => "hierarchy",
            Engine::ClosedForm => "closed_form",
            Engine::Gaussian => "gaussian",
            Engine::Pde => "pde",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

// Keep the absent-section default aligned with the per-field serde defaults.
impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: None, formats: default_formats() }
    }
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// A configuration with its core-level objects constructed and every
/// structural constraint checked.
pub struct Loaded {
    pub cfg: Config,
    pub params: SystemParams,
    pub pot: PotentialSpec,
    pub grid: Option<GridSpec>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure {
            code: 2,
            message: format!("cannot read config {}: {e}", path.display()),
        })?;
        Config::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Config, Failure> {
        serde_json::from_str(text).map_err(|e| Failure {
            code: 2,
            message: format!("config is not valid: {e}"),
        })
    }

    /// Validate and build the core objects. `allow_inverted_flag` is OR-ed
    /// with the config's own `allow_inverted` field.
    pub fn prepare(self, allow_inverted_flag: bool) -> Result<Loaded, Error> {
        let params = SystemParams::new(self.system.m, self.system.hbar)?;
        let profile = self.potential.profile.to_profile();
        profile.validate(allow_inverted_flag || self.allow_inverted)?;
        if !self.potential.v0.is_finite() || !self.potential.v4.is_finite() {
            return Err(Error::invalid("potential coefficients must be finite"));
        }
        if self.potential.v4 < 0.0 {
            return Err(Error::invalid(
                "a negative quartic coefficient makes the potential unbounded below",
            ));
        }

        let run = &self.run;
        if !run.t0.is_finite() || !run.t1.is_finite() || run.t1 <= run.t0 {
            return Err(Error::invalid("run.t1 must exceed run.t0"));
        }
        if !(run.dt.is_finite() && run.dt > 0.0) {
            return Err(Error::invalid("run.dt must be positive"));
        }
        if run.n_max == 0 || run.n_max > 12 {
            return Err(Error::invalid("run.n_max must lie in 1..=12"));
        }
        if run.sample_stride == 0 {
            return Err(Error::invalid("run.sample_stride must be at least 1"));
        }
        if let Some(pde_dt) = run.pde_dt {
            if !(pde_dt.is_finite() && pde_dt > 0.0) {
                return Err(Error::invalid("run.pde_dt must be finite and > 0"));
            }
        }

        if self.engines.is_empty() {
            return Err(Error::invalid("at least one engine must be listed"));
        }
        let mut seen = Vec::new();
        for engine in &self.engines {
            if seen.contains(engine) {
                return Err(Error::invalid(format!("engine {engine} listed twice")));
            }
            seen.push(*engine);
        }

        match &self.initial {
            InitialSection::Gaussian { alpha, .. } => {
                if *alpha <= 0.0 {
                    return Err(Error::invalid("initial.alpha must be positive"));
                }
            }
            InitialSection::Moments { layers } => {
                if layers.is_empty() {
                    return Err(Error::invalid("initial.layers must not be empty"));
                }
                if layers.windows(2).any(|w| w[1].n <= w[0].n) {
                    return Err(Error::invalid(
                        "initial.layers must come in strictly increasing degree",
                    ));
                }
                for layer in layers {
                    if layer.values.len() != layer.n as usize + 1 {
                        return Err(Error::invalid(format!(
                            "initial layer {} needs {} values",
                            layer.n,
                            layer.n + 1
                        )));
                    }
                }
                for engine in &self.engines {
                    if matches!(engine, Engine::Gaussian | Engine::Pde) {
                        return Err(Error::invalid(format!(
                            "engine {engine} needs a gaussian initial state"
                        )));
                    }
                }
            }
        }

        let grid = match &self.grid {
            Some(section) => Some(GridSpec::new(section.x_min, section.x_max, section.n)?),
            None => None,
        };
        if self.engines.contains(&Engine::Pde) && grid.is_none() {
            return Err(Error::invalid("engine pde needs a grid section"));
        }

        let pot = PotentialSpec {
            v0: self.potential.v0,
            v4: self.potential.v4,
            profile,
        };
        Ok(Loaded {
            cfg: self,
            params,
            pot,
            grid,
        })
    }
}

//! TOML run configuration and its translation into core types.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constructions::{bump_family, odd_periodic_extension, steady_state_1d};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::integrate::{ProblemSpec, Scheme, StepperConfig};
use crate::nonlinear::{NonlinearitySpec, SpsSign};
use crate::operators::{OperatorFlavor, OperatorSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridConfig {
    Interval {
        length: f64,
        #[serde(default)]
        origin: f64,
        nodes: usize,
    },
    RadialBall {
        radius: f64,
        #[serde(default = "default_dim")]
        dim: u32,
        nodes: usize,
    },
}

fn default_dim() -> u32 {
    3
}

impl GridConfig {
    pub fn build(&self) -> Result<Arc<Grid>> {
        match *self {
            GridConfig::Interval { length, origin, nodes } => Grid::interval_at(origin, length, nodes),
            GridConfig::RadialBall { radius, dim, nodes } => Grid::radial_ball(radius, dim, nodes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub mu: f64,
}

fn default_alpha() -> f64 {
    1.0
}

impl OperatorConfig {
    pub fn build(&self) -> OperatorSpec {
        OperatorSpec { alpha: self.alpha, mu: self.mu, flavor: OperatorFlavor::Spectral }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityConfig {
    Zero,
    Power { p: f64 },
    Choquard { p: f64, n: u32 },
    Sps {
        q: f64,
        lambda: f64,
        #[serde(default = "default_sign")]
        sign: String,
    },
}

fn default_sign() -> String {
    "minus".into()
}

impl NonlinearityConfig {
    pub fn build(&self) -> Result<NonlinearitySpec> {
        Ok(match self {
            NonlinearityConfig::Zero => NonlinearitySpec::Zero,
            NonlinearityConfig::Power { p } => NonlinearitySpec::Power { p: *p },
            NonlinearityConfig::Choquard { p, n } => NonlinearitySpec::Choquard { p: *p, n: *n },
            NonlinearityConfig::Sps { q, lambda, sign } => {
                let sign = match sign.as_str() {
                    "minus" => SpsSign::Minus,
                    "plus" => SpsSign::Plus,
                    other => {
                        return Err(Error::Config(format!(
                            "nonlinearity sign must be \"minus\" or \"plus\", got {other:?}"
                        )))
                    }
                };
                NonlinearitySpec::Sps { q: *q, lambda: *lambda, sign }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub grid: GridConfig,
    pub operator: OperatorConfig,
    pub nonlinearity: NonlinearityConfig,
    pub modes: usize,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<ProblemSpec> {
        let spec = ProblemSpec::new(
            self.grid.build()?,
            self.operator.build(),
            self.nonlinearity.build()?,
            self.modes,
        );
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepperConfigToml {
    pub dt0: f64,
    pub t_end: f64,
    #[serde(default = "default_cap")]
    pub blowup_cap: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default)]
    pub store_fields: bool,
}

fn default_cap() -> f64 {
    1e8
}
fn default_safety() -> f64 {
    1.0
}
fn default_record_every() -> usize {
    1
}
fn default_scheme() -> String {
    "etd2rk".into()
}

impl StepperConfigToml {
    pub fn build(&self) -> Result<StepperConfig> {
        let scheme = match self.scheme.as_str() {
            "etd1" => Scheme::Etd1,
            "etd2rk" => Scheme::Etd2rk,
            other => return Err(Error::Config(format!("unknown scheme {other:?}"))),
        };
        let cfg = StepperConfig {
            dt0: self.dt0,
            t_end: self.t_end,
            blowup_cap: self.blowup_cap,
            safety: self.safety,
            record_every: self.record_every,
            scheme,
            store_fields: self.store_fields,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Initial data: either explicit mode coefficients or a named construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// Coefficients against the orthonormal eigenbasis.
    Modes { coefficients: Vec<f64> },
    /// `amplitude * sin(mode * pi * (x - x0) / L)` (intervals) or the
    /// analogous radial mode.
    Sine {
        amplitude: f64,
        #[serde(default = "default_mode")]
        mode: usize,
    },
    /// `amplitude * exp(-((x - center)/width)^2)`, clipped to zero at the
    /// boundary through multiplication by the principal mode shape.
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// `lambda *` the positive steady profile of the power problem on (0,1).
    SteadyScaled { lambda: f64 },
    /// `lambda *` the odd 2-periodic extension of the steady profile.
    OddPeriodic { lambda: f64 },
    /// Normalised bump combination on the ball.
    BumpCombo {
        m: f64,
        k: usize,
        #[serde(default)]
        delta: Option<f64>,
        alphas: Vec<f64>,
    },
}

fn default_mode() -> usize {
    1
}

impl InitialData {
    pub fn build(&self, problem: &ProblemSpec) -> Result<Field> {
        let grid = &problem.grid;
        match self {
            InitialData::Modes { coefficients } => {
                if coefficients.len() > problem.modes {
                    return Err(Error::Config("more coefficients than basis modes".into()));
                }
                let basis = crate::operators::SpectralBasis::dirichlet(grid, problem.modes)?;
                let mut c = coefficients.clone();
                c.resize(problem.modes, 0.0);
                Ok(basis.synthesize(&c))
            }
            InitialData::Sine { amplitude, mode } => {
                let m = *mode as f64;
                match *grid.kind() {
                    crate::grid::GridKind::Interval { origin, length } => Field::from_fn(grid, |x| {
                        amplitude * (m * std::f64::consts::PI * (x - origin) / length).sin()
                    }),
                    crate::grid::GridKind::RadialBall { radius, .. } => Field::from_fn(grid, |r| {
                        let a = m * std::f64::consts::PI / radius;
                        if r == 0.0 {
                            amplitude * a
                        } else {
                            amplitude * (a * r).sin() / r
                        }
                    }),
                }
            }
            InitialData::Gaussian { amplitude, center, width } => {
                let (lo, hi) = domain_span(grid);
                Field::from_fn(grid, |x| {
                    let bump = (-((x - center) / width).powi(2)).exp();
                    let edge = ((x - lo) * (hi - x) / ((hi - lo) / 2.0).powi(2)).max(0.0);
                    amplitude * bump * edge
                })
            }
            InitialData::SteadyScaled { lambda } => {
                let p = power_exponent(problem)?;
                let profile = steady_state_1d(p)?;
                Field::from_fn(grid, |x| lambda * profile.eval(x))
            }
            InitialData::OddPeriodic { lambda } => {
                let p = power_exponent(problem)?;
                let profile = steady_state_1d(p)?;
                Ok(odd_periodic_extension(&profile, grid)?.scale(*lambda))
            }
            InitialData::BumpCombo { m, k, delta, alphas } => {
                let q = match problem.nonlinearity {
                    NonlinearitySpec::Sps { q, .. } => q,
                    NonlinearitySpec::Power { p } => p,
                    _ => {
                        return Err(Error::Config(
                            "bump combinations need the competing or power nonlinearity".into(),
                        ))
                    }
                };
                let family = bump_family(*k, *delta, *m, q)?;
                family.combo_on(grid, alphas)
            }
        }
    }
}

fn domain_span(grid: &Arc<Grid>) -> (f64, f64) {
    let nodes = grid.nodes();
    (nodes[0], nodes[nodes.len() - 1])
}

fn power_exponent(problem: &ProblemSpec) -> Result<f64> {
    match problem.nonlinearity {
        NonlinearitySpec::Power { p } => Ok(p),
        _ => Err(Error::Config("steady-profile data need the power nonlinearity".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// One of "amplitude", "lambda", "q", "dt0".
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_id")]
    pub id: String,
    pub problem: ProblemConfig,
    pub stepper: StepperConfigToml,
    pub initial_data: InitialData,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_id() -> String {
    "run".into()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn emit(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
id = "small-data"

[problem]
modes = 32

[problem.grid]
kind = "interval"
length = 1.0
nodes = 128

[problem.operator]
alpha = 1.0
mu = 0.0

[problem.nonlinearity]
kind = "power"
p = 3.0

[stepper]
dt0 = 0.01
t_end = 1.0

[initial_data]
kind = "sine"
amplitude = 0.1
"#;

    #[test]
    fn parse_build_roundtrip() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        let problem = cfg.problem.build().unwrap();
        assert_eq!(problem.modes, 32);
        let stepper = cfg.stepper.build().unwrap();
        assert_eq!(stepper.record_every, 1);
        let u0 = cfg.initial_data.build(&problem).unwrap();
        // the midpoint need not be a node; the sampled sup sits just below
        assert!((u0.linf() - 0.1).abs() < 1e-4);
        // config round-trips through its own emitter
        let again = RunConfig::parse(&cfg.emit()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn bad_configs_are_config_errors() {
        assert!(matches!(RunConfig::parse("not toml at all ["), Err(Error::Config(_))));
        let bad_scheme = SAMPLE.replace("[initial_data]", "scheme = \"rk4\"\n[initial_data]");
        let cfg = RunConfig::parse(&bad_scheme).unwrap();
        assert!(matches!(cfg.stepper.build(), Err(Error::Config(_))));
    }
}

//! JSON run configuration.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::certificates::AssumptionConstants;
use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasure;
use crate::models::mh::MhParams;
use crate::models::refresh::TorusRefresh;
use crate::models::run_tumble::RunTumbleParams;
use crate::models::selection::SelectionMutation;
use crate::models::tcp::TcpParams;
use crate::models::zigzag::ZigZagParams;
use crate::state::{State, TorusPoint};

pub const SCHEMA_VERSION: u32 = 1;

/// What a run computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    Particles,
    Couple,
    CoupleParticles,
    Picard,
    Certify,
    Estimate,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Particles => "particles",
            Kind::Couple => "couple",
            Kind::CoupleParticles => "couple-particles",
            Kind::Picard => "picard",
            Kind::Certify => "certify",
            Kind::Estimate => "estimate",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    /// When present it must match the kind given on the command line.
    #[serde(default)]
    pub kind: Option<Kind>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub model: ModelConfig,
    /// Initial law; for couplings, the law of the first copy.
    #[serde(default)]
    pub initial: Option<InitialConfig>,
    /// Initial law of the second copy.
    #[serde(default)]
    pub initial_y: Option<InitialConfig>,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "id", content = "params", rename_all = "snake_case")]
pub enum ModelConfig {
    RunTumble(RunTumbleParams),
    Tcp(TcpParams),
    MhGranular(MhParams),
    Zigzag(ZigZagParams),
    SelectionMutation(SelectionParams),
}

/// Selection/mutation on the circle with refresh-to-uniform mutations.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionParams {
    pub n: usize,
    pub lambda_star: f64,
    pub refresh_rate: f64,
    pub replacement: Replacement,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Replacement {
    Constant { p: f64 },
    /// `exp(-d(x, z) / scale)` with `d` the circle distance.
    Proximity { scale: f64 },
}

impl SelectionParams {
    pub fn build(&self) -> Result<SelectionMutation<TorusRefresh<1>>> {
        if !(self.refresh_rate >= 0.0 && self.refresh_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("refresh_rate = {}", self.refresh_rate)));
        }
        let base = TorusRefresh { rate: self.refresh_rate };
        match self.replacement {
            Replacement::Constant { p } => SelectionMutation::new(base, self.n, self.lambda_star, move |_, _| p),
            Replacement::Proximity { scale } => {
                if !(scale > 0.0) {
                    return Err(Error::InvalidArgument(format!("proximity scale = {scale}")));
                }
                SelectionMutation::new(base, self.n, self.lambda_star, move |x: &TorusPoint<1>, z| {
                    let d = (x.0[0] - z.0[0]).abs();
                    (-d.min(1.0 - d) / scale).exp()
                })
            }
        }
    }
}

/// A law given by weighted atoms or by equally weighted points.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Points(Vec<Value>),
    Atoms(Vec<(Value, f64)>),
}

impl InitialConfig {
    pub fn measure<S: State + serde::de::DeserializeOwned>(&self) -> Result<EmpiricalMeasure<S>> {
        let parse = |v: &Value| -> Result<S> {
            let s: S = serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("initial state {v}: {e}")))?;
            if !s.is_valid() {
                return Err(Error::Config(format!("initial state {v} is not valid")));
            }
            Ok(s)
        };
        match self {
            InitialConfig::Points(ps) => {
                if ps.is_empty() {
                    return Err(Error::Config("initial law has no points".into()));
                }
                Ok(EmpiricalMeasure::uniform(ps.iter().map(parse).collect::<Result<_>>()?))
            }
            InitialConfig::Atoms(atoms) => EmpiricalMeasure::new(
                atoms
                    .iter()
                    .map(|(v, w)| Ok((parse(v)?, *w)))
                    .collect::<Result<Vec<_>>>()?,
            )
            .map_err(|e| Error::Config(e.to_string())),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSettings {
    #[serde(default = "default_picard_samples")]
    pub n_samples: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Reporting grid, also the Picard time step.
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// Number of particles for mean-field systems of non-linear models.
    #[serde(default = "default_particles")]
    pub n_particles: usize,
    #[serde(default = "default_max_flight")]
    pub max_flight: f64,
    /// Solve for the law flow first; otherwise the initial law is frozen.
    #[serde(default)]
    pub picard: Option<PicardSettings>,
    /// Re-engage base meeting couplings at every multiple of this time.
    #[serde(default)]
    pub restart_every: Option<f64>,
    /// Doeblin constant; estimated from `starts` when absent.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub t0: Option<f64>,
    /// Values of the Lipschitz constant to certify; defaults to the model's.
    #[serde(default)]
    pub thetas: Option<Vec<f64>>,
    /// Certify these constants instead of the model's.
    #[serde(default)]
    pub constants: Option<AssumptionConstants>,
    /// Start pairs for meeting-time estimates.
    #[serde(default)]
    pub starts: Vec<(Value, Value)>,
    /// Meeting horizons for `estimate`; defaults to `t0`.
    #[serde(default)]
    pub t0s: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_value(serde_json::json!({})).expect("defaults")
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("run.horizon = {}", self.horizon));
        }
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return bad(format!("run.grid_step = {}", self.grid_step));
        }
        if self.replicas < 2 {
            return bad(format!("run.replicas = {} (need at least 2)", self.replicas));
        }
        if self.n_particles == 0 {
            return bad("run.n_particles = 0".into());
        }
        if !(self.max_flight > 0.0) {
            return bad(format!("run.max_flight = {}", self.max_flight));
        }
        if let Some(r) = self.restart_every {
            if !(r > 0.0) {
                return bad(format!("run.restart_every = {r}"));
            }
        }
        Ok(())
    }

    pub fn starts<S: State + serde::de::DeserializeOwned>(&self) -> Result<Vec<(S, S)>> {
        self.starts
            .iter()
            .map(|(a, b)| {
                let p = |v: &Value| {
                    serde_json::from_value::<S>(v.clone()).map_err(|e| Error::Config(format!("start state {v}: {e}")))
                };
                Ok((p(a)?, p(b)?))
            })
            .collect()
    }
}

fn default_horizon() -> f64 {
    5.0
}
fn default_grid_step() -> f64 {
    0.5
}
fn default_replicas() -> usize {
    1000
}
fn default_particles() -> usize {
    100
}
fn default_max_flight() -> f64 {
    crate::engine::DEFAULT_MAX_FLIGHT
}
fn default_picard_samples() -> usize {
    2000
}
fn default_tol() -> f64 {
    0.02
}
fn default_max_iter() -> usize {
    20
}

/// Parses and checks a configuration document.
pub fn parse_config(text: &str) -> Result<Config> {
    let cfg: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if cfg.schema != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema {} (expected {SCHEMA_VERSION})",
            cfg.schema
        )));
    }
    cfg.run.validate()?;
    Ok(cfg)
}

//! Thinning simulation of the non-linear process against a given measure
//! flow, and the Picard fixed-point scheme for the non-linear equation.

use log::{debug, trace};

use crate::error::{Error, Result};
use crate::measure::{Binning, EmpiricalMeasure, Histogram, MeasureFlow};
use crate::rng::{exp1, replicate, uniform, Stream};
use crate::state::State;

/// Markov dynamics between jumps.
pub trait BaseDynamics: Sync {
    type State: State;

    /// Samples the base dynamics started at `x` after time `dt > 0`.
    fn flow(&self, x: &Self::State, dt: f64, rng: &mut Stream) -> Self::State;
}

/// A jump process whose rate and kernel depend on a probability measure.
pub trait NonlinearModel: BaseDynamics {
    /// Jump rate at `x` against `nu`.
    fn rate(&self, x: &Self::State, nu: &EmpiricalMeasure<Self::State>) -> f64;

    /// Post-jump state from one uniform draw `u`.
    fn jump(&self, x: &Self::State, nu: &EmpiricalMeasure<Self::State>, u: f64) -> Self::State;

    /// Global bound on `rate`; infinite for models that need local bounds.
    fn rate_ceiling(&self) -> f64;

    /// Bound on the rate over a flight of length `dt` from `x`.
    fn local_bound(
        &self,
        _x: &Self::State,
        _dt: f64,
        _nu: &EmpiricalMeasure<Self::State>,
    ) -> Option<f64> {
        None
    }

    /// The jump kernel as a finite list of weighted targets, when it has one.
    fn kernel_atoms(
        &self,
        _x: &Self::State,
        _nu: &EmpiricalMeasure<Self::State>,
    ) -> Option<Vec<(Self::State, f64)>> {
        None
    }

    /// Histogram layout used to compare measures of this model.
    fn binning(&self) -> Binning;
}

/// Samples the base dynamics; `dt = 0` returns `x` unchanged.
pub fn flow_sample<D: BaseDynamics>(
    model: &D,
    x: &D::State,
    dt: f64,
    rng: &mut Stream,
) -> Result<D::State> {
    if dt < 0.0 || dt.is_nan() {
        return Err(Error::InvalidArgument(format!("dt = {dt}")));
    }
    if dt == 0.0 {
        return Ok(x.clone());
    }
    Ok(model.flow(x, dt, rng))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Accepted,
    Rejected,
    Sample,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event<S> {
    pub time: f64,
    pub kind: EventKind,
    /// State right after the event.
    pub state: S,
    /// Proposal intensity in force when the event happened.
    pub ceiling: f64,
}

/// A recorded path: proposals and samples in time order.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub initial: S,
    pub events: Vec<Event<S>>,
    pub horizon: f64,
    pub terminal: S,
    pub accepted: usize,
    pub rejected: usize,
}

impl<S: State> Trajectory<S> {
    pub fn accepted_times(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Accepted)
            .map(|e| e.time)
            .collect()
    }

    pub fn samples(&self) -> impl Iterator<Item = &Event<S>> {
        self.events.iter().filter(|e| e.kind == EventKind::Sample)
    }

    /// State recorded by the sample event at time `t`.
    pub fn sample_at(&self, t: f64) -> Option<&S> {
        self.samples()
            .find(|e| (e.time - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|e| &e.state)
    }
}

/// Options for the thinning simulators.
#[derive(Clone, Debug)]
pub struct SimOptions {
    /// Times in `[0, horizon]` at which to record the state.
    pub observe: Vec<f64>,
    /// Record every proposal; when false only samples and counts are kept.
    pub record_events: bool,
    /// Longest flight under a local bound.
    pub max_flight: f64,
}

pub const DEFAULT_MAX_FLIGHT: f64 = 0.1;

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            observe: Vec::new(),
            record_events: true,
            max_flight: DEFAULT_MAX_FLIGHT,
        }
    }
}

impl SimOptions {
    pub fn observing(observe: Vec<f64>) -> Self {
        SimOptions {
            observe,
            ..Default::default()
        }
    }

    pub fn quiet(mut self) -> Self {
        self.record_events = false;
        self
    }
}

#[derive(Clone, Copy)]
enum Ceiling {
    Global(f64),
    Local(f64),
}

/// Simulates the non-linear process by global thinning at the model ceiling.
pub fn simulate_nonlinear<M: NonlinearModel>(
    model: &M,
    flow: &MeasureFlow<M::State>,
    x0: M::State,
    horizon: f64,
    opts: &SimOptions,
    rng: &mut Stream,
) -> Result<Trajectory<M::State>> {
    let lam = model.rate_ceiling();
    if !(lam.is_finite() && lam >= 0.0) {
        return Err(Error::Unsupported(format!(
            "global thinning needs a finite ceiling, got {lam}"
        )));
    }
    run_thinning(model, flow, x0, horizon, opts, Ceiling::Global(lam), rng)
}

/// Simulates the non-linear process by per-flight thinning under the
/// model's local bound; flights stop at `max_flight` and at flow grid
/// boundaries.
pub fn simulate_nonlinear_unbounded<M: NonlinearModel>(
    model: &M,
    flow: &MeasureFlow<M::State>,
    x0: M::State,
    horizon: f64,
    opts: &SimOptions,
    rng: &mut Stream,
) -> Result<Trajectory<M::State>> {
    if !(opts.max_flight > 0.0) {
        return Err(Error::InvalidArgument(format!("max_flight = {}", opts.max_flight)));
    }
    run_thinning(model, flow, x0, horizon, opts, Ceiling::Local(opts.max_flight), rng)
}

/// Dispatches on the model ceiling: global thinning when finite, local otherwise.
pub fn simulate_auto<M: NonlinearModel>(
    model: &M,
    flow: &MeasureFlow<M::State>,
    x0: M::State,
    horizon: f64,
    opts: &SimOptions,
    rng: &mut Stream,
) -> Result<Trajectory<M::State>> {
    if model.rate_ceiling().is_finite() {
        simulate_nonlinear(model, flow, x0, horizon, opts, rng)
    } else {
        simulate_nonlinear_unbounded(model, flow, x0, horizon, opts, rng)
    }
}

pub(crate) fn check_observe(observe: &[f64], horizon: f64) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for &t in observe {
        if !(t >= 0.0 && t <= horizon && t > prev) {
            return Err(Error::InvalidArgument(format!(
                "observation times must be strictly increasing in [0, {horizon}], got {t}"
            )));
        }
        prev = t;
    }
    Ok(())
}

pub(crate) fn check_rate(rate: f64, ceiling: f64, time: f64) -> Result<()> {
    if rate.is_nan() || rate < 0.0 {
        return Err(Error::Contract(format!("rate {rate} at t={time}")));
    }
    if rate > ceiling * (1.0 + 1e-12) + 1e-300 {
        return Err(Error::RateCeiling {
            time,
            rate,
            ceiling,
        });
    }
    Ok(())
}

/// Flows `x` from `*t` to `target`, emitting samples on the way.
#[allow(clippy::too_many_arguments)]
fn drift<M: NonlinearModel>(
    model: &M,
    x: &mut M::State,
    t: &mut f64,
    target: f64,
    observe: &[f64],
    next_obs: &mut usize,
    events: &mut Vec<Event<M::State>>,
    ceiling: f64,
    rng: &mut Stream,
) {
    while *next_obs < observe.len() && observe[*next_obs] <= target {
        let s = observe[*next_obs];
        if s > *t {
            *x = model.flow(x, s - *t, rng);
            *t = s;
        }
        events.push(Event {
            time: s,
            kind: EventKind::Sample,
            state: x.clone(),
            ceiling,
        });
        *next_obs += 1;
    }
    if target > *t {
        *x = model.flow(x, target - *t, rng);
        *t = target;
    }
}

fn run_thinning<M: NonlinearModel>(
    model: &M,
    flow: &MeasureFlow<M::State>,
    x0: M::State,
    horizon: f64,
    opts: &SimOptions,
    ceiling: Ceiling,
    rng: &mut Stream,
) -> Result<Trajectory<M::State>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon = {horizon}")));
    }
    check_observe(&opts.observe, horizon)?;
    let observe = &opts.observe[..];
    let mut next_obs = 0;
    let mut events = Vec::new();
    let mut x = x0.clone();
    let mut t = 0.0;
    let (mut accepted, mut rejected) = (0, 0);

    while t < horizon {
        let (end, lam) = match ceiling {
            Ceiling::Global(lam) => (horizon, lam),
            Ceiling::Local(max_flight) => {
                let end = (t + max_flight).min(flow.next_boundary(t)).min(horizon);
                let nu = flow.at(t);
                let lam = model.local_bound(&x, end - t, nu).ok_or_else(|| {
                    Error::Unsupported("model has no local rate bound".into())
                })?;
                if !(lam >= 0.0 && lam.is_finite()) {
                    return Err(Error::Contract(format!("local bound {lam} at t={t}")));
                }
                (end, lam)
            }
        };
        let proposal = if lam > 0.0 { t + exp1(rng) / lam } else { f64::INFINITY };
        if proposal >= end {
            drift(model, &mut x, &mut t, end, observe, &mut next_obs, &mut events, lam, rng);
            if end >= horizon {
                break;
            }
            continue;
        }
        drift(model, &mut x, &mut t, proposal, observe, &mut next_obs, &mut events, lam, rng);
        let nu = flow.at(t);
        let rate = model.rate(&x, nu);
        check_rate(rate, lam, t)?;
        let kind = if uniform(rng) * lam < rate {
            let u = uniform(rng);
            x = model.jump(&x, nu, u);
            accepted += 1;
            EventKind::Accepted
        } else {
            rejected += 1;
            EventKind::Rejected
        };
        trace!("t={t:.6} {kind:?} rate={rate:.6} ceiling={lam:.6} state={x:?}");
        if opts.record_events {
            events.push(Event {
                time: t,
                kind,
                state: x.clone(),
                ceiling: lam,
            });
        }
    }
    // Samples exactly at the horizon.
    let lam_end = match ceiling {
        Ceiling::Global(l) => l,
        Ceiling::Local(_) => f64::NAN,
    };
    drift(model, &mut x, &mut t, horizon, observe, &mut next_obs, &mut events, lam_end, rng);

    Ok(Trajectory {
        initial: x0,
        events,
        horizon,
        terminal: x,
        accepted,
        rejected,
    })
}

/// Settings for [`picard_solve`].
#[derive(Clone, Debug)]
pub struct PicardConfig {
    pub horizon: f64,
    pub grid_step: f64,
    pub n_samples: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Overrides the model's binning for the convergence metric.
    pub binning: Option<Binning>,
    pub seed: u64,
    pub max_flight: f64,
}

impl PicardConfig {
    pub fn new(horizon: f64, grid_step: f64, n_samples: usize) -> Self {
        PicardConfig {
            horizon,
            grid_step,
            n_samples,
            tol: 0.02,
            max_iter: 20,
            binning: None,
            seed: 0,
            max_flight: DEFAULT_MAX_FLIGHT,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PicardOutcome<S> {
    /// The last iterate.
    pub flow: MeasureFlow<S>,
    /// `gaps[k]` is the sup-over-grid histogram distance between iterates
    /// `k + 1` and `k` (iterate 0 is the constant initial flow).
    pub gaps: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Grid times `0, dt, 2dt, ...` strictly below the horizon, plus the horizon.
pub fn grid_times(horizon: f64, grid_step: f64) -> Vec<f64> {
    let n = (horizon / grid_step).ceil() as usize;
    let mut ts: Vec<f64> = (0..n).map(|k| k as f64 * grid_step).filter(|&t| t < horizon).collect();
    ts.push(horizon);
    ts
}

/// Solves the non-linear equation by iterating `mu -> law(X^mu)` from the
/// constant flow `m0`.
///
/// Sample `j` reuses the same random stream at every iteration, so a model
/// whose dynamics ignore the measure reproduces its first iterate exactly.
pub fn picard_solve<M: NonlinearModel>(
    model: &M,
    m0: &EmpiricalMeasure<M::State>,
    cfg: &PicardConfig,
) -> Result<PicardOutcome<M::State>> {
    if cfg.n_samples < 100 {
        return Err(Error::InvalidArgument(format!("n_samples = {} < 100", cfg.n_samples)));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {}", cfg.tol)));
    }
    if !(cfg.grid_step > 0.0 && cfg.horizon > 0.0) {
        return Err(Error::InvalidArgument("grid_step and horizon must be positive".into()));
    }
    let binning = cfg.binning.clone().unwrap_or_else(|| model.binning());
    binning.validate()?;
    let times = grid_times(cfg.horizon, cfg.grid_step);
    let n_snap = times.len();
    let opts = SimOptions {
        observe: times.clone(),
        record_events: false,
        max_flight: cfg.max_flight,
    };

    let mut current = MeasureFlow::new(cfg.grid_step, vec![m0.clone(); n_snap])?;
    let mut current_hist: Vec<Histogram> = vec![Histogram::from_measure(m0, &binning)?; n_snap];
    let mut gaps = Vec::new();
    let mut converged = false;

    for iter in 1..=cfg.max_iter.max(1) {
        let paths = replicate(cfg.n_samples, cfg.seed, |_, rng| {
            let x0 = m0.sample(rng).clone();
            let tr = simulate_auto(model, &current, x0, cfg.horizon, &opts, rng)?;
            Ok(tr.samples().map(|e| e.state.clone()).collect::<Vec<_>>())
        })?;
        let mut snaps = Vec::with_capacity(n_snap);
        let mut hists = Vec::with_capacity(n_snap);
        for k in 0..n_snap {
            let states: Vec<M::State> = paths.iter().map(|p| p[k].clone()).collect();
            hists.push(Histogram::from_samples(states.iter(), &binning)?);
            snaps.push(EmpiricalMeasure::uniform(states));
        }
        let gap = hists
            .iter()
            .zip(&current_hist)
            .map(|(a, b)| a.l1(b))
            .fold(0.0, f64::max);
        debug!("picard iteration {iter}: gap {gap:.3e}");
        gaps.push(gap);
        current = MeasureFlow::new(cfg.grid_step, snaps)?;
        current_hist = hists;
        if gap < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(PicardOutcome {
        flow: current,
        iterations: gaps.len(),
        gaps,
        converged,
    })
}

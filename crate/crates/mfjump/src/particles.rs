//! Interacting particle systems driven by one global proposal clock.

use log::trace;

use crate::engine::{check_observe, check_rate, NonlinearModel};
use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasure;
use crate::rng::{exp1, uniform, Stream};
use crate::state::{same_state, State, DEFAULT_EPS};

/// `N` coordinates with their own base dynamics, rates and kernels.
///
/// Rates must stay below [`rate_ceiling`](ParticleSystem::rate_ceiling).
pub trait ParticleSystem: Sync {
    type State: State;

    fn size(&self) -> usize;

    fn rate_ceiling(&self) -> f64;

    /// Base dynamics of coordinate `i`.
    fn flow(&self, i: usize, z: &Self::State, dt: f64, rng: &mut Stream) -> Self::State;

    /// Jump rate of coordinate `i` in configuration `x`.
    fn rate(&self, i: usize, x: &[Self::State]) -> f64;

    /// New value of coordinate `i` after a jump.
    fn jump(&self, i: usize, x: &[Self::State], rng: &mut Stream) -> Self::State;

    /// Jump kernel of coordinate `i` as weighted targets, when finite.
    fn kernel_atoms(&self, _i: usize, _x: &[Self::State]) -> Option<Vec<(Self::State, f64)>> {
        None
    }

    /// Checks the kernel of coordinate `i` at `time` before a jump uses it.
    fn check_jump(&self, _i: usize, _x: &[Self::State], _time: f64) -> Result<()> {
        Ok(())
    }
}

/// Uniform measure on the coordinates, with equal coordinates merged.
pub fn empirical<S: State>(x: &[S]) -> EmpiricalMeasure<S> {
    EmpiricalMeasure::uniform(x.to_vec()).dedup(DEFAULT_EPS)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SystemEvent {
    pub coord: usize,
    pub accepted: bool,
    /// Whether the jump changed the coordinate.
    pub changed: bool,
}

#[derive(Clone, Debug)]
pub struct SystemTrajectory<S> {
    pub initial: Vec<S>,
    /// Proposal times with what happened at each.
    pub events: Vec<(f64, SystemEvent)>,
    /// Configurations at the requested observation times.
    pub samples: Vec<(f64, Vec<S>)>,
    pub terminal: Vec<S>,
    pub horizon: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl<S: State> SystemTrajectory<S> {
    pub fn sample_at(&self, t: f64) -> Option<&[S]> {
        self.samples
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|(_, x)| &x[..])
    }

    /// Accepted jump times of coordinate `i`.
    pub fn accepted_times(&self, i: usize) -> Vec<f64> {
        self.events
            .iter()
            .filter(|(_, e)| e.accepted && e.coord == i)
            .map(|(t, _)| *t)
            .collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct SystemOptions {
    pub observe: Vec<f64>,
    pub record_events: bool,
}

impl SystemOptions {
    pub fn observing(observe: Vec<f64>) -> Self {
        SystemOptions {
            observe,
            record_events: true,
        }
    }
}

fn flow_all<P: ParticleSystem>(sys: &P, x: &mut [P::State], dt: f64, rng: &mut Stream) {
    if dt <= 0.0 {
        return;
    }
    for (i, z) in x.iter_mut().enumerate() {
        *z = sys.flow(i, z, dt, rng);
    }
}

pub(crate) fn check_system<P: ParticleSystem>(sys: &P, x0: &[P::State], horizon: f64) -> Result<f64> {
    if x0.len() != sys.size() {
        return Err(Error::InvalidArgument(format!(
            "initial configuration has {} coordinates, system has {}",
            x0.len(),
            sys.size()
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon = {horizon}")));
    }
    let lam = sys.rate_ceiling();
    if !(lam >= 0.0 && lam.is_finite()) {
        return Err(Error::Unsupported(format!("particle systems need a finite ceiling, got {lam}")));
    }
    Ok(lam)
}

/// Simulates the system: proposals at rate `N * ceiling`, every coordinate
/// flowed to each proposal, one uniformly chosen coordinate tested.
pub fn simulate_system<P: ParticleSystem>(
    sys: &P,
    x0: Vec<P::State>,
    horizon: f64,
    opts: &SystemOptions,
    rng: &mut Stream,
) -> Result<SystemTrajectory<P::State>> {
    let lam = check_system(sys, &x0, horizon)?;
    check_observe(&opts.observe, horizon)?;
    let n = sys.size();
    let total = lam * n as f64;
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut next_obs = 0;
    let mut samples = Vec::new();
    let mut events = Vec::new();
    let (mut accepted, mut rejected) = (0, 0);

    loop {
        let proposal = if total > 0.0 { t + exp1(rng) / total } else { f64::INFINITY };
        let stop = proposal.min(horizon);
        while next_obs < opts.observe.len() && opts.observe[next_obs] <= stop {
            let s = opts.observe[next_obs];
            flow_all(sys, &mut x, s - t, rng);
            t = s;
            samples.push((s, x.clone()));
            next_obs += 1;
        }
        if proposal >= horizon {
            flow_all(sys, &mut x, horizon - t, rng);
            break;
        }
        flow_all(sys, &mut x, proposal - t, rng);
        t = proposal;
        let i = ((uniform(rng) * n as f64) as usize).min(n - 1);
        let rate = sys.rate(i, &x);
        check_rate(rate, lam, t).map_err(|e| match e {
            Error::RateCeiling { time, rate, ceiling } => Error::SystemRateCeiling {
                coord: i,
                time,
                rate,
                ceiling,
            },
            other => other,
        })?;
        let ev = if uniform(rng) * lam < rate {
            sys.check_jump(i, &x, t)?;
            let z = sys.jump(i, &x, rng);
            let changed = !same_state(&z, &x[i]);
            x[i] = z;
            accepted += 1;
            SystemEvent {
                coord: i,
                accepted: true,
                changed,
            }
        } else {
            rejected += 1;
            SystemEvent {
                coord: i,
                accepted: false,
                changed: false,
            }
        };
        trace!("t={t:.6} coord={i} accepted={} rate={rate:.6}", ev.accepted);
        if opts.record_events {
            events.push((t, ev));
        }
    }
    Ok(SystemTrajectory {
        initial: x0,
        events,
        samples,
        terminal: x,
        horizon,
        accepted,
        rejected,
    })
}

/// The `N`-particle system of a non-linear model: each particle sees the
/// empirical measure of the whole configuration.
#[derive(Clone, Debug)]
pub struct MeanField<M> {
    pub model: M,
    pub n: usize,
}

pub fn meanfield_system<M: NonlinearModel>(model: M, n: usize) -> Result<MeanField<M>> {
    if n == 0 {
        return Err(Error::InvalidArgument("mean-field system needs N >= 1".into()));
    }
    if !model.rate_ceiling().is_finite() {
        return Err(Error::Unsupported("mean-field system needs a bounded rate".into()));
    }
    Ok(MeanField { model, n })
}

impl<M: NonlinearModel> ParticleSystem for MeanField<M> {
    type State = M::State;

    fn size(&self) -> usize {
        self.n
    }

    fn rate_ceiling(&self) -> f64 {
        self.model.rate_ceiling()
    }

    fn flow(&self, _i: usize, z: &M::State, dt: f64, rng: &mut Stream) -> M::State {
        self.model.flow(z, dt, rng)
    }

    fn rate(&self, i: usize, x: &[M::State]) -> f64 {
        self.model.rate(&x[i], &EmpiricalMeasure::uniform(x.to_vec()))
    }

    fn jump(&self, i: usize, x: &[M::State], rng: &mut Stream) -> M::State {
        self.model.jump(&x[i], &EmpiricalMeasure::uniform(x.to_vec()), uniform(rng))
    }

    fn kernel_atoms(&self, i: usize, x: &[M::State]) -> Option<Vec<(M::State, f64)>> {
        self.model.kernel_atoms(&x[i], &EmpiricalMeasure::uniform(x.to_vec()))
    }
}

//! Merge/split coupling of two non-linear processes driven by two given
//! measure flows.
//!
//! Both copies share one proposal clock at the rate ceiling. Before the first
//! proposal they follow a meeting coupling of the base dynamics; afterwards
//! they flow with shared noise. At a proposal the two thinned kernels are
//! coupled maximally, so equal copies stay equal unless the kernels differ.

use log::trace;

use crate::coupling::base::{advance_pair, BasePair, MeetingCoupling};
use crate::coupling::pair::{optimal_pair_sampler, PairSampler};
use crate::engine::{check_observe, check_rate, NonlinearModel};
use crate::error::{Error, Result};
use crate::measure::{EmpiricalMeasure, MeasureFlow};
use crate::metrics::CoupledSample;
use crate::rng::{exp1, replicate, uniform, Stream};
use crate::state::{same_state, State};

/// The kernel `(rate / ceiling) Q + (1 - rate / ceiling) delta_stay`.
pub(crate) fn thinned_kernel<S: State>(
    rate: f64,
    ceiling: f64,
    atoms: Option<Vec<(S, f64)>>,
    stay: &S,
    time: f64,
) -> Result<Vec<(S, f64)>> {
    check_rate(rate, ceiling, time)?;
    let scale = if ceiling > 0.0 { (rate / ceiling).min(1.0) } else { 0.0 };
    let mut out = Vec::new();
    if scale > 0.0 {
        let atoms = atoms.ok_or_else(|| {
            Error::Unsupported("merge/split coupling needs a kernel with finitely many atoms".into())
        })?;
        out.extend(atoms.into_iter().map(|(s, w)| (s, w * scale)));
    }
    out.push((stay.clone(), 1.0 - scale));
    Ok(out)
}

pub(crate) fn checked_sampler<S: State>(a: &[(S, f64)], b: &[(S, f64)], time: f64) -> Result<PairSampler<S>> {
    let sampler = optimal_pair_sampler(a, b)?;
    if !(0.0..=1.0 + 1e-12).contains(&sampler.p) {
        return Err(Error::MergeProbability { time, p: sampler.p });
    }
    Ok(sampler)
}

/// Moves an unmerged pair with the same noise on both sides.
pub(crate) fn synchronized<D: crate::engine::BaseDynamics>(
    model: &D,
    x: &mut D::State,
    y: &mut D::State,
    dt: f64,
    rng: &mut Stream,
) {
    if dt <= 0.0 {
        return;
    }
    let mut twin = rng.clone();
    *x = model.flow(x, dt, rng);
    *y = model.flow(y, dt, &mut twin);
}

#[derive(Clone, Debug, Default)]
pub struct MergeSplitOptions {
    pub observe: Vec<f64>,
    /// Re-engages the base meeting coupling at every multiple of this time.
    pub restart_every: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct CoupledTrajectory<S> {
    pub initial: (S, S),
    pub samples: Vec<(f64, S, S)>,
    pub terminal: (S, S),
    pub horizon: f64,
    pub proposals: usize,
    pub splits: usize,
    pub merges: usize,
}

impl<S: State> CoupledSample<S> for CoupledTrajectory<S> {
    fn pair_at(&self, t: f64) -> Option<(&S, &S)> {
        self.samples
            .iter()
            .find(|(s, _, _)| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|(_, x, y)| (x, y))
    }
}

fn next_restart(t: f64, every: Option<f64>) -> f64 {
    match every {
        Some(e) => ((t / e).floor() + 1.0) * e,
        None => f64::INFINITY,
    }
}

struct Pair<M: MeetingCoupling> {
    inner: BasePair<M::State, M::Aux>,
    on_base: bool,
}

impl<M: MeetingCoupling> Pair<M> {
    fn advance(&mut self, model: &M, dt: f64, rng: &mut Stream) {
        if dt <= 0.0 {
            return;
        }
        if self.on_base || self.inner.is_merged() {
            advance_pair(model, &mut self.inner, dt, rng);
        } else {
            let BasePair { x, y, .. } = &mut self.inner;
            synchronized(model, x, y, dt, rng);
            self.inner.elapsed += dt;
        }
    }

    fn reset(&mut self, x: M::State, y: M::State, on_base: bool) {
        let elapsed = self.inner.elapsed;
        self.inner = BasePair::new(x, y);
        self.inner.elapsed = elapsed;
        self.on_base = on_base;
    }
}

/// Runs the merge/split coupling from `(x0, y0)`; `x` sees `flow_x` and `y`
/// sees `flow_y`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_merge_split<M>(
    model: &M,
    flow_x: &MeasureFlow<M::State>,
    flow_y: &MeasureFlow<M::State>,
    x0: M::State,
    y0: M::State,
    horizon: f64,
    opts: &MergeSplitOptions,
    rng: &mut Stream,
) -> Result<CoupledTrajectory<M::State>>
where
    M: NonlinearModel + MeetingCoupling,
{
    let lam = model.rate_ceiling();
    if !(lam >= 0.0 && lam.is_finite()) {
        return Err(Error::Unsupported(format!("merge/split coupling needs a finite ceiling, got {lam}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon = {horizon}")));
    }
    if let Some(e) = opts.restart_every {
        if !(e > 0.0) {
            return Err(Error::InvalidArgument(format!("restart period {e}")));
        }
    }
    check_observe(&opts.observe, horizon)?;
    let mut pair: Pair<M> = Pair {
        inner: BasePair::new(x0.clone(), y0.clone()),
        on_base: true,
    };
    let mut t = 0.0;
    let mut next_obs = 0;
    let mut restart = next_restart(0.0, opts.restart_every);
    let mut samples = Vec::new();
    let (mut proposals, mut splits, mut merges) = (0, 0, 0);

    loop {
        let proposal = if lam > 0.0 { t + exp1(rng) / lam } else { f64::INFINITY };
        let stop = proposal.min(horizon);
        loop {
            let obs = opts.observe.get(next_obs).copied().unwrap_or(f64::INFINITY);
            let next = obs.min(restart);
            if next > stop {
                break;
            }
            pair.advance(model, next - t, rng);
            t = next;
            if obs == next {
                samples.push((t, pair.inner.x.clone(), pair.inner.y.clone()));
                next_obs += 1;
            }
            if restart == next {
                let (x, y) = (pair.inner.x.clone(), pair.inner.y.clone());
                pair.reset(x, y, true);
                restart = next_restart(t, opts.restart_every);
            }
        }
        if proposal >= horizon {
            pair.advance(model, horizon - t, rng);
            break;
        }
        pair.advance(model, proposal - t, rng);
        t = proposal;
        proposals += 1;

        let (x, y) = (&pair.inner.x, &pair.inner.y);
        let (nu_x, nu_y): (&EmpiricalMeasure<M::State>, _) = (flow_x.at(t), flow_y.at(t));
        let kx = thinned_kernel(model.rate(x, nu_x), lam, model.kernel_atoms(x, nu_x), x, t)?;
        let ky = thinned_kernel(model.rate(y, nu_y), lam, model.kernel_atoms(y, nu_y), y, t)?;
        let sampler = checked_sampler(&kx, &ky, t)?;
        let (v, u, w) = (uniform(rng), uniform(rng), uniform(rng));
        let was_equal = same_state(x, y);
        let (nx, ny) = sampler.draw(v, u, w);
        let now_equal = same_state(&nx, &ny);
        if was_equal && !now_equal {
            splits += 1;
            trace!("split at t={t:.6} (p={:.6})", sampler.p);
        } else if !was_equal && now_equal {
            merges += 1;
            trace!("merge at t={t:.6}");
        }
        pair.reset(nx, ny, false);
    }
    Ok(CoupledTrajectory {
        initial: (x0, y0),
        samples,
        terminal: (pair.inner.x, pair.inner.y),
        horizon,
        proposals,
        splits,
        merges,
    })
}

/// Runs `n` replicas with initial pairs drawn from the maximal coupling of
/// `m0` and `h0`.
#[allow(clippy::too_many_arguments)]
pub fn merge_split_ensemble<M>(
    model: &M,
    flow_x: &MeasureFlow<M::State>,
    flow_y: &MeasureFlow<M::State>,
    m0: &EmpiricalMeasure<M::State>,
    h0: &EmpiricalMeasure<M::State>,
    horizon: f64,
    opts: &MergeSplitOptions,
    n: usize,
    seed: u64,
) -> Result<Vec<CoupledTrajectory<M::State>>>
where
    M: NonlinearModel + MeetingCoupling,
{
    let start = PairSampler::of_measures(m0, h0)?;
    replicate(n, seed, |_, rng| {
        let (x0, y0) = start.sample(rng);
        simulate_merge_split(model, flow_x, flow_y, x0, y0, horizon, opts, rng)
    })
}

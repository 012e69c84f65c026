//! Coupling of two copies of a particle system with a domination counter.
//!
//! One proposal clock at rate `N * ceiling` and one coordinate choice drive
//! both copies. The thinned kernels of the chosen coordinate are coupled
//! maximally from one uniform `v`. The counter `J` starts at half the initial
//! distance and grows by one whenever the chosen coordinates agree and
//! `v >= 1 - theta J / (N ceiling)`; since every split happens on such an
//! event, `2 J >= dbar1` holds along the path.

use log::trace;

use crate::coupling::base::{advance_pair, BasePair, MeetingCoupling};
use crate::coupling::nonlinear::{checked_sampler, synchronized, thinned_kernel};
use crate::engine::{check_observe, NonlinearModel};
use crate::error::{Error, Result};
use crate::metrics::{dbar1, CoupledSample};
use crate::models::selection::SelectionMutation;
use crate::particles::{check_system, MeanField, ParticleSystem};
use crate::rng::{exp1, uniform, Stream};
use crate::state::same_state;

/// A particle system whose coordinates each have a meeting coupling.
pub trait CoupledParticleSystem: ParticleSystem {
    type Aux: Clone + Default + std::fmt::Debug + Send + Sync;

    /// Advances coordinate `i` of both copies under the meeting coupling.
    fn advance_base(&self, i: usize, pair: &mut BasePair<Self::State, Self::Aux>, dt: f64, rng: &mut Stream);

    /// Advances an unmerged coordinate with shared noise.
    fn advance_synchronized(&self, i: usize, x: &mut Self::State, y: &mut Self::State, dt: f64, rng: &mut Stream);
}

impl<M: NonlinearModel + MeetingCoupling> CoupledParticleSystem for MeanField<M> {
    type Aux = M::Aux;

    fn advance_base(&self, _i: usize, pair: &mut BasePair<M::State, M::Aux>, dt: f64, rng: &mut Stream) {
        advance_pair(&self.model, pair, dt, rng);
    }

    fn advance_synchronized(&self, _i: usize, x: &mut M::State, y: &mut M::State, dt: f64, rng: &mut Stream) {
        synchronized(&self.model, x, y, dt, rng);
    }
}

impl<B: MeetingCoupling> CoupledParticleSystem for SelectionMutation<B> {
    type Aux = B::Aux;

    fn advance_base(&self, _i: usize, pair: &mut BasePair<B::State, B::Aux>, dt: f64, rng: &mut Stream) {
        advance_pair(&self.base, pair, dt, rng);
    }

    fn advance_synchronized(&self, _i: usize, x: &mut B::State, y: &mut B::State, dt: f64, rng: &mut Stream) {
        synchronized(&self.base, x, y, dt, rng);
    }
}

#[derive(Clone, Debug, Default)]
pub struct CoupledSystemOptions {
    pub observe: Vec<f64>,
    /// Re-engages the base meeting coupling of every coordinate at each
    /// multiple of this time.
    pub restart_every: Option<f64>,
    /// Keeps `(t, J, dbar1)` after every proposal.
    pub record_path: bool,
}

#[derive(Clone, Debug)]
pub struct CoupledSystemSample<S> {
    pub time: f64,
    pub x: Vec<S>,
    pub y: Vec<S>,
    pub j: f64,
}

#[derive(Clone, Debug)]
pub struct CoupledSystemTrajectory<S> {
    pub j0: f64,
    pub samples: Vec<CoupledSystemSample<S>>,
    /// `(t, J, dbar1)` after each proposal, when recorded.
    pub path: Vec<(f64, f64, f64)>,
    pub terminal: (Vec<S>, Vec<S>),
    pub j_terminal: f64,
    /// Checked states where `2 J < dbar1`.
    pub violations: usize,
    /// Proposals on agreeing coordinates whose split probability exceeded
    /// `theta J / (N ceiling)`.
    pub lipschitz_violations: usize,
    pub checks: usize,
    pub proposals: usize,
}

impl<S> CoupledSystemTrajectory<S> {
    pub fn j_at(&self, t: f64) -> Option<f64> {
        self.samples
            .iter()
            .find(|s| (s.time - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|s| s.j)
    }
}

/// Marginal view of coordinate `i`, for the coupled-sample estimators.
pub struct CoordinateView<'a, S> {
    pub trajectory: &'a CoupledSystemTrajectory<S>,
    pub coord: usize,
}

impl<S: crate::state::State> CoupledSample<S> for CoordinateView<'_, S> {
    fn pair_at(&self, t: f64) -> Option<(&S, &S)> {
        self.trajectory
            .samples
            .iter()
            .find(|s| (s.time - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|s| (&s.x[self.coord], &s.y[self.coord]))
    }
}

struct Coord<P: CoupledParticleSystem> {
    pair: BasePair<P::State, P::Aux>,
    on_base: bool,
}

fn advance_all<P: CoupledParticleSystem>(sys: &P, coords: &mut [Coord<P>], dt: f64, rng: &mut Stream) {
    if dt <= 0.0 {
        return;
    }
    for (i, c) in coords.iter_mut().enumerate() {
        if c.on_base || c.pair.is_merged() {
            sys.advance_base(i, &mut c.pair, dt, rng);
        } else {
            let BasePair { x, y, .. } = &mut c.pair;
            sys.advance_synchronized(i, x, y, dt, rng);
            c.pair.elapsed += dt;
        }
    }
}

fn snapshot<P: CoupledParticleSystem>(coords: &[Coord<P>]) -> (Vec<P::State>, Vec<P::State>) {
    coords.iter().map(|c| (c.pair.x.clone(), c.pair.y.clone())).unzip()
}

/// Runs the coupled systems from `(x0, y0)` with Lipschitz constant `theta`.
pub fn simulate_coupled_system<P: CoupledParticleSystem>(
    sys: &P,
    theta: f64,
    x0: Vec<P::State>,
    y0: Vec<P::State>,
    horizon: f64,
    opts: &CoupledSystemOptions,
    rng: &mut Stream,
) -> Result<CoupledSystemTrajectory<P::State>> {
    let lam = check_system(sys, &x0, horizon)?;
    check_system(sys, &y0, horizon)?;
    check_observe(&opts.observe, horizon)?;
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::InvalidArgument(format!("theta = {theta}")));
    }
    if let Some(e) = opts.restart_every {
        if !(e > 0.0) {
            return Err(Error::InvalidArgument(format!("restart period {e}")));
        }
    }
    let n = sys.size();
    let total = lam * n as f64;
    let j0 = dbar1(&x0, &y0)? / 2.0;
    let mut j = j0;
    let mut coords: Vec<Coord<P>> = x0
        .into_iter()
        .zip(y0)
        .map(|(x, y)| Coord {
            pair: BasePair::new(x, y),
            on_base: true,
        })
        .collect();
    let mut t = 0.0;
    let mut next_obs = 0;
    let mut restart = opts.restart_every.unwrap_or(f64::INFINITY);
    let mut samples = Vec::new();
    let mut path = Vec::new();
    let (mut violations, mut lipschitz_violations, mut checks, mut proposals) = (0, 0, 0, 0);

    let mut check = |j: f64, x: &[P::State], y: &[P::State]| -> Result<f64> {
        let d = dbar1(x, y)?;
        checks += 1;
        if 2.0 * j < d - 1e-9 {
            violations += 1;
        }
        Ok(d)
    };

    loop {
        let proposal = if total > 0.0 { t + exp1(rng) / total } else { f64::INFINITY };
        let stop = proposal.min(horizon);
        loop {
            let obs = opts.observe.get(next_obs).copied().unwrap_or(f64::INFINITY);
            let next = obs.min(restart);
            if next > stop {
                break;
            }
            advance_all(sys, &mut coords, next - t, rng);
            t = next;
            if obs == next {
                let (x, y) = snapshot(&coords);
                check(j, &x, &y)?;
                samples.push(CoupledSystemSample { time: t, x, y, j });
                next_obs += 1;
            }
            if restart == next {
                for c in coords.iter_mut() {
                    c.on_base = true;
                    c.pair.aux = Default::default();
                }
                restart += opts.restart_every.unwrap_or(f64::INFINITY);
            }
        }
        if proposal >= horizon {
            advance_all(sys, &mut coords, horizon - t, rng);
            break;
        }
        advance_all(sys, &mut coords, proposal - t, rng);
        t = proposal;
        proposals += 1;

        let i = ((uniform(rng) * n as f64) as usize).min(n - 1);
        let (x, y) = snapshot(&coords);
        let kx = thinned_kernel(sys.rate(i, &x), lam, sys.kernel_atoms(i, &x), &x[i], t)
            .map_err(|e| coord_error(e, i))?;
        let ky = thinned_kernel(sys.rate(i, &y), lam, sys.kernel_atoms(i, &y), &y[i], t)
            .map_err(|e| coord_error(e, i))?;
        sys.check_jump(i, &x, t)?;
        sys.check_jump(i, &y, t)?;
        let sampler = checked_sampler(&kx, &ky, t)?;
        let (v, u, w) = (uniform(rng), uniform(rng), uniform(rng));
        if same_state(&x[i], &y[i]) {
            let threshold = theta * j / total;
            if 1.0 - sampler.p > threshold + 1e-12 {
                lipschitz_violations += 1;
            }
            if v >= 1.0 - threshold {
                j += 1.0;
            }
        }
        let (nx, ny) = sampler.draw(v, u, w);
        let c = &mut coords[i];
        let elapsed = c.pair.elapsed;
        c.pair = BasePair::new(nx, ny);
        c.pair.elapsed = elapsed;
        c.on_base = false;
        let (x, y) = snapshot(&coords);
        let d = check(j, &x, &y)?;
        if opts.record_path {
            path.push((t, j, d));
        }
        trace!("t={t:.6} coord={i} J={j} dbar1={d}");
    }
    let (x, y) = snapshot(&coords);
    check(j, &x, &y)?;
    Ok(CoupledSystemTrajectory {
        j0,
        samples,
        path,
        terminal: (x, y),
        j_terminal: j,
        violations,
        lipschitz_violations,
        checks,
        proposals,
    })
}

fn coord_error(e: Error, coord: usize) -> Error {
    match e {
        Error::RateCeiling { time, rate, ceiling } => Error::SystemRateCeiling {
            coord,
            time,
            rate,
            ceiling,
        },
        other => other,
    }
}

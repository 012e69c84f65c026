//! Meeting couplings of the base dynamics.

use std::fmt::Debug;

use crate::engine::BaseDynamics;
use crate::error::{Error, Result};
use crate::rng::{replicate_ok, Stream};
use crate::state::same_state;

/// Two copies of the base dynamics run on a common probability space.
#[derive(Clone, Debug)]
pub struct BasePair<S, A> {
    pub x: S,
    pub y: S,
    /// Time the pair has been advanced for.
    pub elapsed: f64,
    /// First time the two copies coincided.
    pub merged_at: Option<f64>,
    pub aux: A,
}

impl<S: crate::state::State, A: Default> BasePair<S, A> {
    pub fn new(x: S, y: S) -> Self {
        let merged_at = if same_state(&x, &y) { Some(0.0) } else { None };
        BasePair {
            x,
            y,
            elapsed: 0.0,
            merged_at,
            aux: A::default(),
        }
    }

    pub fn is_merged(&self) -> bool {
        self.merged_at.is_some()
    }
}

/// A coupling of the base dynamics under which the copies can meet, and stay
/// together once they have met.
///
/// Each copy, looked at alone, must follow the base dynamics.
pub trait MeetingCoupling: BaseDynamics {
    type Aux: Clone + Default + Debug + Send + Sync;

    /// Advances an unmerged pair by `dt`.
    ///
    /// Returns the offset within `dt` at which the copies met. A pair that
    /// meets must be flowed together for the rest of `dt` and end with
    /// `x == y`.
    fn advance_unmerged(
        &self,
        x: &mut Self::State,
        y: &mut Self::State,
        aux: &mut Self::Aux,
        dt: f64,
        rng: &mut Stream,
    ) -> Option<f64>;
}

/// Advances a pair; merged pairs move with shared noise.
pub fn advance_pair<M: MeetingCoupling>(
    model: &M,
    pair: &mut BasePair<M::State, M::Aux>,
    dt: f64,
    rng: &mut Stream,
) {
    if dt <= 0.0 {
        return;
    }
    if pair.is_merged() {
        pair.x = model.flow(&pair.x, dt, rng);
        pair.y = pair.x.clone();
    } else if let Some(off) = model.advance_unmerged(&mut pair.x, &mut pair.y, &mut pair.aux, dt, rng) {
        debug_assert!(pair.x == pair.y);
        pair.merged_at = Some(pair.elapsed + off.clamp(0.0, dt));
    }
    pair.elapsed += dt;
}

/// Observed coupled base paths.
#[derive(Clone, Debug)]
pub struct BasePath<S> {
    pub times: Vec<f64>,
    pub xs: Vec<S>,
    pub ys: Vec<S>,
    pub merged_at: Option<f64>,
}

impl<S: crate::state::State> BasePath<S> {
    /// Whether the copies were equal at every observation from their first
    /// equal observation onwards.
    pub fn stays_merged(&self) -> bool {
        let mut seen = false;
        for (x, y) in self.xs.iter().zip(&self.ys) {
            let eq = same_state(x, y);
            if seen && !eq {
                return false;
            }
            seen |= eq;
        }
        true
    }
}

/// Runs the meeting coupling from `(x, y)` up to `t0`, observing the pair at
/// `observe` (which must lie in `[0, t0]`); `t0` is always observed.
pub fn coupled_base<M: MeetingCoupling>(
    model: &M,
    x: M::State,
    y: M::State,
    t0: f64,
    observe: &[f64],
    rng: &mut Stream,
) -> Result<BasePath<M::State>> {
    if !(t0 > 0.0) {
        return Err(Error::InvalidArgument(format!("t0 = {t0}")));
    }
    crate::engine::check_observe(observe, t0)?;
    let mut times: Vec<f64> = observe.to_vec();
    if times.last().copied() != Some(t0) {
        times.push(t0);
    }
    let mut pair: BasePair<M::State, M::Aux> = BasePair::new(x, y);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &t in &times {
        let dt = t - pair.elapsed;
        advance_pair(model, &mut pair, dt, rng);
        xs.push(pair.x.clone());
        ys.push(pair.y.clone());
    }
    Ok(BasePath {
        times,
        xs,
        ys,
        merged_at: pair.merged_at,
    })
}

/// Meeting probability by `t0` from one start pair.
#[derive(Clone, Debug)]
pub struct MeetingRate {
    pub p: f64,
    pub se: f64,
    pub n: usize,
}

/// Empirical Doeblin constant over a set of start pairs.
#[derive(Clone, Debug)]
pub struct DoeblinEstimate {
    pub t0: f64,
    /// Smallest meeting probability over the start pairs.
    pub alpha_hat: f64,
    pub alpha_se: f64,
    pub argmin: usize,
    pub per_pair: Vec<MeetingRate>,
}

/// Estimates `P(merged by t0)` for each start pair and takes the minimum.
pub fn estimate_meeting<M: MeetingCoupling>(
    model: &M,
    starts: &[(M::State, M::State)],
    t0: f64,
    replicas: usize,
    seed: u64,
) -> Result<DoeblinEstimate> {
    if starts.is_empty() || replicas < 2 || !(t0 > 0.0) {
        return Err(Error::InvalidArgument(
            "need start pairs, at least two replicas and t0 > 0".into(),
        ));
    }
    let mut per_pair = Vec::with_capacity(starts.len());
    for (k, (x, y)) in starts.iter().enumerate() {
        let sub_seed = seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let hits = replicate_ok(replicas, sub_seed, |_, rng| {
            let mut pair: BasePair<M::State, M::Aux> = BasePair::new(x.clone(), y.clone());
            advance_pair(model, &mut pair, t0, rng);
            pair.is_merged()
        });
        let n = replicas as f64;
        let p = hits.iter().filter(|h| **h).count() as f64 / n;
        per_pair.push(MeetingRate {
            p,
            se: (p * (1.0 - p) / n).sqrt(),
            n: replicas,
        });
    }
    let (argmin, worst) = per_pair
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.p.total_cmp(&b.1.p))
        .expect("nonempty");
    Ok(DoeblinEstimate {
        t0,
        alpha_hat: worst.p,
        alpha_se: worst.se,
        argmin,
        per_pair,
    })
}

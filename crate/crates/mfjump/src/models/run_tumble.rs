//! Mean-field run-and-tumble on the line.
//!
//! A particle moves at unit speed and reverses its velocity at rate
//! `r(v (x - theta * barycentre))`. The reversals at the floor rate `c` form
//! the base dynamics (an integrated telegraph process); the excess
//! `r(..) - c` is the measure-dependent jump rate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::certificates::AssumptionConstants;
use crate::coupling::MeetingCoupling;
use crate::engine::{BaseDynamics, NonlinearModel};
use crate::error::{Error, Result};
use crate::measure::{Axis, Binning, EmpiricalMeasure};
use crate::metrics::LyapunovFn;
use crate::rng::{exp1, uniform, Stream};
use crate::state::{PosVel, Velocity};

/// Parameters; the tumble rate is `a + (b - a) / (1 + exp(-s / width))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunTumbleParams {
    /// Rate limit when moving towards the centre.
    pub a: f64,
    /// Rate limit when moving away from the centre.
    pub b: f64,
    #[serde(default = "one")]
    pub width: f64,
    /// Interaction strength.
    pub theta: f64,
    /// Floor rate given to the base dynamics; defaults to `a`.
    #[serde(default)]
    pub floor: Option<f64>,
    /// Half-width of the histogram box.
    #[serde(default = "default_box")]
    pub box_half_width: f64,
}

fn one() -> f64 {
    1.0
}
fn default_box() -> f64 {
    10.0
}

impl RunTumbleParams {
    pub fn new(a: f64, b: f64, theta: f64) -> Self {
        RunTumbleParams {
            a,
            b,
            width: 1.0,
            theta,
            floor: None,
            box_half_width: default_box(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunTumble {
    p: RunTumbleParams,
    c: f64,
}

/// Constants of the drift and growth conditions, before the Doeblin pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunTumbleConstants {
    pub lambda_star: f64,
    /// Lipschitz constant of the jump mechanism in the measure, in V-norm.
    pub theta: f64,
    pub rho: f64,
    pub rho_star: f64,
    pub eta: f64,
    pub m: f64,
    pub gamma_star: f64,
    /// Radius beyond which the tumble rate is within 1/8 of its limits.
    pub r0: f64,
}

impl RunTumbleConstants {
    /// Completes the constants with a Doeblin pair.
    pub fn with_doeblin(&self, alpha: f64, t0: f64) -> Result<AssumptionConstants> {
        AssumptionConstants {
            lambda_star: self.lambda_star,
            theta: self.theta,
            rho: self.rho,
            rho_star: self.rho_star,
            eta: self.eta,
            m: self.m,
            gamma_star: self.gamma_star,
            alpha,
            t0,
        }
        .validated()
    }
}

impl RunTumble {
    pub fn new(p: RunTumbleParams) -> Result<Self> {
        let c = p.floor.unwrap_or(p.a);
        let bad = |m: &str| Err(Error::InvalidArgument(format!("run-and-tumble: {m}")));
        if !(p.a > 0.0 && p.a < p.b && p.b.is_finite()) {
            return bad("need 0 < a < b");
        }
        if !(p.width > 0.0) {
            return bad("width must be positive");
        }
        if !(0.0..1.0).contains(&p.theta) {
            return bad("theta must lie in [0, 1)");
        }
        if !(c > 0.0) {
            return bad("floor rate must be positive");
        }
        if c > p.a {
            return bad("floor rate exceeds inf r = a");
        }
        if !(p.box_half_width > 0.0) {
            return bad("box_half_width must be positive");
        }
        Ok(RunTumble { p, c })
    }

    pub fn params(&self) -> &RunTumbleParams {
        &self.p
    }

    /// Floor rate of the base reversals.
    pub fn floor(&self) -> f64 {
        self.c
    }

    /// The tumble rate `r`.
    #[inline]
    pub fn tumble_rate(&self, s: f64) -> f64 {
        let (a, b) = (self.p.a, self.p.b);
        a + (b - a) / (1.0 + (-s / self.p.width).exp())
    }

    pub fn rate_lipschitz(&self) -> f64 {
        (self.p.b - self.p.a) / (4.0 * self.p.width)
    }

    pub fn barycentre(nu: &EmpiricalMeasure<PosVel>) -> f64 {
        nu.expect(|s| s.x)
    }

    /// Lyapunov function `e^{k h(x)} (A + phi(v x))` with `k = (b-a)/4`.
    pub fn lyapunov_value(&self, s: &PosVel) -> f64 {
        let (a, b) = (self.p.a, self.p.b);
        let k = (b - a) / 4.0;
        let shift = (5.0 * a + 3.0 * b) / (2.0 * (b - a));
        (k * smooth_abs(s.x)).exp() * (shift + step(s.v.sign() * s.x))
    }

    pub fn lyapunov(&self) -> LyapunovFn<PosVel> {
        let m = self.clone();
        LyapunovFn::new("run_tumble", move |s| m.lyapunov_value(s))
    }

    pub fn constants(&self) -> RunTumbleConstants {
        let (a, b) = (self.p.a, self.p.b);
        let rho = (b - a).powi(2) / (10.0 * (b + a));
        // r(z) > (7b+a)/8 iff the logistic factor exceeds 7/8.
        let r0 = (self.p.width * 7f64.ln()).max(1.0);
        let m = (a + 2.0 * b + PI / 4.0) * ((b - a) / 4.0 * (1.0 + r0)).exp() / rho;
        RunTumbleConstants {
            lambda_star: self.rate_ceiling(),
            theta: self.p.theta * self.rate_lipschitz() * 8.0 / (3.0 * (b - a)),
            rho,
            rho_star: b + PI / 2.0,
            eta: 2.0 * self.p.theta * m / 3.0,
            m,
            gamma_star: 2.0,
            r0,
        }
    }
}

/// `|s|` outside [-1,1], `(s^2+1)/2` inside.
pub fn smooth_abs(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        s.abs()
    } else {
        (s * s + 1.0) / 2.0
    }
}

/// 0 below -1, 1 above 1, a sine ramp in between.
pub fn step(s: f64) -> f64 {
    if s >= 1.0 {
        1.0
    } else if s <= -1.0 {
        0.0
    } else {
        (1.0 + (PI * s / 2.0).sin()) / 2.0
    }
}

#[inline]
fn drift(s: &mut PosVel, dt: f64) {
    s.x += s.v.sign() * dt;
}

/// Integrated telegraph flow with reversal rate `c`.
pub(crate) fn telegraph_flow(s: &PosVel, c: f64, dt: f64, rng: &mut Stream) -> PosVel {
    let mut out = *s;
    let mut left = dt;
    if c <= 0.0 {
        drift(&mut out, left);
        return out;
    }
    loop {
        let tau = exp1(rng) / c;
        if tau >= left {
            drift(&mut out, left);
            return out;
        }
        drift(&mut out, tau);
        out.v = out.v.flipped();
        left -= tau;
    }
}

impl BaseDynamics for RunTumble {
    type State = PosVel;

    fn flow(&self, x: &PosVel, dt: f64, rng: &mut Stream) -> PosVel {
        telegraph_flow(x, self.c, dt, rng)
    }
}

impl NonlinearModel for RunTumble {
    fn rate(&self, x: &PosVel, nu: &EmpiricalMeasure<PosVel>) -> f64 {
        let centre = self.p.theta * Self::barycentre(nu);
        (self.tumble_rate(x.v.sign() * (x.x - centre)) - self.c).max(0.0)
    }

    fn jump(&self, x: &PosVel, _nu: &EmpiricalMeasure<PosVel>, _u: f64) -> PosVel {
        x.flipped()
    }

    fn rate_ceiling(&self) -> f64 {
        self.p.b - self.c
    }

    fn kernel_atoms(&self, x: &PosVel, _nu: &EmpiricalMeasure<PosVel>) -> Option<Vec<(PosVel, f64)>> {
        Some(vec![(x.flipped(), 1.0)])
    }

    fn binning(&self) -> Binning {
        let l = self.p.box_half_width;
        Binning::new(vec![Axis::new(-l, l, crate::measure::DEFAULT_BINS)])
    }
}

/// Coupling of two telegraph processes.
///
/// Work proceeds in epochs. With opposite velocities both reversal clocks
/// run independently and the epoch ends at the first reversal. With equal
/// velocities and gap `g`, the leading copy reverses at an exponential time
/// and the trailing one reverses exactly `g/2` later with probability
/// `e^{-c g/2}` (when the copies meet head-on), otherwise at a time drawn
/// from the remaining part of its law on `[0, g/2)`. Both marginal
/// reversal times are exponential, so each copy is a telegraph process.
#[derive(Clone, Debug, Default)]
pub struct TelegraphPlan {
    clock: f64,
    epoch: Option<Epoch>,
}

#[derive(Clone, Debug)]
struct Epoch {
    race: bool,
    first: [f64; 2],
    post: [f64; 2],
    planned_merge: bool,
    disturbed: bool,
}

fn start_epoch(x: &PosVel, y: &PosVel, now: f64, c: f64, rng: &mut Stream) -> Epoch {
    let e = |rng: &mut Stream| exp1(rng) / c;
    if x.v != y.v {
        return Epoch {
            race: true,
            first: [now + e(rng), now + e(rng)],
            post: [f64::INFINITY; 2],
            planned_merge: false,
            disturbed: false,
        };
    }
    let gap = (y.x - x.x).abs();
    // The leading copy is the one ahead in the direction of motion.
    let y_leads = (y.x - x.x) * x.v.sign() > 0.0;
    let lead = now + e(rng);
    let half = gap / 2.0;
    let (trail, planned) = if uniform(rng) < (-c * half).exp() {
        (lead + half, true)
    } else {
        let u = uniform(rng);
        (now - (1.0 - u * (1.0 - (-c * half).exp())).ln() / c, false)
    };
    let first = if y_leads { [trail, lead] } else { [lead, trail] };
    Epoch {
        race: false,
        first,
        post: [f64::INFINITY; 2],
        planned_merge: planned,
        disturbed: false,
    }
}

impl MeetingCoupling for RunTumble {
    type Aux = TelegraphPlan;

    fn advance_unmerged(
        &self,
        x: &mut PosVel,
        y: &mut PosVel,
        plan: &mut TelegraphPlan,
        dt: f64,
        rng: &mut Stream,
    ) -> Option<f64> {
        let c = self.c;
        let start = plan.clock;
        let end = start + dt;
        loop {
            if plan.epoch.is_none() {
                plan.epoch = Some(start_epoch(x, y, plan.clock, c, rng));
            }
            let ep = plan.epoch.as_mut().expect("epoch");
            let mut next = (f64::INFINITY, 0usize, true);
            for who in 0..2 {
                if ep.first[who] < next.0 {
                    next = (ep.first[who], who, true);
                }
                if ep.post[who] < next.0 {
                    next = (ep.post[who], who, false);
                }
            }
            let (time, who, is_first) = next;
            if time > end {
                drift(x, end - plan.clock);
                drift(y, end - plan.clock);
                plan.clock = end;
                return None;
            }
            drift(x, time - plan.clock);
            drift(y, time - plan.clock);
            plan.clock = time;
            let target = if who == 0 { &mut *x } else { &mut *y };
            target.v = target.v.flipped();
            let fresh = time + exp1(rng) / c;
            if is_first {
                ep.first[who] = f64::INFINITY;
                if ep.race {
                    plan.epoch = None;
                    continue;
                }
                ep.post[who] = fresh;
            } else {
                ep.post[who] = fresh;
                ep.disturbed = true;
            }
            if ep.first.iter().all(|t| t.is_infinite()) {
                let merge = ep.planned_merge && !ep.disturbed;
                plan.epoch = None;
                if merge {
                    debug_assert!((x.x - y.x).abs() < 1e-6 && x.v == y.v);
                    *y = *x;
                    let rest = end - time;
                    if rest > 0.0 {
                        *x = telegraph_flow(x, c, rest, rng);
                        *y = *x;
                    }
                    plan.clock = end;
                    return Some(time - start);
                }
            }
        }
    }
}

/// State with the given position and velocity sign.
pub fn pv(x: f64, v: i8) -> PosVel {
    PosVel::new(x, Velocity::try_from(v).expect("velocity must be +1 or -1"))
}

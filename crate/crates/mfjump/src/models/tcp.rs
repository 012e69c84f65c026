//! Mean-field TCP window process.
//!
//! The window grows at unit speed and is halved at rate
//! `1 + g1(x) + E[g2(x + Y)]`, with `Y` drawn from the current law. The
//! rate is unbounded, so simulation uses per-flight bounds.

use serde::{Deserialize, Serialize};

use crate::engine::{BaseDynamics, NonlinearModel};
use crate::error::{Error, Result};
use crate::measure::{Axis, Binning, EmpiricalMeasure};
use crate::metrics::LyapunovFn;
use crate::rng::Stream;

/// Nonnegative nondecreasing functions on the half line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Growth {
    Zero,
    /// `slope * x`
    Linear { slope: f64 },
    /// `scale * exp(rate * x)`
    Exponential { scale: f64, rate: f64 },
    /// `scale * x^power`
    Power { scale: f64, power: f64 },
}

impl Growth {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match *self {
            Growth::Zero => 0.0,
            Growth::Linear { slope } => slope * x,
            Growth::Exponential { scale, rate } => scale * (rate * x).exp(),
            Growth::Power { scale, power } => scale * x.powf(power),
        }
    }

    fn params_ok(&self) -> bool {
        match *self {
            Growth::Zero => true,
            Growth::Linear { slope } => slope >= 0.0,
            Growth::Exponential { scale, rate } => scale >= 0.0 && rate >= 0.0,
            Growth::Power { scale, power } => scale >= 0.0 && power >= 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TcpParams {
    pub g1: Growth,
    pub g2: Growth,
    /// Envelope `g2(x) <= k exp(rho x)`.
    pub envelope_k: f64,
    pub envelope_rho: f64,
    #[serde(default = "default_hi")]
    pub box_hi: f64,
}

fn default_hi() -> f64 {
    20.0
}

impl TcpParams {
    pub fn new(g1: Growth, g2: Growth, envelope_k: f64, envelope_rho: f64) -> Self {
        TcpParams {
            g1,
            g2,
            envelope_k,
            envelope_rho,
            box_hi: default_hi(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Tcp {
    p: TcpParams,
}

const CHECK_GRID: usize = 2001;
const CHECK_MAX: f64 = 100.0;

impl Tcp {
    /// Validates parameters and spot-checks monotonicity and the envelope on
    /// a grid of `[0, 100]`.
    pub fn new(p: TcpParams) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("tcp: {m}")));
        if !(p.g1.params_ok() && p.g2.params_ok()) {
            return bad("growth functions must be nonnegative and nondecreasing".into());
        }
        if !(p.envelope_k > 0.0 && p.envelope_rho > 0.0) {
            return bad("envelope constants must be positive".into());
        }
        if !(p.box_hi > 0.0) {
            return bad("box_hi must be positive".into());
        }
        let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for k in 0..CHECK_GRID {
            let x = CHECK_MAX * k as f64 / (CHECK_GRID - 1) as f64;
            let (a, b) = (p.g1.eval(x), p.g2.eval(x));
            if a < prev.0 || b < prev.1 || a < 0.0 || b < 0.0 {
                return bad(format!("g1 or g2 decreases or is negative near x={x}"));
            }
            if b > p.envelope_k * (p.envelope_rho * x).exp() * (1.0 + 1e-12) {
                return bad(format!("g2 exceeds its envelope at x={x}"));
            }
            prev = (a, b);
        }
        Ok(Tcp { p })
    }

    pub fn params(&self) -> &TcpParams {
        &self.p
    }

    fn pressure(&self, x: f64, nu: &EmpiricalMeasure<f64>) -> f64 {
        match self.p.g2 {
            Growth::Zero => 0.0,
            g => nu.expect(|y| g.eval(x + y)),
        }
    }

    /// `V(x) = exp(rho x)` with the envelope exponent.
    pub fn lyapunov(&self) -> LyapunovFn<f64> {
        let rho = self.p.envelope_rho;
        LyapunovFn::new("tcp", move |x: &f64| (rho * x).exp())
    }

    /// `inf{x >= 0 : g1(x) >= 2 rho}`, or infinity.
    pub fn drift_radius(&self) -> f64 {
        let target = 2.0 * self.p.envelope_rho;
        if self.p.g1.eval(0.0) >= target {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.p.g1.eval(hi) < target {
            hi *= 2.0;
            if hi > 1e12 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.p.g1.eval(mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Drift constant `(1 + 2 rho)(1 + e^{rho R})`.
    pub fn drift_constant(&self) -> f64 {
        let rho = self.p.envelope_rho;
        (1.0 + 2.0 * rho) * (1.0 + (rho * self.drift_radius()).exp())
    }
}

impl BaseDynamics for Tcp {
    type State = f64;

    fn flow(&self, x: &f64, dt: f64, _rng: &mut Stream) -> f64 {
        x + dt
    }
}

impl NonlinearModel for Tcp {
    fn rate(&self, x: &f64, nu: &EmpiricalMeasure<f64>) -> f64 {
        1.0 + self.p.g1.eval(*x) + self.pressure(*x, nu)
    }

    fn jump(&self, x: &f64, _nu: &EmpiricalMeasure<f64>, _u: f64) -> f64 {
        x / 2.0
    }

    fn rate_ceiling(&self) -> f64 {
        f64::INFINITY
    }

    fn local_bound(&self, x: &f64, dt: f64, nu: &EmpiricalMeasure<f64>) -> Option<f64> {
        let end = x + dt;
        Some(1.0 + self.p.g1.eval(end) + self.pressure(end, nu))
    }

    fn kernel_atoms(&self, x: &f64, _nu: &EmpiricalMeasure<f64>) -> Option<Vec<(f64, f64)>> {
        Some(vec![(x / 2.0, 1.0)])
    }

    fn binning(&self) -> Binning {
        Binning::new(vec![Axis::new(0.0, self.p.box_hi, crate::measure::DEFAULT_BINS)])
    }
}

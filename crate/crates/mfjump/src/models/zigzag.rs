//! Zig-zag sampler for a weakly interacting product target.
//!
//! Each coordinate runs a one-dimensional zig-zag for its own potential with
//! switching rate `(w U_i'(z) - theta)_+`. The interaction, whose partial
//! derivatives are bounded by `theta`, enters through a residual flip rate
//! that stays in `[0, 2 theta]`.

use serde::{Deserialize, Serialize};

use crate::engine::BaseDynamics;
use crate::error::{Error, Result};
use crate::metrics::LyapunovFn;
use crate::particles::ParticleSystem;
use crate::rng::{exp1, Stream};
use crate::state::PosVel;

/// One-dimensional confining potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Confinement {
    /// `stiffness * z^2 / 2`.
    Quadratic { stiffness: f64 },
}

impl Confinement {
    pub fn derivative(&self, z: f64) -> f64 {
        match *self {
            Confinement::Quadratic { stiffness } => stiffness * z,
        }
    }

    /// Drift data `(R, rho, C)`: `z U'(z) >= rho |z|` beyond `R` and
    /// `|U'| <= C` inside.
    pub fn drift_data(&self) -> (f64, f64, f64) {
        match *self {
            Confinement::Quadratic { stiffness } => (1.0, stiffness, stiffness),
        }
    }

    /// Time until the first event of rate `(w U'(z + w s) - theta)_+` given a
    /// unit exponential budget `e`.
    fn first_switch(&self, z: f64, w: f64, theta: f64, e: f64) -> f64 {
        match *self {
            Confinement::Quadratic { stiffness: k } => {
                if k <= 0.0 {
                    return if theta < 0.0 { e / -theta } else { f64::INFINITY };
                }
                let a = k * w * z - theta;
                if a >= 0.0 {
                    (-a + (a * a + 2.0 * k * e).sqrt()) / k
                } else {
                    -a / k + (2.0 * e / k).sqrt()
                }
            }
        }
    }
}

/// Interaction potential with bounded partial derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Interaction {
    None,
    /// `(strength / N) * sum_{i<j} cos(x_i - x_j)`.
    MeanCosine { strength: f64 },
}

impl Interaction {
    pub fn partial(&self, i: usize, x: &[PosVel]) -> f64 {
        match *self {
            Interaction::None => 0.0,
            Interaction::MeanCosine { strength } => {
                let n = x.len() as f64;
                -strength / n
                    * x.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, xj)| (x[i].x - xj.x).sin())
                        .sum::<f64>()
            }
        }
    }

    pub fn gradient_bound(&self) -> f64 {
        match *self {
            Interaction::None => 0.0,
            Interaction::MeanCosine { strength } => strength.abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZigZagParams {
    pub n: usize,
    pub confinement: Confinement,
    pub interaction: Interaction,
    /// Declared bound on the interaction gradient; at least the true bound.
    pub theta: f64,
}

/// One-dimensional zig-zag with switching rate `(w U'(z) - theta)_+`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZigZag1d {
    pub confinement: Confinement,
    pub theta: f64,
}

impl BaseDynamics for ZigZag1d {
    type State = PosVel;

    fn flow(&self, x: &PosVel, dt: f64, rng: &mut Stream) -> PosVel {
        let mut s = *x;
        let mut left = dt;
        loop {
            let w = s.v.sign();
            let tau = self.confinement.first_switch(s.x, w, self.theta, exp1(rng));
            if tau >= left {
                s.x += w * left;
                return s;
            }
            s.x += w * tau;
            s = s.flipped();
            left -= tau;
        }
    }
}

#[derive(Clone, Debug)]
pub struct ZigZagSystem {
    pub params: ZigZagParams,
    pub base: ZigZag1d,
}

impl ZigZagSystem {
    pub fn new(params: ZigZagParams) -> Result<Self> {
        if params.n == 0 {
            return Err(Error::InvalidArgument("zig-zag needs N >= 1".into()));
        }
        if !(params.theta >= 0.0 && params.theta.is_finite()) {
            return Err(Error::InvalidArgument(format!("theta = {}", params.theta)));
        }
        let Confinement::Quadratic { stiffness } = params.confinement;
        if !(stiffness > 0.0 && stiffness.is_finite()) {
            return Err(Error::InvalidArgument(format!("stiffness = {stiffness}")));
        }
        let g = params.interaction.gradient_bound();
        if g > params.theta {
            return Err(Error::InvalidArgument(format!(
                "interaction gradient bound {g} exceeds declared theta {}",
                params.theta
            )));
        }
        let base = ZigZag1d {
            confinement: params.confinement,
            theta: params.theta,
        };
        Ok(ZigZagSystem { params, base })
    }

    /// Per-coordinate Lyapunov function `exp(rho h(z) / 2) (1 + phi(z w))`
    /// with `h` a smoothed `|z|` and `phi` a smooth step.
    pub fn lyapunov(&self) -> LyapunovFn<PosVel> {
        let (_, rho, _) = self.params.confinement.drift_data();
        LyapunovFn::new("zigzag", move |s: &PosVel| {
            let h = (1.0 + s.x * s.x).sqrt();
            let phi = 0.5 * (1.0 + (s.x * s.v.sign()).tanh());
            (0.5 * rho * h).exp() * (1.0 + phi)
        })
    }
}

impl ParticleSystem for ZigZagSystem {
    type State = PosVel;

    fn size(&self) -> usize {
        self.params.n
    }

    fn rate_ceiling(&self) -> f64 {
        2.0 * self.params.theta
    }

    fn flow(&self, _i: usize, z: &PosVel, dt: f64, rng: &mut Stream) -> PosVel {
        self.base.flow(z, dt, rng)
    }

    fn rate(&self, i: usize, x: &[PosVel]) -> f64 {
        let w = x[i].v.sign();
        let own = self.params.confinement.derivative(x[i].x);
        let full = own + self.params.interaction.partial(i, x);
        (w * full).max(0.0) - (w * own - self.params.theta).max(0.0)
    }

    fn jump(&self, i: usize, x: &[PosVel], _rng: &mut Stream) -> PosVel {
        x[i].flipped()
    }

    fn kernel_atoms(&self, i: usize, x: &[PosVel]) -> Option<Vec<(PosVel, f64)>> {
        Some(vec![(x[i].flipped(), 1.0)])
    }
}

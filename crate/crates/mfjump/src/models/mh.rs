//! Continuous-time Metropolis-Hastings for granular-media equilibria on the
//! torus, with uniform proposals.
//!
//! The chain is split into a refresh part at rate `lbar * p_min`, which every
//! particle undergoes independently, and a residual part at rate
//! `lbar * (1 - p_min)` that carries the interaction.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::BaseDynamics;
use crate::error::{Error, Result};
use crate::models::refresh::TorusRefresh;
use crate::particles::ParticleSystem;
use crate::rng::{uniform, Stream};
use crate::state::TorusPoint;

/// Confining potential `amplitude * sum_k cos(2 pi x_k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosinePotential {
    pub amplitude: f64,
}

/// Pair potential `amplitude * sum_k cos(2 pi (x_k - y_k))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosineInteraction {
    pub amplitude: f64,
}

impl CosinePotential {
    pub fn eval<const D: usize>(&self, x: &TorusPoint<D>) -> f64 {
        self.amplitude * x.0.iter().map(|v| (TAU * v).cos()).sum::<f64>()
    }
    pub fn oscillation(&self, d: usize) -> f64 {
        2.0 * self.amplitude.abs() * d as f64
    }
}

impl CosineInteraction {
    pub fn eval<const D: usize>(&self, x: &TorusPoint<D>, y: &TorusPoint<D>) -> f64 {
        self.amplitude * x.0.iter().zip(&y.0).map(|(a, b)| (TAU * (a - b)).cos()).sum::<f64>()
    }
    pub fn oscillation(&self, d: usize) -> f64 {
        2.0 * self.amplitude.abs() * d as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MhParams {
    pub beta: f64,
    pub lambda_bar: f64,
    pub n: usize,
    pub confinement: CosinePotential,
    pub interaction: CosineInteraction,
}

/// Shared pieces of both representations of the chain.
#[derive(Clone, Debug)]
pub struct MhCore<const D: usize> {
    pub params: MhParams,
    pub p_min: f64,
}

impl<const D: usize> MhCore<D> {
    fn new(params: MhParams) -> Result<Self> {
        if !(params.beta >= 0.0 && params.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta = {}", params.beta)));
        }
        if !(params.lambda_bar > 0.0 && params.lambda_bar.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda_bar = {}", params.lambda_bar)));
        }
        if params.n == 0 {
            return Err(Error::InvalidArgument("need at least one particle".into()));
        }
        let osc = params.confinement.oscillation(D) + params.interaction.oscillation(D);
        let p_min = (-params.beta * osc).exp();
        Ok(MhCore { params, p_min })
    }

    /// Energy change when particle `i` moves to `y`.
    pub fn energy_change(&self, i: usize, x: &[TorusPoint<D>], y: &TorusPoint<D>) -> f64 {
        let p = &self.params;
        let n = x.len() as f64;
        let mut pair = 0.0;
        for (j, xj) in x.iter().enumerate() {
            if j != i {
                pair += p.interaction.eval(y, xj) + p.interaction.eval(xj, y)
                    - p.interaction.eval(&x[i], xj)
                    - p.interaction.eval(xj, &x[i]);
            }
        }
        p.confinement.eval(y) - p.confinement.eval(&x[i]) + pair / (2.0 * n)
    }

    /// Metropolis acceptance probability of moving particle `i` to `y`.
    pub fn acceptance(&self, i: usize, x: &[TorusPoint<D>], y: &TorusPoint<D>) -> f64 {
        (-self.params.beta * self.energy_change(i, x, y)).exp().min(1.0)
    }

    /// Energy of the whole configuration.
    pub fn energy(&self, x: &[TorusPoint<D>]) -> f64 {
        let p = &self.params;
        let n = x.len() as f64;
        let mut e = 0.0;
        for (i, xi) in x.iter().enumerate() {
            e += p.confinement.eval(xi);
            for (j, xj) in x.iter().enumerate() {
                if j != i {
                    e += p.interaction.eval(xi, xj) / (2.0 * n);
                }
            }
        }
        e
    }
}

fn uniform_point<const D: usize>(rng: &mut Stream) -> TorusPoint<D> {
    let mut c = [0.0; D];
    for v in c.iter_mut() {
        *v = rng.random::<f64>();
    }
    TorusPoint(c)
}

/// The decomposed chain: refresh base plus residual Metropolis kernel.
#[derive(Clone, Debug)]
pub struct MhGranular<const D: usize> {
    pub core: MhCore<D>,
    pub base: TorusRefresh<D>,
}

impl<const D: usize> MhGranular<D> {
    pub fn new(params: MhParams) -> Result<Self> {
        let core = MhCore::new(params)?;
        let base = TorusRefresh {
            rate: core.params.lambda_bar * core.p_min,
        };
        Ok(MhGranular { core, base })
    }

    pub fn p_min(&self) -> f64 {
        self.core.p_min
    }

    /// Lipschitz constant `4 lbar (1 - p_min) osc(W) beta e^{beta osc}`.
    pub fn lipschitz_theta(&self) -> f64 {
        let p = &self.core.params;
        let osc = p.confinement.oscillation(D) + p.interaction.oscillation(D);
        4.0 * p.lambda_bar * (1.0 - self.core.p_min) * p.interaction.oscillation(D) * p.beta * (p.beta * osc).exp()
    }

    /// Contraction margin `e^{-b} - 4 osc(W)/(osc(U)+osc(W)) b (e^b - 1)`
    /// with `b = beta (osc(U) + osc(W))`.
    pub fn contraction_margin(&self) -> f64 {
        let p = &self.core.params;
        let (ou, ow) = (p.confinement.oscillation(D), p.interaction.oscillation(D));
        let b = p.beta * (ou + ow);
        if ou + ow == 0.0 {
            return 1.0;
        }
        (-b).exp() - 4.0 * ow / (ou + ow) * b * b.exp_m1()
    }

    /// The same chain as one Metropolis system without the split.
    pub fn raw_chain(&self) -> MhRaw<D> {
        MhRaw { core: self.core.clone() }
    }
}

impl<const D: usize> ParticleSystem for MhGranular<D> {
    type State = TorusPoint<D>;

    fn size(&self) -> usize {
        self.core.params.n
    }

    fn rate_ceiling(&self) -> f64 {
        self.core.params.lambda_bar * (1.0 - self.core.p_min)
    }

    fn flow(&self, _i: usize, z: &TorusPoint<D>, dt: f64, rng: &mut Stream) -> TorusPoint<D> {
        self.base.flow(z, dt, rng)
    }

    fn rate(&self, _i: usize, _x: &[TorusPoint<D>]) -> f64 {
        self.rate_ceiling()
    }

    fn jump(&self, i: usize, x: &[TorusPoint<D>], rng: &mut Stream) -> TorusPoint<D> {
        let y = uniform_point::<D>(rng);
        let p = self.core.acceptance(i, x, &y);
        if (1.0 - self.core.p_min) * uniform(rng) < p - self.core.p_min {
            y
        } else {
            x[i]
        }
    }
}

/// Metropolis chain at rate `lbar` per particle with uniform proposals.
#[derive(Clone, Debug)]
pub struct MhRaw<const D: usize> {
    pub core: MhCore<D>,
}

impl<const D: usize> ParticleSystem for MhRaw<D> {
    type State = TorusPoint<D>;

    fn size(&self) -> usize {
        self.core.params.n
    }

    fn rate_ceiling(&self) -> f64 {
        self.core.params.lambda_bar
    }

    fn flow(&self, _i: usize, z: &TorusPoint<D>, _dt: f64, _rng: &mut Stream) -> TorusPoint<D> {
        *z
    }

    fn rate(&self, _i: usize, _x: &[TorusPoint<D>]) -> f64 {
        self.core.params.lambda_bar
    }

    fn jump(&self, i: usize, x: &[TorusPoint<D>], rng: &mut Stream) -> TorusPoint<D> {
        let y = uniform_point::<D>(rng);
        if uniform(rng) < self.core.acceptance(i, x, &y) {
            y
        } else {
            x[i]
        }
    }
}

/// Solution of the self-consistency equation on a uniform grid of the circle.
#[derive(Clone, Debug)]
pub struct SelfConsistentPotential {
    pub grid: Vec<f64>,
    pub potential: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
}

impl SelfConsistentPotential {
    /// Grid-normalized density proportional to `exp(-beta V)`.
    pub fn density(&self, beta: f64) -> Vec<f64> {
        let w: Vec<f64> = self.potential.iter().map(|v| (-beta * v).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|v| v / z).collect()
    }
}

/// Iterates `V = U + (integral of W(., z) e^{-beta V(z)}) / (integral of
/// e^{-beta V})` on `n` grid points of `[0,1)`, starting from `V = U`.
pub fn self_consistent_potential<U, W>(
    u: U,
    w: W,
    beta: f64,
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<SelfConsistentPotential>
where
    U: Fn(f64) -> f64,
    W: Fn(f64, f64) -> f64,
{
    if n == 0 || !(tol > 0.0) {
        return Err(Error::InvalidArgument("need grid points and tol > 0".into()));
    }
    let grid: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
    let base: Vec<f64> = grid.iter().map(|&x| u(x)).collect();
    let kernel: Vec<Vec<f64>> = grid.iter().map(|&x| grid.iter().map(|&z| w(x, z)).collect()).collect();
    let mut v = base.clone();
    let mut gap = f64::INFINITY;
    for it in 1..=max_iter {
        let weights: Vec<f64> = v.iter().map(|&vz| (-beta * vz).exp()).collect();
        let z: f64 = weights.iter().sum();
        let next: Vec<f64> = base
            .iter()
            .zip(&kernel)
            .map(|(b, row)| b + row.iter().zip(&weights).map(|(k, q)| k * q).sum::<f64>() / z)
            .collect();
        gap = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if gap < tol {
            return Ok(SelfConsistentPotential {
                grid,
                potential: v,
                iterations: it,
                gap,
            });
        }
    }
    Err(Error::Domain(format!(
        "self-consistency iteration did not converge in {max_iter} steps (gap {gap:.3e})"
    )))
}

//! Selection/mutation: each particle follows its own base dynamics and, at
//! rate `lambda_star`, may be replaced by a copy of a uniformly chosen one.

use std::fmt;
use std::sync::Arc;

use crate::engine::BaseDynamics;
use crate::error::{Error, Result};
use crate::particles::ParticleSystem;
use crate::rng::{uniform, Stream};

type Replacement<S> = Arc<dyn Fn(&S, &S) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct SelectionMutation<B: BaseDynamics> {
    pub base: B,
    pub n: usize,
    pub lambda_star: f64,
    replace: Replacement<B::State>,
}

impl<B: BaseDynamics + fmt::Debug> fmt::Debug for SelectionMutation<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SelectionMutation")
            .field("base", &self.base)
            .field("n", &self.n)
            .field("lambda_star", &self.lambda_star)
            .finish_non_exhaustive()
    }
}

impl<B: BaseDynamics> SelectionMutation<B> {
    /// `replace(x_i, x_j)` is the probability that particle `i` becomes a
    /// copy of particle `j`; it must lie in `[0, 1]`.
    pub fn new<F>(base: B, n: usize, lambda_star: f64, replace: F) -> Result<Self>
    where
        F: Fn(&B::State, &B::State) -> f64 + Send + Sync + 'static,
    {
        if n == 0 {
            return Err(Error::InvalidArgument("selection needs N >= 1".into()));
        }
        if !(lambda_star >= 0.0 && lambda_star.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda_star = {lambda_star}")));
        }
        Ok(SelectionMutation {
            base,
            n,
            lambda_star,
            replace: Arc::new(replace),
        })
    }

    pub fn replacement(&self, x: &B::State, z: &B::State) -> f64 {
        (self.replace)(x, z)
    }

    /// Lipschitz constant of the jump part. Kernels of two configurations that
    /// agree at `i` are at most `dbar1 / N` apart in total variation, so the
    /// split probability is at most `theta dbar1 / (2 N lambda_star)` with
    /// `theta = lambda_star`.
    pub fn lipschitz_theta(&self) -> f64 {
        self.lambda_star
    }
}

impl<B: BaseDynamics> ParticleSystem for SelectionMutation<B> {
    type State = B::State;

    fn size(&self) -> usize {
        self.n
    }

    fn rate_ceiling(&self) -> f64 {
        self.lambda_star
    }

    fn flow(&self, _i: usize, z: &B::State, dt: f64, rng: &mut Stream) -> B::State {
        self.base.flow(z, dt, rng)
    }

    fn rate(&self, _i: usize, _x: &[B::State]) -> f64 {
        self.lambda_star
    }

    fn jump(&self, i: usize, x: &[B::State], rng: &mut Stream) -> B::State {
        let n = x.len();
        let j = ((uniform(rng) * n as f64) as usize).min(n - 1);
        if uniform(rng) < self.replacement(&x[i], &x[j]) {
            x[j].clone()
        } else {
            x[i].clone()
        }
    }

    fn kernel_atoms(&self, i: usize, x: &[B::State]) -> Option<Vec<(B::State, f64)>> {
        let n = x.len() as f64;
        let mut stay = 0.0;
        let mut atoms = Vec::with_capacity(x.len() + 1);
        for xj in x {
            let p = self.replacement(&x[i], xj);
            atoms.push((xj.clone(), p / n));
            stay += (1.0 - p) / n;
        }
        atoms.push((x[i].clone(), stay));
        Some(atoms)
    }

    fn check_jump(&self, i: usize, x: &[B::State], time: f64) -> Result<()> {
        for (j, xj) in x.iter().enumerate() {
            let p = self.replacement(&x[i], xj);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Contract(format!(
                    "replacement probability {p} for particles ({i}, {j}) at t = {time} is outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

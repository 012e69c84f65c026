//! Refresh-to-uniform dynamics on the torus.

use rand::Rng;

use crate::coupling::MeetingCoupling;
use crate::engine::BaseDynamics;
use crate::rng::{exp1, Stream};
use crate::state::TorusPoint;

/// Jumps to a uniform point of `[0,1)^D` at a constant rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusRefresh<const D: usize> {
    pub rate: f64,
}

fn uniform_point<const D: usize>(rng: &mut Stream) -> TorusPoint<D> {
    let mut c = [0.0; D];
    for v in c.iter_mut() {
        *v = rng.random::<f64>();
    }
    TorusPoint(c)
}

impl<const D: usize> BaseDynamics for TorusRefresh<D> {
    type State = TorusPoint<D>;

    fn flow(&self, x: &TorusPoint<D>, dt: f64, rng: &mut Stream) -> TorusPoint<D> {
        // Only the last refresh matters and it is uniform whatever came before.
        if rng.random::<f64>() < -(-self.rate * dt).exp_m1() {
            uniform_point(rng)
        } else {
            *x
        }
    }
}

/// Both copies refresh at the same times to the same point, so they meet at
/// the first refresh.
impl<const D: usize> MeetingCoupling for TorusRefresh<D> {
    type Aux = ();

    fn advance_unmerged(
        &self,
        x: &mut TorusPoint<D>,
        y: &mut TorusPoint<D>,
        _aux: &mut (),
        dt: f64,
        rng: &mut Stream,
    ) -> Option<f64> {
        if self.rate <= 0.0 {
            return None;
        }
        let tau = exp1(rng) / self.rate;
        if tau >= dt {
            return None;
        }
        *x = self.flow(&uniform_point(rng), dt - tau, rng);
        *y = *x;
        Some(tau)
    }
}

//! Small models with known answers.

use crate::engine::{BaseDynamics, NonlinearModel};
use crate::measure::{Axis, Binning, EmpiricalMeasure};
use crate::rng::Stream;

/// Constant jump rate `rate` under ceiling `ceiling`; the state drifts at
/// speed `drift` and each jump adds one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantRate {
    pub rate: f64,
    pub ceiling: f64,
    pub drift: f64,
}

impl ConstantRate {
    pub fn new(rate: f64) -> Self {
        ConstantRate {
            rate,
            ceiling: rate,
            drift: 0.0,
        }
    }
}

impl BaseDynamics for ConstantRate {
    type State = f64;

    fn flow(&self, x: &f64, dt: f64, _rng: &mut Stream) -> f64 {
        x + self.drift * dt
    }
}

impl NonlinearModel for ConstantRate {
    fn rate(&self, _x: &f64, _nu: &EmpiricalMeasure<f64>) -> f64 {
        self.rate
    }

    fn jump(&self, x: &f64, _nu: &EmpiricalMeasure<f64>, _u: f64) -> f64 {
        x + 1.0
    }

    fn rate_ceiling(&self) -> f64 {
        self.ceiling
    }

    fn kernel_atoms(&self, x: &f64, _nu: &EmpiricalMeasure<f64>) -> Option<Vec<(f64, f64)>> {
        Some(vec![(x + 1.0, 1.0)])
    }

    fn binning(&self) -> Binning {
        Binning::new(vec![Axis::new(0.0, 64.0, 64)])
    }
}

//! Distances between states and measures, and Monte-Carlo estimators of
//! coupling bounds.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::{Binning, Histogram};
use crate::state::{same_state, State};

/// A weight function `V >= 1`.
#[derive(Clone)]
pub struct LyapunovFn<S> {
    name: String,
    f: Arc<dyn Fn(&S) -> f64 + Send + Sync>,
}

impl<S> LyapunovFn<S> {
    pub fn new<F: Fn(&S) -> f64 + Send + Sync + 'static>(name: impl Into<String>, f: F) -> Self {
        LyapunovFn {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// `V = 1`, under which the V-norm is the total variation norm.
    pub fn unit() -> Self {
        Self::new("unit", |_| 1.0)
    }

    #[inline]
    pub fn eval(&self, s: &S) -> f64 {
        (self.f)(s)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl<S> fmt::Debug for LyapunovFn<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LyapunovFn({})", self.name)
    }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundEstimate {
    pub estimate: f64,
    pub se: f64,
    pub n: usize,
}

impl BoundEstimate {
    /// Sample mean and standard error of the mean.
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")));
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(BoundEstimate {
            estimate: mean,
            se: (var / n as f64).sqrt(),
            n,
        })
    }

    pub fn upper(&self, k: f64) -> f64 {
        self.estimate + k * self.se
    }
}

/// `1{x != y} (V(x) + V(y))`.
pub fn d_v<S: State>(x: &S, y: &S, v: &LyapunovFn<S>) -> f64 {
    if same_state(x, y) {
        0.0
    } else {
        v.eval(x) + v.eval(y)
    }
}

/// `1{x != y} (2 beta + V(x) + V(y))`.
pub fn d_beta<S: State>(x: &S, y: &S, v: &LyapunovFn<S>, beta: f64) -> f64 {
    if same_state(x, y) {
        0.0
    } else {
        2.0 * beta + v.eval(x) + v.eval(y)
    }
}

fn check_len<S>(x: &[S], y: &[S]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "system sizes differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Number of differing coordinates.
pub fn count_diff<S: State>(x: &[S], y: &[S]) -> usize {
    x.iter().zip(y).filter(|(a, b)| !same_state(*a, *b)).count()
}

/// Twice the number of differing coordinates.
pub fn dbar1<S: State>(x: &[S], y: &[S]) -> Result<f64> {
    check_len(x, y)?;
    Ok(2.0 * count_diff(x, y) as f64)
}

/// Weighted coordinate distance with per-coordinate weights `V_i`:
/// `sum_i 1{x_i != y_i} (V_i(x_i) + V_i(y_i) + (V(x) + V(y)) / N)` where
/// `V(x) = sum_i V_i(x_i)`.
pub fn dbar_v<S: State>(x: &[S], y: &[S], vs: &[LyapunovFn<S>]) -> Result<f64> {
    check_len(x, y)?;
    if vs.len() != x.len() {
        return Err(Error::InvalidArgument("one weight function per coordinate".into()));
    }
    let n = x.len() as f64;
    let total: f64 = x
        .iter()
        .zip(y)
        .zip(vs)
        .map(|((a, b), v)| v.eval(a) + v.eval(b))
        .sum();
    Ok(x.iter()
        .zip(y)
        .zip(vs)
        .filter(|((a, b), _)| !same_state(*a, *b))
        .map(|((a, b), v)| v.eval(a) + v.eval(b) + total / n)
        .sum())
}

/// Total variation `sup_A |P(A) - Q(A)|`, half the L1 distance, between the
/// normalized histograms of two sample sets.
pub fn histogram_tv<S: State>(a: &[S], b: &[S], binning: &Binning) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("empty sample set".into()));
    }
    Ok(0.5 * Histogram::from_samples(a.iter(), binning)?.l1(&Histogram::from_samples(b.iter(), binning)?))
}

/// Coupled pairs observed at a fixed time.
pub trait CoupledSample<S> {
    /// The pair at time `t`, if it was observed.
    fn pair_at(&self, t: f64) -> Option<(&S, &S)>;
}

/// `2 P(X_t != Y_t)` with its binomial standard error.
pub fn estimate_tv_bound<S: State, C: CoupledSample<S>>(ensemble: &[C], t: f64) -> Result<BoundEstimate> {
    let v = LyapunovFn::unit();
    estimate_vnorm_bound(ensemble, t, &v)
}

/// Mean of `d_V(X_t, Y_t)` with its standard error.
pub fn estimate_vnorm_bound<S: State, C: CoupledSample<S>>(
    ensemble: &[C],
    t: f64,
    v: &LyapunovFn<S>,
) -> Result<BoundEstimate> {
    let xs = ensemble
        .iter()
        .map(|c| {
            c.pair_at(t)
                .map(|(x, y)| d_v(x, y, v))
                .ok_or_else(|| Error::InvalidArgument(format!("pair not observed at t={t}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    BoundEstimate::from_samples(&xs)
}

/// Fraction of unequal pairs at `t`.
pub fn fraction_unequal<S: State, C: CoupledSample<S>>(ensemble: &[C], t: f64) -> Result<f64> {
    Ok(estimate_tv_bound(ensemble, t)?.estimate / 2.0)
}

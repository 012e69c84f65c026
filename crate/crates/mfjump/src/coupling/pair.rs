//! Maximal coupling of two discrete laws.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasure;
use crate::rng::{uniform, Stream};
use crate::state::{State, StateKey, DEFAULT_EPS};

/// Draws `(X, Y)` with `X ~ first`, `Y ~ second` and `P(X = Y)` as large as
/// possible.
///
/// With probability `p` both are the same draw from the common part;
/// otherwise `X` and `Y` come from the two excess parts, which have disjoint
/// supports.
#[derive(Clone, Debug)]
pub struct PairSampler<S> {
    /// Overlap mass, one minus the total variation distance.
    pub p: f64,
    pub common: Option<EmpiricalMeasure<S>>,
    pub first_excess: Option<EmpiricalMeasure<S>>,
    pub second_excess: Option<EmpiricalMeasure<S>>,
}

fn collect<S: State>(m: &[(S, f64)], order: &mut Vec<(StateKey, S)>, index: &mut HashMap<StateKey, usize>) -> Vec<f64> {
    let mut w = vec![0.0; order.len()];
    for (s, mass) in m {
        let key = s.key(DEFAULT_EPS);
        let k = *index.entry(key.clone()).or_insert_with(|| {
            order.push((key, s.clone()));
            order.len() - 1
        });
        if k >= w.len() {
            w.resize(k + 1, 0.0);
        }
        w[k] += mass;
    }
    w
}

fn part<S: State>(order: &[(StateKey, S)], w: Vec<f64>) -> Result<Option<EmpiricalMeasure<S>>> {
    let atoms: Vec<(S, f64)> = order
        .iter()
        .zip(w)
        .filter(|(_, m)| *m > 0.0)
        .map(|((_, s), m)| (s.clone(), m))
        .collect();
    if atoms.iter().map(|a| a.1).sum::<f64>() <= 1e-15 {
        return Ok(None);
    }
    EmpiricalMeasure::normalized(atoms).map(Some)
}

/// Builds the maximal coupling of two discrete probability laws given as
/// weighted atoms.
pub fn optimal_pair_sampler<S: State>(first: &[(S, f64)], second: &[(S, f64)]) -> Result<PairSampler<S>> {
    for m in [first, second] {
        let total: f64 = m.iter().map(|a| a.1).sum();
        if m.iter().any(|a| !(a.1 >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMeasure(format!(
                "expected a probability law, total mass {total}"
            )));
        }
    }
    let mut order = Vec::new();
    let mut index = HashMap::new();
    let mut a = collect(first, &mut order, &mut index);
    let mut b = collect(second, &mut order, &mut index);
    a.resize(order.len(), 0.0);
    b.resize(order.len(), 0.0);
    let common: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
    let p = common.iter().sum::<f64>().min(1.0);
    let ex1: Vec<f64> = a.iter().zip(&common).map(|(x, c)| x - c).collect();
    let ex2: Vec<f64> = b.iter().zip(&common).map(|(x, c)| x - c).collect();
    Ok(PairSampler {
        p,
        common: part(&order, common)?,
        first_excess: part(&order, ex1)?,
        second_excess: part(&order, ex2)?,
    })
}

impl<S: State> PairSampler<S> {
    pub fn of_measures(first: &EmpiricalMeasure<S>, second: &EmpiricalMeasure<S>) -> Result<Self> {
        optimal_pair_sampler(first.atoms(), second.atoms())
    }

    /// Draws a pair from the three uniforms `(v, u, w)`: `v` decides between
    /// the common and the excess parts, `u` picks the common atom, `w` picks
    /// both excess atoms.
    pub fn draw(&self, v: f64, u: f64, w: f64) -> (S, S) {
        match (&self.common, &self.first_excess, &self.second_excess) {
            (Some(c), _, _) if v < self.p => {
                let s = c.quantile(u).clone();
                (s.clone(), s)
            }
            (_, Some(e1), Some(e2)) => (e1.quantile(w).clone(), e2.quantile(w).clone()),
            (Some(c), _, _) => {
                let s = c.quantile(u).clone();
                (s.clone(), s)
            }
            _ => unreachable!("a probability law has mass somewhere"),
        }
    }

    pub fn sample(&self, rng: &mut Stream) -> (S, S) {
        let (v, u, w) = (uniform(rng), uniform(rng), uniform(rng));
        self.draw(v, u, w)
    }

    /// Exact total variation distance `1 - p`.
    pub fn total_variation(&self) -> f64 {
        1.0 - self.p
    }
}

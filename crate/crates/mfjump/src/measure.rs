//! Atom-cloud probability measures, time-indexed flows of them, and
//! histogram binning.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{State, StateKey};

const WEIGHT_TOL: f64 = 1e-12;

/// A finitely supported probability measure.
#[derive(Clone, Debug)]
pub struct EmpiricalMeasure<S> {
    atoms: Vec<(S, f64)>,
    cumulative: Vec<f64>,
}

impl<S: State> EmpiricalMeasure<S> {
    /// Validates nonnegative weights summing to one.
    pub fn new(atoms: Vec<(S, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        let mut total = 0.0;
        for (s, w) in &atoms {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidMeasure(format!("weight {w} is negative or not finite")));
            }
            if !s.is_valid() {
                return Err(Error::InvalidMeasure(format!("invalid atom {s:?}")));
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_TOL * (atoms.len() as f64).max(1.0) {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Self::from_parts(atoms))
    }

    /// Rescales nonnegative weights to total mass one.
    pub fn normalized(atoms: Vec<(S, f64)>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidMeasure(format!("total mass {total}")));
        }
        Self::new(atoms.into_iter().map(|(s, w)| (s, w / total)).collect())
    }

    /// Uniform weights on the given states (duplicates kept as separate atoms).
    pub fn uniform(states: Vec<S>) -> Self {
        assert!(!states.is_empty(), "uniform measure needs at least one state");
        let w = 1.0 / states.len() as f64;
        Self::from_parts(states.into_iter().map(|s| (s, w)).collect())
    }

    pub fn dirac(s: S) -> Self {
        Self::from_parts(vec![(s, 1.0)])
    }

    fn from_parts(atoms: Vec<(S, f64)>) -> Self {
        let mut acc = 0.0;
        let cumulative = atoms
            .iter()
            .map(|(_, w)| {
                acc += w;
                acc
            })
            .collect();
        EmpiricalMeasure { atoms, cumulative }
    }

    pub fn atoms(&self) -> &[(S, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Integral of `f`.
    pub fn expect<F: Fn(&S) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|(s, w)| w * f(s)).sum()
    }

    /// Merges atoms with equal keys; order of first appearance is kept.
    pub fn dedup(&self, eps: f64) -> Self {
        let mut index: HashMap<StateKey, usize> = HashMap::new();
        let mut out: Vec<(S, f64)> = Vec::new();
        for (s, w) in &self.atoms {
            match index.get(&s.key(eps)) {
                Some(&k) => out[k].1 += w,
                None => {
                    index.insert(s.key(eps), out.len());
                    out.push((s.clone(), *w));
                }
            }
        }
        Self::from_parts(out)
    }

    /// Draws one atom.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &S {
        self.quantile(rng.random::<f64>())
    }

    /// The atom selected by `u` in `[0, 1)` through the cumulative weights.
    pub fn quantile(&self, u: f64) -> &S {
        let total = *self.cumulative.last().expect("nonempty");
        let k = self.cumulative.partition_point(|&c| c <= u * total);
        &self.atoms[k.min(self.atoms.len() - 1)].0
    }
}

/// A piecewise-constant flow of measures on a uniform time grid.
///
/// Snapshot `k` is valid on `[k dt, (k+1) dt)`; times past the last
/// snapshot use the last one.
#[derive(Clone, Debug)]
pub struct MeasureFlow<S> {
    grid_step: f64,
    snapshots: Vec<EmpiricalMeasure<S>>,
}

impl<S: State> MeasureFlow<S> {
    pub fn new(grid_step: f64, snapshots: Vec<EmpiricalMeasure<S>>) -> Result<Self> {
        if !(grid_step > 0.0 && grid_step.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid_step = {grid_step}")));
        }
        if snapshots.is_empty() {
            return Err(Error::InvalidArgument("flow needs at least one snapshot".into()));
        }
        Ok(MeasureFlow {
            grid_step,
            snapshots,
        })
    }

    /// The flow equal to `m` at all times.
    pub fn constant(m: EmpiricalMeasure<S>) -> Self {
        MeasureFlow {
            grid_step: 1.0,
            snapshots: vec![m],
        }
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn snapshots(&self) -> &[EmpiricalMeasure<S>] {
        &self.snapshots
    }

    #[inline]
    pub fn index(&self, t: f64) -> usize {
        let k = (t / self.grid_step).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.snapshots.len() - 1)
        }
    }

    #[inline]
    pub fn at(&self, t: f64) -> &EmpiricalMeasure<S> {
        &self.snapshots[self.index(t)]
    }

    /// End of the validity interval of the snapshot used at `t`, or infinity
    /// for the last snapshot.
    pub fn next_boundary(&self, t: f64) -> f64 {
        let k = self.index(t);
        if k + 1 >= self.snapshots.len() {
            f64::INFINITY
        } else {
            (k + 1) as f64 * self.grid_step
        }
    }
}

/// One real axis of a histogram.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Axis { lo, hi, bins }
    }

    /// Bin index; values outside the box land in the edge bins.
    #[inline]
    pub fn bin(&self, v: f64) -> usize {
        let r = (v - self.lo) / (self.hi - self.lo) * self.bins as f64;
        if r <= 0.0 {
            0
        } else {
            (r as usize).min(self.bins - 1)
        }
    }
}

/// Histogram layout: one axis per real coordinate, labels optionally exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub axes: Vec<Axis>,
    #[serde(default = "default_true")]
    pub use_labels: bool,
}

fn default_true() -> bool {
    true
}

pub const DEFAULT_BINS: usize = 64;

impl Binning {
    pub fn new(axes: Vec<Axis>) -> Self {
        Binning {
            axes,
            use_labels: true,
        }
    }

    /// `DEFAULT_BINS` uniform bins on each side of a box.
    pub fn uniform_box(bounds: &[(f64, f64)]) -> Self {
        Self::new(
            bounds
                .iter()
                .map(|&(lo, hi)| Axis::new(lo, hi, DEFAULT_BINS))
                .collect(),
        )
    }

    pub fn without_labels(mut self) -> Self {
        self.use_labels = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::InvalidArgument("binning has no axes".into()));
        }
        for a in &self.axes {
            if !(a.hi > a.lo && a.bins > 0 && a.lo.is_finite() && a.hi.is_finite()) {
                return Err(Error::InvalidArgument(format!("bad axis {a:?}")));
            }
        }
        Ok(())
    }

    pub fn cell<S: State>(&self, s: &S) -> Result<Vec<i64>> {
        let c = s.coords();
        if c.len() != self.axes.len() {
            return Err(Error::InvalidArgument(format!(
                "state has {} coordinates, binning has {} axes",
                c.len(),
                self.axes.len()
            )));
        }
        let mut key: Vec<i64> = c
            .iter()
            .zip(&self.axes)
            .map(|(v, a)| a.bin(*v) as i64)
            .collect();
        if self.use_labels {
            key.extend(s.labels());
        }
        Ok(key)
    }
}

/// Normalized histogram over the cells of a [`Binning`].
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub mass: BTreeMap<Vec<i64>, f64>,
}

impl Histogram {
    pub fn from_samples<'a, S: State, I>(samples: I, binning: &Binning) -> Result<Self>
    where
        I: IntoIterator<Item = &'a S>,
    {
        Self::from_weighted(samples.into_iter().map(|s| (s, 1.0)), binning)
    }

    pub fn from_measure<S: State>(m: &EmpiricalMeasure<S>, binning: &Binning) -> Result<Self> {
        Self::from_weighted(m.atoms().iter().map(|(s, w)| (s, *w)), binning)
    }

    fn from_weighted<'a, S: State, I>(items: I, binning: &Binning) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a S, f64)>,
    {
        binning.validate()?;
        let mut mass = BTreeMap::new();
        let mut total = 0.0;
        for (s, w) in items {
            *mass.entry(binning.cell(s)?).or_insert(0.0) += w;
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::InvalidArgument("empty sample set".into()));
        }
        for v in mass.values_mut() {
            *v /= total;
        }
        Ok(Histogram { mass })
    }

    /// L1 distance between normalized histograms, in [0, 2].
    pub fn l1(&self, other: &Histogram) -> f64 {
        let mut d = 0.0;
        for (k, p) in &self.mass {
            d += (p - other.mass.get(k).copied().unwrap_or(0.0)).abs();
        }
        for (k, q) in &other.mass {
            if !self.mass.contains_key(k) {
                d += q;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_stream;

    #[test]
    fn rejects_bad_weights() {
        assert!(EmpiricalMeasure::new(vec![(0.0, 0.5), (1.0, 0.6)]).is_err());
        assert!(EmpiricalMeasure::new(vec![(0.0, -0.5), (1.0, 1.5)]).is_err());
        assert!(EmpiricalMeasure::<f64>::new(vec![]).is_err());
        assert!(EmpiricalMeasure::new(vec![(0.0, 0.25), (1.0, 0.75)]).is_ok());
    }

    #[test]
    fn dedup_merges_identical_atoms() {
        let m = EmpiricalMeasure::uniform(vec![2.0; 4]).dedup(1e-9);
        assert_eq!(m.len(), 1);
        assert!((m.atoms()[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_follows_weights() {
        let m = EmpiricalMeasure::new(vec![(0.0, 0.2), (1.0, 0.8)]).unwrap();
        let mut rng = replica_stream(1, 0);
        let n = 100_000;
        let ones = (0..n).filter(|_| *m.sample(&mut rng) == 1.0).count() as f64 / n as f64;
        assert!((ones - 0.8).abs() < 0.006);
    }

    #[test]
    fn flow_lookup_is_left_continuous_and_clamped() {
        let snaps = (0..3).map(|k| EmpiricalMeasure::dirac(k as f64)).collect();
        let f = MeasureFlow::new(0.5, snaps).unwrap();
        assert_eq!(*f.at(0.0).sample(&mut replica_stream(0, 0)), 0.0);
        assert_eq!(f.index(0.49), 0);
        assert_eq!(f.index(0.5), 1);
        assert_eq!(f.index(1.0), 2);
        assert_eq!(f.index(100.0), 2);
        assert_eq!(f.next_boundary(0.7), 1.0);
        assert_eq!(f.next_boundary(1.2), f64::INFINITY);
    }

    #[test]
    fn edge_bins_absorb_outliers() {
        let a = Axis::new(0.0, 1.0, 4);
        assert_eq!(a.bin(-3.0), 0);
        assert_eq!(a.bin(0.3), 1);
        assert_eq!(a.bin(1.0), 3);
        assert_eq!(a.bin(7.0), 3);
    }
}

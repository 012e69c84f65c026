//! Reproducible random streams.
//!
//! Every replica owns a ChaCha stream derived from `(master seed, replica
//! index)`, so results do not depend on thread count or scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::Result;

/// The random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Stream for replica `index` under `seed`.
pub fn replica_stream(seed: u64, index: u64) -> Stream {
    keyed_stream(seed, index)
}

/// Stream keyed by an arbitrary word, e.g. a coordinate index.
pub fn keyed_stream(seed: u64, key: u64) -> Stream {
    let mut rng = Stream::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}

/// Child stream seeded from the parent; the parent advances by one word.
pub fn substream(parent: &mut Stream) -> Stream {
    Stream::seed_from_u64(parent.next_u64())
}

/// Standard exponential draw.
#[inline]
pub fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

/// Uniform draw on [0, 1).
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

/// Runs `n` replicas in parallel and returns their results in replica order.
///
/// Errors are tagged with the replica index; the lowest failing index wins.
pub fn replicate<T, F>(n: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut Stream) -> Result<T> + Sync + Send,
{
    let out: Vec<Result<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_stream(seed, i as u64);
            f(i, &mut rng).map_err(|e| e.in_replica(i))
        })
        .collect();
    out.into_iter().collect()
}

/// Infallible variant of [`replicate`].
pub fn replicate_ok<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut Stream) -> T + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_stream(seed, i as u64);
            f(i, &mut rng)
        })
        .collect()
}

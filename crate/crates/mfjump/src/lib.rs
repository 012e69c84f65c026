//! Simulation and coupling of mean-field jump processes.
//!
//! Processes here move by a base Markov dynamics and jump at a rate that may
//! depend on the law of the process itself. The crate provides
//!
//! - exact simulators by thinning, with global or local rate bounds
//!   ([`engine`]), and a Picard fixed-point solver for the law flow;
//! - the associated interacting particle systems ([`particles`]);
//! - merge/split couplings of two processes and of two particle systems
//!   ([`coupling`]), with Monte Carlo distance estimators ([`metrics`]);
//! - closed-form contraction certificates from model constants
//!   ([`certificates`]);
//! - worked models ([`models`]) and a command-line driver ([`cli`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod cli;
pub mod coupling;
pub mod engine;
pub mod error;
pub mod measure;
pub mod metrics;
pub mod models;
pub mod particles;
pub mod rng;
pub mod state;
pub mod stats;

pub use error::{Error, Result};

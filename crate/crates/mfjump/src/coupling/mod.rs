//! Couplings: meeting couplings of base dynamics, maximal couplings of
//! discrete laws, merge/split couplings of non-linear processes and coupled
//! particle systems.

pub mod base;
pub mod nonlinear;
pub mod pair;
pub mod system;

pub use base::{
    advance_pair, coupled_base, estimate_meeting, BasePair, BasePath, DoeblinEstimate, MeetingCoupling, MeetingRate,
};
pub use nonlinear::{merge_split_ensemble, simulate_merge_split, CoupledTrajectory, MergeSplitOptions};
pub use pair::{optimal_pair_sampler, PairSampler};
pub use system::{
    simulate_coupled_system, CoordinateView, CoupledParticleSystem, CoupledSystemOptions, CoupledSystemSample,
    CoupledSystemTrajectory,
};

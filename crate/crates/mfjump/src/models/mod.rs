//! Concrete models.

pub mod mh;
pub mod refresh;
pub mod run_tumble;
pub mod selection;
pub mod tcp;
pub mod toy;
pub mod zigzag;

pub use mh::{MhGranular, MhParams, MhRaw};
pub use refresh::TorusRefresh;
pub use run_tumble::{RunTumble, RunTumbleParams};
pub use selection::SelectionMutation;
pub use tcp::{Tcp, TcpParams};
pub use toy::ConstantRate;
pub use zigzag::{ZigZagParams, ZigZagSystem};

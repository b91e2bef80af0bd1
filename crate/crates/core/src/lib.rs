//! Gravitational quantum states of a bouncing particle: Airy eigenbasis,
//! kicked classical and quantum dynamics, and delay-scan spectroscopy.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod airy;
pub mod basis;
pub mod classical;
pub mod error;
pub mod parallel;
pub mod propagator;
pub mod pulse;
pub mod quadrature;
pub mod signal;
pub mod spectroscopy;
pub mod state;
pub mod units;

pub use basis::EigenBasis;
pub use error::{Error, Result};
pub use pulse::{KickKind, KickPulse, Spin};
pub use state::StateVector;
pub use units::UnitSystem;

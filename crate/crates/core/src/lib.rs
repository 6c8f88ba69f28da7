//! Exact simulator for BB84 with entangling gates applied to groups of
//! qubits, the attacks against it and the channel imperfections that limit
//! its key rate.

pub mod attacks;
pub mod channel;
pub mod cli;
pub mod error;
pub mod metrics;
pub mod optimize;
pub mod protocol;
pub mod quantum;

pub use error::{Error, Result};

//! Simulation of quantum key distribution protocols on exact density matrices.
//!
//! The crate covers BB84 and B92, two reinforcement-learned phase-agreement
//! protocols, variants that append a trained parameterized circuit to Bob's
//! decoder, six single-qubit noise channels, and binary-classification metrics
//! over the resulting transcripts.

pub mod baseline;
pub mod error;
pub mod metrics;
pub mod noise;
pub mod qnn;
pub mod qrl;
pub mod rng;
pub mod state;
pub mod transcript;

pub use error::{Error, Result};

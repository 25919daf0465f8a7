//! Continuous double auction simulator and oracle experiment harness.

pub mod cli;
pub mod exchange;
pub mod oracle;
pub mod schedules;
pub mod stats;
pub mod strategies;

/// Random generator used throughout the simulator.
pub type SimRng = rand_chacha::ChaCha8Rng;

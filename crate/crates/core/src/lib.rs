//! Decentralized non-convex optimization over networks.

pub mod accounting;

pub mod algorithms;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod oracles;
pub mod problems;
pub mod topology;

pub use accounting::Counters;
pub use error::{Error, Result};

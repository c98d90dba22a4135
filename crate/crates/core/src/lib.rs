//! Multi-cell massive MIMO uplink simulator with smart pilot assignment (SPA).
//!
//! The library models a hexagonal multi-cell network where every cell reuses
//! the same orthogonal pilot group, so channel estimates at each base station
//! are contaminated by same-pilot users in neighboring cells. The `assignment`
//! module implements the SPA greedy that pairs the most-interfered pilot with
//! the best-channel user (and exhaustive max-min oracles to check it), while
//! `experiment` runs seeded, paired Monte-Carlo trials producing min-SINR
//! CDFs, worst-user capacities, and convergence traces.

pub mod airlink;
pub mod assignment;
pub mod config;
pub mod experiment;
pub mod fading;
pub mod geometry;
pub mod report;
pub mod rng;

use thiserror::Error;

/// Errors surfaced by the simulator library.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("exhaustive search refused: {0}")]
    ExhaustiveBound(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Linear power ratio to decibels.
pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Decibels to linear power ratio.
pub fn db_to_lin(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

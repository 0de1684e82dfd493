//! Pairwise preference ranking: Bradley-Terry fitting of forced-choice vote
//! tallies, rank-agreement metrics, and a scorer trained on winning
//! probabilities.

pub mod bt;
pub mod error;
pub mod learner;
pub mod metrics;

pub use error::{Error, Result};

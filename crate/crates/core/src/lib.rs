//! Cooperative coloring games on weighted graphs.
//!
//! Each node of a complete weighted graph picks a color; a node's utility is
//! the sum of its weights to same-colored nodes. Coalitions of up to `k`
//! players may jointly move to a common group when every member strictly
//! gains. This crate implements the game dynamics, exhaustive stability
//! search, the deviation-sequence calculus on partition vectors (dominance
//! lattice, cascade generators), a gallery of counterexample and reduction
//! graphs with machine-checkable claims, and price-of-anarchy analysis.
//!
//! Everything is desk-scale and oracle-grade: searches are exhaustive and
//! budgeted, ratios are exact rationals, and `-inf` is a real sentinel with
//! absorbing arithmetic rather than a large negative number.

pub mod cascades;
pub mod dynamics;
pub mod efficiency;
pub mod extensions;
pub mod gallery;
pub mod game;
pub mod lattice;
pub mod stability;

#[cfg(test)]
pub(crate) mod test_support;

pub use game::{
    AsymGame, ExtendedUtility, Game, Partition, PartitionVector, ResolvedView, Weight,
};

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("search too large: examined {examined} states, budget {budget}")]
    SearchTooLarge { examined: u64, budget: u64 },
    #[error("insufficient groups of size {size}: need {needed}, have {have}")]
    InsufficientGroups {
        size: usize,
        needed: usize,
        have: usize,
    },
    #[error("target utility not achievable: {0}")]
    NotAchievable(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Budget for exhaustive searches. Exceeding a budget is a hard
/// [`Error::SearchTooLarge`], never a silent truncation.
#[derive(Debug, Clone, Copy)]
pub struct SearchBudget {
    /// Maximum number of partitions/configurations examined.
    pub max_states: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_states: 50_000_000,
        }
    }
}

impl SearchBudget {
    pub fn new(max_states: u64) -> Self {
        SearchBudget { max_states }
    }
}

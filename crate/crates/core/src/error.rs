//! Error types shared across the crate.

use crate::postprocess::SessionStats;
use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation.
    #[error("invalid parameter `{name}` = {value}: {constraint}")]
    InvalidParameter {
        /// Name of the offending parameter (config key).
        name: &'static str,
        /// The rejected value.
        value: f64,
        /// Human-readable constraint that was violated.
        constraint: &'static str,
    },

    /// A function was evaluated outside its mathematical domain.
    #[error("domain error in {context}: {detail}")]
    Domain {
        /// Operation that failed.
        context: &'static str,
        /// What went wrong.
        detail: String,
    },

    /// Fringe visibility is undefined when both intensities are zero.
    #[error("visibility undefined: both port intensities are zero")]
    UndefinedVisibility,

    /// Not enough monitor counts to form a visibility estimate.
    #[error("insufficient statistics for visibility estimate: {0}")]
    InsufficientStatistics(&'static str),

    /// A Monte Carlo accumulation ended before reaching its target count.
    /// Carries whatever statistics were gathered so far.
    #[error("block incomplete: {got} of {target} sifted counts accumulated")]
    PartialBlock {
        /// Sifted counts reached before the stream/budget ran out.
        got: u64,
        /// Requested target.
        target: u64,
        /// Statistics accumulated so far.
        stats: Box<SessionStats>,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

//! Coherent-one-way QKD link simulator.
//!
//! Models a time-bin-encoded transmitter (two slots per logical bit, decoy
//! symbols filling both), a lossy channel, and a receiver that splits 90:10
//! between an arrival-time detector and a delay-line interferometer whose
//! destructive port monitors inter-pulse coherence. On top of the sampled
//! or closed-form statistics, the finite-key analysis turns a block's QBER
//! and visibility into a secure key length.
//!
//! The crate is organized along the processing chain:
//!
//! * [`protocol`] — symbol patterns and pulse-train encoding
//! * [`optics`] — channel, interferometer and click-scaled detector sampling
//! * [`analytic`] — closed-form rates/QBER/visibility (the sweep engine and
//!   the Monte Carlo oracle)
//! * [`postprocess`] — sifting, visibility estimation, block accumulation
//! * [`security`] — finite-key secure key length and rate
//! * [`session`] — end-to-end Monte Carlo sessions and trace acquisition
//! * [`config`] — the resolved parameter set with reference defaults
//!
//! Determinism: every randomized path is a pure function of the explicit
//! seed, for any worker count (see [`rng`]).

// validation predicates use negated comparisons (`!(x > 0.0)`) on purpose:
// unlike `x <= 0.0` they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// frozen oracle constants keep their full generated precision
#![allow(clippy::excessive_precision)]

pub mod analytic;
pub mod config;
pub mod error;
pub mod optics;
pub mod postprocess;
pub mod protocol;
pub mod rng;
pub mod security;
pub mod session;

pub use config::SimConfig;
pub use error::{Error, Result};
pub use optics::{
    ChannelParams, DetectionEvent, DetectionRecordSet, DetectorChannel, DetectorParams,
    ReceiverParams, UmziPort,
};
pub use postprocess::{SessionRecord, SessionStats};
pub use protocol::{CowSymbol, PulseTrain, SourceParams, SymbolSequence};
pub use security::{KeyRateResult, SecurityParams};
pub use session::{SessionOutcome, TraceHistograms};

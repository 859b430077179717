//! Resolved simulation configuration.
//!
//! One value of [`SimConfig`] fully determines a run (together with the
//! channel attenuation, seed and mode picked per invocation). Defaults are
//! the reference system's parameters; every run embeds a hash of the
//! canonical serialization so emitted rows are self-describing.

use crate::error::Result;
use crate::optics::{DetectorParams, ReceiverParams};
use crate::protocol::SourceParams;
use crate::security::SecurityParams;
use serde::{Deserialize, Serialize};

/// Complete parameter set for the simulator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimConfig {
    /// Transmitter parameters (mu, extinction, clock, source visibility).
    pub source: SourceParams,
    /// Mean photon number used below the low-loss threshold.
    pub mu_low_loss: f64,
    /// Channel attenuation below which `mu_low_loss` replaces `mu`, dB.
    pub low_loss_threshold_db: f64,
    /// Probability of emitting a decoy symbol.
    pub decoy_probability: f64,
    /// Sifting discrimination window, ps. Clicks whose digitized bin center
    /// falls further than half this window from the slot center are ignored
    /// during sifting; 0 accepts the full slot (the reference behaviour of
    /// widened digitizer bins).
    pub discrimination_window_ps: f64,
    /// Receiver topology.
    pub receiver: ReceiverParams,
    /// Detector model (shared by both detectors).
    pub detector: DetectorParams,
    /// Finite-key security parameters.
    pub security: SecurityParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            source: SourceParams::default(),
            mu_low_loss: 0.07,
            low_loss_threshold_db: 3.0,
            decoy_probability: 0.01,
            discrimination_window_ps: 0.0,
            receiver: ReceiverParams::default(),
            detector: DetectorParams::default(),
            security: SecurityParams::default(),
        }
    }
}

impl SimConfig {
    /// Validate every sub-structure and cross-field constraint.
    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.receiver.validate()?;
        self.detector.validate()?;
        self.security.validate()?;
        if !(self.mu_low_loss > 0.0) || !self.mu_low_loss.is_finite() {
            return Err(crate::error::Error::InvalidParameter {
                name: "mu_low_loss",
                value: self.mu_low_loss,
                constraint: "must be positive and finite",
            });
        }
        if !(self.low_loss_threshold_db >= 0.0) {
            return Err(crate::error::Error::InvalidParameter {
                name: "low_loss_threshold_db",
                value: self.low_loss_threshold_db,
                constraint: "must be >= 0",
            });
        }
        if !(0.0..=1.0).contains(&self.decoy_probability) {
            return Err(crate::error::Error::InvalidParameter {
                name: "decoy_probability",
                value: self.decoy_probability,
                constraint: "must lie in [0, 1]",
            });
        }
        if !(self.discrimination_window_ps >= 0.0) {
            return Err(crate::error::Error::InvalidParameter {
                name: "discrimination_window_ps",
                value: self.discrimination_window_ps,
                constraint: "must be >= 0 (0 disables the window)",
            });
        }
        Ok(())
    }

    /// Mean photon number used at the given attenuation (auto-switches to
    /// the low-loss value below the threshold).
    pub fn mu_for(&self, attenuation_db: f64) -> f64 {
        if attenuation_db < self.low_loss_threshold_db {
            self.mu_low_loss
        } else {
            self.source.mu
        }
    }

    /// Source parameters with the attenuation-appropriate mu applied.
    pub fn source_for(&self, attenuation_db: f64) -> SourceParams {
        SourceParams {
            mu: self.mu_for(attenuation_db),
            ..self.source
        }
    }

    /// Canonical `key=value` serialization, fixed ordering.
    pub fn canonical_string(&self) -> String {
        let s = self;
        format!(
            "mu={:e};extinction_ratio_db={:e};clock_rate_hz={:e};source_visibility={:e};\
             mu_low_loss={:e};low_loss_threshold_db={:e};decoy_probability={:e};\
             discrimination_window_ps={:e};\
             monitor_tap={:e};umzi_loss_db={:e};umzi_delay_slots={};umzi_phase={:e};\
             efficiency={:e};dark_count_rate_hz={:e};jitter_sigma_low_ps={:e};\
             jitter_sigma_high_ps={:e};jitter_saturation_rate_hz={:e};dead_time_ns={:e};\
             digitizer_resolution_ps={:e};epsilon_qkd={:e};epsilon_cor={:e};f_ir={:e};\
             block_size_n={}",
            s.source.mu,
            s.source.extinction_ratio_db,
            s.source.clock_rate_hz,
            s.source.source_visibility,
            s.mu_low_loss,
            s.low_loss_threshold_db,
            s.decoy_probability,
            s.discrimination_window_ps,
            s.receiver.monitor_tap,
            s.receiver.umzi_loss_db,
            s.receiver.umzi_delay_slots,
            s.receiver.umzi_phase,
            s.detector.efficiency,
            s.detector.dark_count_rate_hz,
            s.detector.jitter_sigma_low_ps,
            s.detector.jitter_sigma_high_ps,
            s.detector.jitter_saturation_rate_hz,
            s.detector.dead_time_ns,
            s.detector.digitizer_resolution_ps,
            s.security.epsilon_qkd,
            s.security.epsilon_cor,
            s.security.f_ir,
            s.security.block_size_n,
        )
    }

    /// FNV-1a hash of the canonical serialization, printed as 16 hex digits
    /// in result rows.
    pub fn params_hash(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        for b in self.canonical_string().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
        h
    }
}

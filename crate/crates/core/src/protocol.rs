//! Transmitter-side protocol model: logical symbols and their mapping onto a
//! physical pulse train.
//!
//! A logical symbol occupies two time-bin slots. Bit 0 puts the pulse in the
//! first slot, bit 1 in the second, and a decoy fills both. Nominally empty
//! slots are not perfectly dark: the finite extinction ratio leaves a small
//! leakage intensity, which is what produces the time-basis error floor.

use crate::error::{Error, Result};
use crate::rng::{splitmix64_at, u64_to_unit_f64};
use serde::{Deserialize, Serialize};

/// One logical symbol of the time-bin alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CowSymbol {
    /// Pulse in the first slot, second nominally empty.
    Bit0,
    /// First slot nominally empty, pulse in the second.
    Bit1,
    /// Both slots carry a pulse; used for coherence monitoring.
    Decoy,
}

impl CowSymbol {
    /// Slot occupancy (first, second) implied by the symbol.
    #[inline]
    pub fn occupancy(self) -> (bool, bool) {
        match self {
            CowSymbol::Bit0 => (true, false),
            CowSymbol::Bit1 => (false, true),
            CowSymbol::Decoy => (true, true),
        }
    }

    /// Whether the given half-slot (0 or 1) of this symbol carries a pulse.
    #[inline]
    pub fn occupies(self, half: u64) -> bool {
        let (a, b) = self.occupancy();
        if half & 1 == 0 {
            a
        } else {
            b
        }
    }

    /// True for `Decoy`.
    #[inline]
    pub fn is_decoy(self) -> bool {
        matches!(self, CowSymbol::Decoy)
    }
}

/// Source of symbols indexable by position.
///
/// Implemented both by materialized [`SymbolSequence`]s and by lazy views
/// (counter-mode streams, repeated frames) so that sifting and timeline
/// evaluation never require the full sequence in memory.
pub trait SymbolLookup: Sync {
    /// Number of symbols in the window.
    fn n_symbols(&self) -> u64;
    /// Symbol at `index`; callers must keep `index < n_symbols()`.
    fn symbol_at(&self, index: u64) -> CowSymbol;
    /// Occupancy of a slot in the doubled slot index space.
    #[inline]
    fn slot_occupied(&self, slot: u64) -> bool {
        self.symbol_at(slot / 2).occupies(slot)
    }
}

/// Draw the symbol at `index` of the deterministic pattern stream.
///
/// The pattern is defined by SplitMix64 in counter mode: symbol k consumes
/// exactly the k-th output of the stream seeded with `seed`, so any symbol
/// is computable in O(1). With probability `decoy_probability` the symbol is
/// a decoy, otherwise bit 0 and bit 1 are equally likely.
#[inline]
pub fn symbol_at(seed: u64, index: u64, decoy_probability: f64) -> CowSymbol {
    let u = u64_to_unit_f64(splitmix64_at(seed, index));
    if u < decoy_probability {
        CowSymbol::Decoy
    } else if u < decoy_probability + (1.0 - decoy_probability) / 2.0 {
        CowSymbol::Bit0
    } else {
        CowSymbol::Bit1
    }
}

/// A materialized transmitter pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSequence {
    /// The symbols, in transmission order.
    pub symbols: Vec<CowSymbol>,
    /// Seed the pattern was generated from.
    pub seed: u64,
    /// Decoy probability used during generation.
    pub decoy_probability: f64,
}

impl SymbolLookup for SymbolSequence {
    fn n_symbols(&self) -> u64 {
        self.symbols.len() as u64
    }
    fn symbol_at(&self, index: u64) -> CowSymbol {
        self.symbols[index as usize]
    }
}

/// Lazy unbounded pattern stream; equals `generate_pattern` element-wise.
#[derive(Debug, Clone, Copy)]
pub struct PatternStream {
    /// Pattern seed.
    pub seed: u64,
    /// Decoy probability.
    pub decoy_probability: f64,
    /// Window length in symbols.
    pub n_symbols: u64,
}

impl SymbolLookup for PatternStream {
    fn n_symbols(&self) -> u64 {
        self.n_symbols
    }
    #[inline]
    fn symbol_at(&self, index: u64) -> CowSymbol {
        symbol_at(self.seed, index, self.decoy_probability)
    }
}

/// A short frame repeated end to end, as used for trace acquisition.
#[derive(Debug, Clone)]
pub struct FramePattern {
    /// The repeated frame.
    pub frame: SymbolSequence,
    /// Total window length in symbols (across repetitions).
    pub n_symbols: u64,
}

impl SymbolLookup for FramePattern {
    fn n_symbols(&self) -> u64 {
        self.n_symbols
    }
    #[inline]
    fn symbol_at(&self, index: u64) -> CowSymbol {
        self.frame.symbols[(index % self.frame.symbols.len() as u64) as usize]
    }
}

/// Generate a reproducible pattern of `length` symbols.
///
/// Deterministic in `(seed, length, decoy_probability)`; the content agrees
/// with [`PatternStream`] element by element.
pub fn generate_pattern(seed: u64, length: u64, decoy_probability: f64) -> Result<SymbolSequence> {
    if !(0.0..=1.0).contains(&decoy_probability) {
        return Err(Error::InvalidParameter {
            name: "decoy_probability",
            value: decoy_probability,
            constraint: "must lie in [0, 1]",
        });
    }
    if length == 0 {
        return Err(Error::InvalidParameter {
            name: "length",
            value: 0.0,
            constraint: "must be at least 1",
        });
    }
    let symbols = (0..length)
        .map(|k| symbol_at(seed, k, decoy_probability))
        .collect();
    Ok(SymbolSequence {
        symbols,
        seed,
        decoy_probability,
    })
}

/// Transmitter parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SourceParams {
    /// Mean photon number per non-empty pulse.
    pub mu: f64,
    /// Intensity extinction ratio between full and empty slots, dB.
    /// `f64::INFINITY` models an ideal source.
    pub extinction_ratio_db: f64,
    /// Slot rate in Hz (two slots per logical symbol).
    pub clock_rate_hz: f64,
    /// Interference visibility of the source itself, in [0, 1].
    pub source_visibility: f64,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self {
            mu: 0.1,
            extinction_ratio_db: 29.4,
            clock_rate_hz: 2e9,
            // Calibrated against the reference key rates; see README.
            source_visibility: 0.9583,
        }
    }
}

impl SourceParams {
    /// Validate all fields.
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: self.mu,
                constraint: "must be positive and finite",
            });
        }
        if !(self.extinction_ratio_db > 0.0) {
            return Err(Error::InvalidParameter {
                name: "extinction_ratio_db",
                value: self.extinction_ratio_db,
                constraint: "must be positive",
            });
        }
        if !(self.clock_rate_hz > 0.0) || !self.clock_rate_hz.is_finite() {
            return Err(Error::InvalidParameter {
                name: "clock_rate_hz",
                value: self.clock_rate_hz,
                constraint: "must be positive and finite",
            });
        }
        if !(0.0..=1.0).contains(&self.source_visibility) {
            return Err(Error::InvalidParameter {
                name: "source_visibility",
                value: self.source_visibility,
                constraint: "must lie in [0, 1]",
            });
        }
        Ok(())
    }

    /// Linear intensity fraction leaking into nominally empty slots.
    #[inline]
    pub fn leak_fraction(&self) -> f64 {
        if self.extinction_ratio_db.is_infinite() {
            0.0
        } else {
            10f64.powf(-self.extinction_ratio_db / 10.0)
        }
    }

    /// Leakage intensity of an empty slot.
    #[inline]
    pub fn mu_leak(&self) -> f64 {
        self.mu * self.leak_fraction()
    }

    /// Slot period in picoseconds.
    #[inline]
    pub fn slot_period_ps(&self) -> f64 {
        1e12 / self.clock_rate_hz
    }

    /// Logical symbol rate (half the slot rate).
    #[inline]
    pub fn symbol_rate_hz(&self) -> f64 {
        self.clock_rate_hz / 2.0
    }
}

/// Physical pulse train: one mean photon number per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain {
    /// Mean photon number per slot, two slots per symbol.
    pub slot_intensities: Vec<f64>,
    /// Nominal occupancy per slot (true = carries a pulse). Kept alongside
    /// the intensities so downstream interference logic does not have to
    /// infer occupancy from attenuated intensity values.
    pub occupancy: Vec<bool>,
    /// All pulses share one optical phase.
    pub phase_coherent: bool,
}

impl PulseTrain {
    /// Number of slots.
    pub fn n_slots(&self) -> usize {
        self.slot_intensities.len()
    }

    /// Total emitted mean photon number.
    pub fn total_intensity(&self) -> f64 {
        self.slot_intensities.iter().sum()
    }
}

/// Map a symbol sequence onto slot intensities.
///
/// Bit 0 -> (mu, mu_leak), bit 1 -> (mu_leak, mu), decoy -> (mu, mu).
pub fn encode_pulse_train(seq: &SymbolSequence, src: &SourceParams) -> Result<PulseTrain> {
    src.validate()?;
    let mu = src.mu;
    let leak = src.mu_leak();
    let mut slot_intensities = Vec::with_capacity(seq.symbols.len() * 2);
    let mut occupancy = Vec::with_capacity(seq.symbols.len() * 2);
    for sym in &seq.symbols {
        let (a, b) = sym.occupancy();
        slot_intensities.push(if a { mu } else { leak });
        slot_intensities.push(if b { mu } else { leak });
        occupancy.push(a);
        occupancy.push(b);
    }
    Ok(PulseTrain {
        slot_intensities,
        occupancy,
        phase_coherent: true,
    })
}

/// Fraction of slots carrying a pulse for a given decoy probability:
/// (1 + p) / 2.
#[inline]
pub fn expected_occupancy(decoy_probability: f64) -> f64 {
    (1.0 + decoy_probability) / 2.0
}

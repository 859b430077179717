//! Slot-intensity views of the optical timeline.
//!
//! The detection sampler only needs three things from a timeline: its
//! length, a per-slot mean photon number, and an upper bound on that
//! intensity. Materialized slot vectors and lazy pattern-backed views both
//! implement [`SlotIntensitySource`], which is what lets multi-gigaslot
//! sessions run without materializing anything.

use super::UmziPort;
use crate::protocol::SymbolLookup;

/// Anything that can serve per-slot mean photon numbers.
pub trait SlotIntensitySource: Sync {
    /// Number of slots in the window.
    fn n_slots(&self) -> u64;
    /// Mean photon number of `slot`.
    fn intensity(&self, slot: u64) -> f64;
    /// Upper bound on `intensity` over all slots (used for thinning).
    fn max_intensity(&self) -> f64;
}

impl SlotIntensitySource for [f64] {
    fn n_slots(&self) -> u64 {
        self.len() as u64
    }
    #[inline]
    fn intensity(&self, slot: u64) -> f64 {
        self[slot as usize]
    }
    fn max_intensity(&self) -> f64 {
        self.iter().cloned().fold(0.0, f64::max)
    }
}

impl SlotIntensitySource for Vec<f64> {
    fn n_slots(&self) -> u64 {
        self.len() as u64
    }
    #[inline]
    fn intensity(&self, slot: u64) -> f64 {
        self[slot as usize]
    }
    fn max_intensity(&self) -> f64 {
        self.iter().cloned().fold(0.0, f64::max)
    }
}

/// Lazy key-line (SPD1-path) timeline over a symbol pattern.
///
/// Every occupied slot carries `intensity_occupied`, every empty slot the
/// extinction leakage.
#[derive(Debug, Clone, Copy)]
pub struct KeyLineTimeline<'a, L: SymbolLookup + ?Sized> {
    pattern: &'a L,
    intensity_occupied: f64,
    intensity_leak: f64,
}

impl<'a, L: SymbolLookup + ?Sized> KeyLineTimeline<'a, L> {
    /// View `pattern` with the given occupied/leak intensities (already
    /// scaled by channel transmission and splitter share).
    pub fn new(pattern: &'a L, intensity_occupied: f64, intensity_leak: f64) -> Self {
        Self {
            pattern,
            intensity_occupied,
            intensity_leak,
        }
    }
}

impl<'a, L: SymbolLookup + ?Sized> SlotIntensitySource for KeyLineTimeline<'a, L> {
    fn n_slots(&self) -> u64 {
        2 * self.pattern.n_symbols()
    }
    #[inline]
    fn intensity(&self, slot: u64) -> f64 {
        if self.pattern.slot_occupied(slot) {
            self.intensity_occupied
        } else {
            self.intensity_leak
        }
    }
    fn max_intensity(&self) -> f64 {
        self.intensity_occupied.max(self.intensity_leak)
    }
}

/// Per-pair-class output intensities of one interferometer port.
///
/// The interference cross term applies only between two occupied slots;
/// leakage light is treated as phase-incoherent background and contributes
/// intensity without a cross term. Slots folding with vacuum (window edges)
/// get half-pair contributions.
#[derive(Debug, Clone, Copy)]
pub struct MonitorClasses {
    /// Both contributing slots occupied: the interfering class.
    pub both_occupied: f64,
    /// Exactly one contributor occupied: the non-interfering side peak.
    pub one_occupied: f64,
    /// Both contributors nominally empty.
    pub neither: f64,
    /// Occupied slot folding with vacuum at a window edge.
    pub edge_occupied: f64,
    /// Empty slot folding with vacuum at a window edge.
    pub edge_leak: f64,
}

impl MonitorClasses {
    /// Build the class table for one port.
    ///
    /// `intensity_occupied` is the occupied-slot mean photon number at the
    /// interferometer input (after channel and tap); `leak_fraction` the
    /// extinction leakage; `visibility` and `cos_delta` the effective
    /// interference contrast and phase alignment (`cos_delta` = 1 at the
    /// default heater setting); `loss_factor` the interferometer insertion
    /// loss as a linear factor.
    pub fn new(
        intensity_occupied: f64,
        leak_fraction: f64,
        visibility: f64,
        cos_delta: f64,
        loss_factor: f64,
        port: UmziPort,
    ) -> Self {
        let m = intensity_occupied;
        let l = m * leak_fraction;
        let sign = match port {
            UmziPort::Destructive => -1.0,
            UmziPort::Constructive => 1.0,
        };
        let cross = 2.0 * visibility * cos_delta * m;
        Self {
            both_occupied: loss_factor * (2.0 * m + sign * cross) / 4.0,
            one_occupied: loss_factor * (m + l) / 4.0,
            neither: loss_factor * (2.0 * l) / 4.0,
            edge_occupied: loss_factor * m / 4.0,
            edge_leak: loss_factor * l / 4.0,
        }
    }

    /// Largest class intensity.
    pub fn max_intensity(&self) -> f64 {
        self.both_occupied
            .max(self.one_occupied)
            .max(self.neither)
            .max(self.edge_occupied)
            .max(self.edge_leak)
    }
}

/// Which pair class an output slot belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    /// Both contributors occupied (interfering overlap slot).
    BothOccupied,
    /// Exactly one contributor occupied (side peak).
    OneOccupied,
    /// No occupied contributor.
    Neither,
    /// Edge slot: occupied pulse folding with vacuum.
    EdgeOccupied,
    /// Edge slot: leakage folding with vacuum.
    EdgeLeak,
}

/// Classify output slot `t` of a delay-line interferometer over `pattern`.
///
/// Output slot `t` receives the short-arm copy of input slot `t` and the
/// long-arm copy of input slot `t - delay`; inputs outside the window are
/// vacuum.
#[inline]
pub fn classify_pair<L: SymbolLookup + ?Sized>(pattern: &L, t: u64, delay: u64) -> PairClass {
    let n_in = 2 * pattern.n_symbols();
    let short = if t < n_in {
        Some(pattern.slot_occupied(t))
    } else {
        None
    };
    let long = if t >= delay && t - delay < n_in {
        Some(pattern.slot_occupied(t - delay))
    } else {
        None
    };
    match (long, short) {
        (Some(true), Some(true)) => PairClass::BothOccupied,
        (Some(true), Some(false)) | (Some(false), Some(true)) => PairClass::OneOccupied,
        (Some(false), Some(false)) => PairClass::Neither,
        (Some(true), None) | (None, Some(true)) => PairClass::EdgeOccupied,
        (Some(false), None) | (None, Some(false)) => PairClass::EdgeLeak,
        (None, None) => PairClass::Neither,
    }
}

/// Lazy interferometer-port timeline over a symbol pattern.
#[derive(Debug, Clone, Copy)]
pub struct MonitorPortTimeline<'a, L: SymbolLookup + ?Sized> {
    pattern: &'a L,
    classes: MonitorClasses,
    delay: u64,
}

impl<'a, L: SymbolLookup + ?Sized> MonitorPortTimeline<'a, L> {
    /// View the port output implied by `pattern` and a class table.
    pub fn new(pattern: &'a L, classes: MonitorClasses, delay: u64) -> Self {
        Self {
            pattern,
            classes,
            delay,
        }
    }
}

impl<'a, L: SymbolLookup + ?Sized> SlotIntensitySource for MonitorPortTimeline<'a, L> {
    fn n_slots(&self) -> u64 {
        2 * self.pattern.n_symbols() + self.delay
    }
    #[inline]
    fn intensity(&self, slot: u64) -> f64 {
        match classify_pair(self.pattern, slot, self.delay) {
            PairClass::BothOccupied => self.classes.both_occupied,
            PairClass::OneOccupied => self.classes.one_occupied,
            PairClass::Neither => self.classes.neither,
            PairClass::EdgeOccupied => self.classes.edge_occupied,
            PairClass::EdgeLeak => self.classes.edge_leak,
        }
    }
    fn max_intensity(&self) -> f64 {
        self.classes.max_intensity()
    }
}

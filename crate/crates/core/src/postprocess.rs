//! Sifting and estimation on raw detection records.
//!
//! Sifting decodes SPD1 arrival slots against the transmitted record,
//! discards decoy symbols, and tallies time-basis errors. The monitor line
//! classifies SPD2 clicks into interfering (overlap) and non-interfering
//! (side) slots and estimates the interference visibility from their per-
//! slot means: side peaks carry a quarter of a pulse each, so four times
//! the side mean is the per-pulse reference the destructive dip is compared
//! against.

use crate::error::{Error, Result};
use crate::optics::{classify_pair, DetectionRecordSet, PairClass, ReceiverParams};
use crate::protocol::{SymbolLookup, SymbolSequence};
use crate::rng::splitmix64_at;
use serde::{Deserialize, Serialize};

/// Additive statistics of one (partial) session.
///
/// All count fields merge by addition; derived quantities (QBER,
/// visibility, duration) are recomputed from the merged counts, which makes
/// merging associative and commutative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    /// Sifted time-basis bits.
    pub n_sifted: u64,
    /// Errors among the sifted bits.
    pub n_errors: u64,
    /// Total SPD1 clicks processed (including decoy-symbol clicks).
    pub n_spd1_events: u64,
    /// SPD1 clicks landing in decoy symbols (announced and discarded).
    pub n_decoy_clicks: u64,
    /// Events rejected as outside the encoded window.
    pub n_rejected: u64,
    /// Events dropped by the sifting discrimination window.
    pub n_window_filtered: u64,
    /// SPD2 clicks in interfering (both-contributors-occupied) slots.
    pub monitor_overlap_counts: u64,
    /// SPD2 clicks in one-contributor side slots.
    pub monitor_side_counts: u64,
    /// Interferometer output slots covered by the monitor records.
    pub monitor_window_slots: u64,
    /// Fraction of monitor output slots that interfere (config constant;
    /// must agree across merged partials).
    pub f_overlap: f64,
    /// Fraction of monitor output slots that are side peaks.
    pub f_side: f64,
    /// Elapsed transmitter slots.
    pub elapsed_slots: u64,
    /// Slot rate, Hz (must agree across merged partials).
    pub clock_rate_hz: f64,
    /// Extinction leakage fraction (estimator correction; must agree across
    /// merged partials).
    pub leak_fraction: f64,
}

impl SessionStats {
    /// Empty statistics for a given system.
    pub fn empty(clock_rate_hz: f64, leak_fraction: f64) -> Self {
        Self {
            n_sifted: 0,
            n_errors: 0,
            n_spd1_events: 0,
            n_decoy_clicks: 0,
            n_rejected: 0,
            n_window_filtered: 0,
            monitor_overlap_counts: 0,
            monitor_side_counts: 0,
            monitor_window_slots: 0,
            f_overlap: 0.0,
            f_side: 0.0,
            elapsed_slots: 0,
            clock_rate_hz,
            leak_fraction,
        }
    }

    /// QBER of the sifted key (0 when nothing was sifted).
    pub fn qber(&self) -> f64 {
        if self.n_sifted == 0 {
            0.0
        } else {
            self.n_errors as f64 / self.n_sifted as f64
        }
    }

    /// Acquisition duration in seconds.
    pub fn duration_s(&self) -> f64 {
        self.elapsed_slots as f64 / self.clock_rate_hz
    }

    /// Expected number of interfering monitor slots in the window.
    pub fn n_overlap_slots(&self) -> f64 {
        self.monitor_window_slots as f64 * self.f_overlap
    }

    /// Expected number of side monitor slots in the window.
    pub fn n_side_slots(&self) -> f64 {
        self.monitor_window_slots as f64 * self.f_side
    }

    /// Visibility estimate from the accumulated monitor counts.
    pub fn visibility_est(&self) -> Result<f64> {
        visibility_from_counts(
            self.monitor_overlap_counts as f64,
            self.n_overlap_slots(),
            self.monitor_side_counts as f64,
            self.n_side_slots(),
            self.leak_fraction,
        )
    }

    /// Merge two partials (field-wise addition; associative, commutative).
    pub fn merge(&self, other: &SessionStats) -> SessionStats {
        debug_assert!((self.clock_rate_hz - other.clock_rate_hz).abs() < 1e-6);
        // class fractions are config constants; adopt them from whichever
        // side has monitor coverage
        let (f_overlap, f_side) = if self.monitor_window_slots == 0 {
            (other.f_overlap, other.f_side)
        } else {
            debug_assert!(
                other.monitor_window_slots == 0 || (self.f_overlap - other.f_overlap).abs() < 1e-12
            );
            (self.f_overlap, self.f_side)
        };
        SessionStats {
            n_sifted: self.n_sifted + other.n_sifted,
            n_errors: self.n_errors + other.n_errors,
            n_spd1_events: self.n_spd1_events + other.n_spd1_events,
            n_decoy_clicks: self.n_decoy_clicks + other.n_decoy_clicks,
            n_rejected: self.n_rejected + other.n_rejected,
            n_window_filtered: self.n_window_filtered + other.n_window_filtered,
            monitor_overlap_counts: self.monitor_overlap_counts + other.monitor_overlap_counts,
            monitor_side_counts: self.monitor_side_counts + other.monitor_side_counts,
            monitor_window_slots: self.monitor_window_slots + other.monitor_window_slots,
            f_overlap,
            f_side,
            elapsed_slots: self.elapsed_slots + other.elapsed_slots,
            clock_rate_hz: self.clock_rate_hz,
            leak_fraction: self.leak_fraction,
        }
    }

    /// Serializable record with derived fields included.
    pub fn to_record(&self) -> SessionRecord {
        SessionRecord {
            n_sifted: self.n_sifted,
            n_errors: self.n_errors,
            qber: self.qber(),
            visibility_est: self.visibility_est().ok(),
            monitor_overlap_counts: self.monitor_overlap_counts,
            monitor_side_counts: self.monitor_side_counts,
            elapsed_slots: self.elapsed_slots,
            duration_s: self.duration_s(),
        }
    }
}

/// JSON-facing summary of a session.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SessionRecord {
    /// Sifted time-basis bits.
    pub n_sifted: u64,
    /// Errors among them.
    pub n_errors: u64,
    /// n_errors / n_sifted.
    pub qber: f64,
    /// Visibility estimate, if the monitor line had statistics.
    pub visibility_est: Option<f64>,
    /// Clicks in interfering monitor slots.
    pub monitor_overlap_counts: u64,
    /// Clicks in side monitor slots.
    pub monitor_side_counts: u64,
    /// Elapsed transmitter slots.
    pub elapsed_slots: u64,
    /// Acquisition duration, s.
    pub duration_s: f64,
}

/// Sift SPD1 records against the transmitted pattern.
///
/// Decoy-symbol clicks are discarded; a click in an even slot decodes to
/// bit 0, odd to bit 1; a double click within one symbol contributes one
/// deterministic pseudo-random bit (and counts once). `tie_seed` fixes
/// those tie-break bits.
///
/// Returns the sifted bits and the partial statistics. `elapsed_slots` is
/// set to the record's window; monitor fields remain zero.
pub fn sift<L: SymbolLookup + ?Sized>(
    alice: &L,
    spd1: &DetectionRecordSet,
    leak_fraction: f64,
    tie_seed: u64,
) -> (Vec<bool>, SessionStats) {
    let mut bits = Vec::new();
    let stats = sift_core(alice, spd1, leak_fraction, tie_seed, 0.0, |b| bits.push(b));
    (bits, stats)
}

/// [`sift`] with a discrimination window: clicks whose digitized bin center
/// lies further than `window_ps / 2` from the slot center are ignored
/// (window_ps = 0 accepts the full slot).
pub fn sift_windowed<L: SymbolLookup + ?Sized>(
    alice: &L,
    spd1: &DetectionRecordSet,
    leak_fraction: f64,
    tie_seed: u64,
    window_ps: f64,
) -> (Vec<bool>, SessionStats) {
    let mut bits = Vec::new();
    let stats = sift_core(alice, spd1, leak_fraction, tie_seed, window_ps, |b| {
        bits.push(b)
    });
    (bits, stats)
}

/// Like [`sift`] but without materializing the key bits; used for long
/// accumulation runs where only the statistics matter.
pub fn sift_stats<L: SymbolLookup + ?Sized>(
    alice: &L,
    spd1: &DetectionRecordSet,
    leak_fraction: f64,
    tie_seed: u64,
    window_ps: f64,
) -> SessionStats {
    sift_core(alice, spd1, leak_fraction, tie_seed, window_ps, |_| {})
}

fn sift_core<L: SymbolLookup + ?Sized>(
    alice: &L,
    spd1: &DetectionRecordSet,
    leak_fraction: f64,
    tie_seed: u64,
    window_ps: f64,
    mut on_bit: impl FnMut(bool),
) -> SessionStats {
    let clock = 1e12 / spd1.slot_period_ps;
    let mut stats = SessionStats::empty(clock, leak_fraction);
    stats.elapsed_slots = spd1.n_slots;
    stats.n_rejected = spd1.out_of_window;
    stats.n_spd1_events = spd1.events.len() as u64;
    let n_symbols = alice.n_symbols();

    // digitized bin centers further than w/2 from the slot center are
    // outside the discrimination window
    let half_slot = spd1.slot_period_ps / 2.0;
    let half_bin = spd1.digitizer_resolution_ps / 2.0;
    let in_window = |sub_ps: u32| -> bool {
        if window_ps <= 0.0 || window_ps >= spd1.slot_period_ps {
            return true;
        }
        let center = sub_ps as f64 + half_bin;
        (center - half_slot).abs() <= window_ps / 2.0
    };

    let events: Vec<&crate::optics::DetectionEvent> = if window_ps > 0.0 {
        let kept: Vec<_> = spd1
            .events
            .iter()
            .filter(|e| in_window(e.sub_slot_time_ps))
            .collect();
        stats.n_window_filtered = (spd1.events.len() - kept.len()) as u64;
        kept
    } else {
        spd1.events.iter().collect()
    };

    let mut i = 0usize;
    while i < events.len() {
        let symbol = events[i].slot_index / 2;
        let mut n_in_symbol = 1usize;
        while i + n_in_symbol < events.len() && events[i + n_in_symbol].slot_index / 2 == symbol {
            n_in_symbol += 1;
        }
        if symbol >= n_symbols {
            stats.n_rejected += n_in_symbol as u64;
            i += n_in_symbol;
            continue;
        }
        let sym = alice.symbol_at(symbol);
        if sym.is_decoy() {
            stats.n_decoy_clicks += n_in_symbol as u64;
            i += n_in_symbol;
            continue;
        }
        let bit = if n_in_symbol == 1 {
            events[i].slot_index & 1 == 1
        } else {
            // both slots clicked: one random bit, counted once
            splitmix64_at(tie_seed, symbol) & 1 == 1
        };
        let alice_bit = matches!(sym, crate::protocol::CowSymbol::Bit1);
        stats.n_sifted += 1;
        if bit != alice_bit {
            stats.n_errors += 1;
        }
        on_bit(bit);
        i += n_in_symbol;
    }
    stats
}

/// Interference fringe visibility (I_max - I_min) / (I_max + I_min).
pub fn fringe_visibility(i_max: f64, i_min: f64) -> Result<f64> {
    if !(i_max >= 0.0) || !(i_min >= 0.0) {
        return Err(Error::Domain {
            context: "fringe_visibility",
            detail: format!("intensities must be non-negative, got ({i_max}, {i_min})"),
        });
    }
    if i_max == 0.0 && i_min == 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    Ok((i_max - i_min) / (i_max + i_min))
}

/// The visibility estimator on (possibly real-valued expected) counts.
///
/// `c_overlap`/`c_side` are total counts over `n_overlap`/`n_side` slots.
/// Four times the per-slot side mean, corrected by the known leakage share
/// (1 + r), is the per-pulse reference intensity; the estimate is
///
/// ```text
/// V = 1 - (1 + r) * mean(overlap) / (2 * mean(side))
/// ```
///
/// clamped to [0, 1]. Applied to expected counts this reproduces the input
/// visibility exactly.
pub fn visibility_from_counts(
    c_overlap: f64,
    n_overlap: f64,
    c_side: f64,
    n_side: f64,
    leak_fraction: f64,
) -> Result<f64> {
    if n_overlap <= 0.0 || n_side <= 0.0 {
        return Err(Error::InsufficientStatistics(
            "no classified monitor slots in the window",
        ));
    }
    if c_side <= 0.0 {
        return Err(Error::InsufficientStatistics(
            "no side-peak counts to normalize against",
        ));
    }
    let overlap_mean = c_overlap / n_overlap;
    let side_mean = c_side / n_side;
    Ok((1.0 - (1.0 + leak_fraction) * overlap_mean / (2.0 * side_mean)).clamp(0.0, 1.0))
}

/// Exact pair-class slot counts for a materialized pattern.
pub fn count_pair_classes<L: SymbolLookup + ?Sized>(alice: &L, delay: u64) -> (u64, u64) {
    let n_out = 2 * alice.n_symbols() + delay;
    let mut overlap = 0u64;
    let mut side = 0u64;
    for t in 0..n_out {
        match classify_pair(alice, t, delay) {
            PairClass::BothOccupied => overlap += 1,
            PairClass::OneOccupied => side += 1,
            _ => {}
        }
    }
    (overlap, side)
}

/// Classify SPD2 clicks into overlap/side counts against the pattern.
pub fn classify_monitor_clicks<L: SymbolLookup + ?Sized>(
    alice: &L,
    spd2: &DetectionRecordSet,
    delay: u64,
) -> (u64, u64) {
    let mut overlap = 0u64;
    let mut side = 0u64;
    for ev in &spd2.events {
        match classify_pair(alice, ev.slot_index, delay) {
            PairClass::BothOccupied => overlap += 1,
            PairClass::OneOccupied => side += 1,
            _ => {}
        }
    }
    (overlap, side)
}

/// Estimate the interference visibility from SPD2 records.
///
/// The transmitted record identifies which destructive-port slots interfere
/// (both contributing slots occupied) and which are single-pulse side
/// peaks.
pub fn estimate_visibility(
    spd2: &DetectionRecordSet,
    alice: &SymbolSequence,
    rx: &ReceiverParams,
    leak_fraction: f64,
) -> Result<f64> {
    let delay = rx.umzi_delay_slots;
    let (c_o, c_s) = classify_monitor_clicks(alice, spd2, delay);
    let (n_o, n_s) = count_pair_classes(alice, delay);
    visibility_from_counts(
        c_o as f64,
        n_o as f64,
        c_s as f64,
        n_s as f64,
        leak_fraction,
    )
}

/// Merge partial statistics until the sifted count reaches `target`.
///
/// Fails with [`Error::PartialBlock`] (carrying the accumulated statistics)
/// if the stream ends first.
pub fn accumulate_until<I>(target: u64, stream: I) -> Result<SessionStats>
where
    I: IntoIterator<Item = SessionStats>,
{
    let mut acc: Option<SessionStats> = None;
    for part in stream {
        acc = Some(match acc {
            None => part,
            Some(a) => a.merge(&part),
        });
        if let Some(a) = &acc {
            if a.n_sifted >= target {
                return Ok(*a);
            }
        }
    }
    let got = acc.as_ref().map(|a| a.n_sifted).unwrap_or(0);
    Err(Error::PartialBlock {
        got,
        target,
        stats: Box::new(acc.unwrap_or_else(|| SessionStats::empty(0.0, 0.0))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{ClickOrigin, DetectionEvent, DetectorChannel};
    use crate::protocol::CowSymbol;

    fn record(events: Vec<(u64, u32)>, n_slots: u64) -> DetectionRecordSet {
        DetectionRecordSet {
            detector: DetectorChannel::Spd1,
            events: events
                .into_iter()
                .map(|(slot, sub)| DetectionEvent {
                    detector: DetectorChannel::Spd1,
                    slot_index: slot,
                    sub_slot_time_ps: sub,
                    origin: ClickOrigin::Signal,
                })
                .collect(),
            n_slots,
            slot_period_ps: 500.0,
            digitizer_resolution_ps: 100.0,
            out_of_window: 0,
        }
    }

    fn alice(symbols: Vec<CowSymbol>) -> SymbolSequence {
        SymbolSequence {
            symbols,
            seed: 0,
            decoy_probability: 0.01,
        }
    }

    #[test]
    fn sift_decodes_and_counts_errors() {
        // Bit0 with click in its first slot: bit 0, no error.
        // Bit1 with click in its first slot: bit 0, error.
        let seq = alice(vec![CowSymbol::Bit0, CowSymbol::Bit1]);
        let rec = record(vec![(0, 200), (2, 200)], 4);
        let (bits, stats) = sift(&seq, &rec, 0.001, 7);
        assert_eq!(bits, vec![false, false]);
        assert_eq!(stats.n_sifted, 2);
        assert_eq!(stats.n_errors, 1);
    }

    #[test]
    fn sift_discards_decoys_and_rejects_out_of_window() {
        let seq = alice(vec![CowSymbol::Decoy, CowSymbol::Bit0]);
        let rec = record(vec![(0, 0), (1, 0), (2, 0), (9, 0)], 10);
        let (bits, stats) = sift(&seq, &rec, 0.001, 7);
        assert_eq!(bits.len(), 1);
        assert_eq!(stats.n_sifted, 1);
        assert_eq!(stats.n_decoy_clicks, 2);
        assert_eq!(stats.n_rejected, 1);
    }

    #[test]
    fn sift_double_click_counts_once() {
        let seq = alice(vec![CowSymbol::Bit0]);
        let rec = record(vec![(0, 100), (1, 100)], 2);
        let (bits, stats) = sift(&seq, &rec, 0.001, 7);
        assert_eq!(bits.len(), 1);
        assert_eq!(stats.n_sifted, 1);
        // the tie-break bit is deterministic in (tie_seed, symbol index)
        let (bits2, _) = sift(&seq, &rec, 0.001, 7);
        assert_eq!(bits, bits2);
    }

    #[test]
    fn sift_double_click_errors_half_the_time() {
        let seq = alice(vec![CowSymbol::Bit0; 10_000]);
        let events: Vec<(u64, u32)> = (0..10_000u64)
            .flat_map(|s| [(2 * s, 0), (2 * s + 1, 0)])
            .collect();
        let rec = record(events, 20_000);
        let (_, stats) = sift(&seq, &rec, 0.001, 99);
        assert_eq!(stats.n_sifted, 10_000);
        let sigma = (10_000f64 * 0.25).sqrt();
        assert!(
            (stats.n_errors as f64 - 5000.0).abs() < 5.0 * sigma,
            "tie-break errors {}",
            stats.n_errors
        );
    }

    #[test]
    fn ideal_run_has_zero_qber() {
        // ER -> inf, no dark, no jitter: every click decodes correctly
        use crate::optics::{route_and_detect, ChannelParams, DetectorParams, ReceiverParams};
        use crate::protocol::{encode_pulse_train, generate_pattern, SourceParams};
        let seq = generate_pattern(77, 300_000, 0.01).unwrap();
        let src = SourceParams {
            extinction_ratio_db: f64::INFINITY,
            ..SourceParams::default()
        };
        let det = DetectorParams {
            dark_count_rate_hz: 0.0,
            jitter_sigma_low_ps: 0.0,
            jitter_sigma_high_ps: 0.0,
            ..DetectorParams::default()
        };
        let train = encode_pulse_train(&seq, &src).unwrap();
        let (spd1, _) = route_and_detect(
            &train,
            &ChannelParams::new(5.0),
            &ReceiverParams::default(),
            &det,
            1.0,
            src.clock_rate_hz,
            3,
        )
        .unwrap();
        let (_, stats) = sift(&seq, &spd1, 0.0, 1);
        assert!(stats.n_sifted > 1000);
        assert_eq!(stats.n_errors, 0);
    }

    #[test]
    fn fringe_visibility_cases() {
        assert_eq!(fringe_visibility(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(fringe_visibility(0.3, 0.3).unwrap(), 0.0);
        let v = fringe_visibility(0.9989, 0.0011).unwrap();
        assert!((v - 0.9978).abs() < 1e-15);
        assert!(matches!(
            fringe_visibility(0.0, 0.0),
            Err(Error::UndefinedVisibility)
        ));
        assert!(fringe_visibility(-1.0, 0.0).is_err());
    }

    #[test]
    fn estimator_perfect_and_null_cases() {
        // no overlap counts -> V = 1
        assert_eq!(
            visibility_from_counts(0.0, 100.0, 500.0, 1000.0, 0.0).unwrap(),
            1.0
        );
        // overlap mean = 2x side mean -> V = 0 (the V=0 intensity pattern)
        assert_eq!(
            visibility_from_counts(200.0, 100.0, 1000.0, 1000.0, 0.0).unwrap(),
            0.0
        );
        assert!(visibility_from_counts(1.0, 10.0, 0.0, 10.0, 0.0).is_err());
    }

    #[test]
    fn estimator_roundtrip_on_expected_counts() {
        // feeding the estimator the intensity model's own expectations must
        // return the generating visibility to 1e-12
        use crate::optics::{MonitorClasses, UmziPort};
        for &r in &[0.0, 1.1481536214968828e-3] {
            for &v in &[0.0, 0.25, 0.5, 0.9, 0.9583, 0.98, 1.0] {
                let c = MonitorClasses::new(0.01, r, v, 1.0, 0.5, UmziPort::Destructive);
                let n_o = 132.0;
                let n_s = 745.0;
                let got = visibility_from_counts(
                    c.both_occupied * n_o,
                    n_o,
                    c.one_occupied * n_s,
                    n_s,
                    r,
                )
                .unwrap();
                assert!((got - v).abs() < 1e-12, "v={v} r={r} got={got}");
            }
        }
    }

    #[test]
    fn estimate_visibility_classifies_against_record() {
        use crate::optics::ReceiverParams;
        // Bit1 Bit0 -> output slots: 1 side, 2 overlap, 3 side
        let seq = alice(vec![CowSymbol::Bit1, CowSymbol::Bit0]);
        let rx = ReceiverParams::default();
        // all counts in side slots, none in the overlap: V = 1
        let mut spd2 = record(vec![(1, 0), (3, 0)], 5);
        spd2.detector = DetectorChannel::Spd2;
        let v = estimate_visibility(&spd2, &seq, &rx, 0.0).unwrap();
        assert_eq!(v, 1.0);
        // one overlap count against eight side counts over (1 overlap, 2
        // side) slots: V = 1 - (1/1) / (2 * (8/2)) = 0.875
        let mut events = vec![(2u64, 0u32)];
        events.extend(vec![(1u64, 0u32); 4]);
        events.extend(vec![(3u64, 0u32); 4]);
        events.sort();
        let mut spd2 = record(events, 5);
        spd2.detector = DetectorChannel::Spd2;
        let v = estimate_visibility(&spd2, &seq, &rx, 0.0).unwrap();
        assert!((v - 0.875).abs() < 1e-12, "v = {v}");
        // no side counts: insufficient statistics
        let mut spd2 = record(vec![(2, 0)], 5);
        spd2.detector = DetectorChannel::Spd2;
        assert!(estimate_visibility(&spd2, &seq, &rx, 0.0).is_err());
    }

    #[test]
    fn discrimination_window_filters_edge_bins() {
        let seq = alice(vec![CowSymbol::Bit0; 8]);
        // clicks in bins 0 and 400 sit at the slot edges; bin 200 is central
        let rec = record(vec![(0, 0), (2, 200), (4, 400)], 16);
        let (bits, stats) = sift_windowed(&seq, &rec, 0.0, 1, 300.0);
        assert_eq!(bits.len(), 1);
        assert_eq!(stats.n_sifted, 1);
        assert_eq!(stats.n_window_filtered, 2);
        // window off accepts everything
        let (bits, stats) = sift_windowed(&seq, &rec, 0.0, 1, 0.0);
        assert_eq!(bits.len(), 3);
        assert_eq!(stats.n_window_filtered, 0);
    }

    #[test]
    fn accumulate_until_reaches_target() {
        let mk = |n: u64, e: u64| {
            let mut s = SessionStats::empty(2e9, 0.001);
            s.n_sifted = n;
            s.n_errors = e;
            s.elapsed_slots = 10 * n;
            s
        };
        let total = accumulate_until(8, vec![mk(3, 1), mk(5, 0), mk(100, 0)]).unwrap();
        assert_eq!(total.n_sifted, 8);
        assert_eq!(total.n_errors, 1);
        assert_eq!(total.elapsed_slots, 80);

        match accumulate_until(1000, vec![mk(3, 1), mk(5, 0)]) {
            Err(Error::PartialBlock { got, target, stats }) => {
                assert_eq!(got, 8);
                assert_eq!(target, 1000);
                assert_eq!(stats.n_errors, 1);
            }
            other => panic!("expected partial block, got {other:?}"),
        }
    }

    #[test]
    fn merge_is_commutative_and_associative() {
        let mk = |n: u64, e: u64, o: u64, s: u64| {
            let mut st = SessionStats::empty(2e9, 0.001);
            st.n_sifted = n;
            st.n_errors = e;
            st.monitor_overlap_counts = o;
            st.monitor_side_counts = s;
            st.monitor_window_slots = (o + s) * 10;
            st.f_overlap = 0.1325;
            st.f_side = 0.745;
            st.elapsed_slots = n * 7;
            st
        };
        let (a, b, c) = (mk(3, 1, 2, 20), mk(5, 0, 1, 17), mk(11, 2, 0, 4));
        assert_eq!(a.merge(&b), b.merge(&a));
        assert_eq!(a.merge(&b).merge(&c), a.merge(&b.merge(&c)));
    }

    #[test]
    fn sifted_never_exceeds_events() {
        let seq = alice(vec![CowSymbol::Bit0; 100]);
        let rec = record((0..150u64).map(|i| (i, 0)).collect(), 200);
        let (_, stats) = sift(&seq, &rec, 0.001, 1);
        assert!(stats.n_sifted <= 150);
        assert!(stats.n_errors <= stats.n_sifted);
    }
}

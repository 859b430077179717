//! End-to-end Monte Carlo sessions.
//!
//! A session streams the transmitter pattern lazily, samples both detectors
//! chunk by chunk (chunks are whole sampler blocks, so chunking never
//! changes the drawn events), sifts each chunk, and accumulates statistics
//! until a target sifted count is reached. Memory stays proportional to one
//! chunk's clicks regardless of session length.

use crate::analytic::{link_budget, LinkBudget};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::optics::{
    sample_detections_range, DetectionRecordSet, DetectorChannel, KeyLineTimeline,
    MonitorPortTimeline, SlotIntensitySource, BLOCK_SLOTS,
};
use crate::postprocess::{classify_monitor_clicks, sift_stats, SessionStats};
use crate::protocol::{generate_pattern, PatternStream, SymbolLookup, SymbolSequence};
use crate::rng::mix_seed;
use crate::security::{evaluate_block, KeyRateResult};

/// Seed-derivation tags for the independent streams of one session.
const TAG_PATTERN: u64 = 0x501;
const TAG_SPD1: u64 = 0x502;
const TAG_SPD2: u64 = 0x503;
const TAG_CONSTRUCTIVE: u64 = 0x504;
const TAG_TIE: u64 = 0x505;

/// Symbols per chunk-alignment unit (one sampler block of slots).
const BLOCK_SYMBOLS: u64 = BLOCK_SLOTS / 2;

/// Result of a completed Monte Carlo session.
#[derive(Debug, Clone)]
pub struct SessionOutcome {
    /// Accumulated statistics.
    pub stats: SessionStats,
    /// Finite-key evaluation on the accumulated block.
    pub result: KeyRateResult,
}

struct ChunkEngine<'a, L: SymbolLookup + ?Sized> {
    pattern: &'a L,
    budget: LinkBudget,
    cfg: &'a SimConfig,
    seed: u64,
    with_constructive: bool,
}

struct ChunkRecords {
    spd1: DetectionRecordSet,
    spd2: DetectionRecordSet,
    constructive: Option<DetectionRecordSet>,
}

impl<'a, L: SymbolLookup + ?Sized> ChunkEngine<'a, L> {
    fn new(
        pattern: &'a L,
        cfg: &'a SimConfig,
        attenuation_db: f64,
        seed: u64,
        with_constructive: bool,
    ) -> Self {
        Self {
            pattern,
            budget: link_budget(cfg, attenuation_db),
            cfg,
            seed,
            with_constructive,
        }
    }

    /// Simulate detections for symbols [sym_range.start, sym_range.end).
    /// `final_chunk` extends the monitor window by the interferometer delay.
    fn simulate(&self, sym_range: std::ops::Range<u64>, final_chunk: bool) -> ChunkRecords {
        let clock = self.cfg.source.clock_rate_hz;
        let det = &self.cfg.detector;
        let delay = self.cfg.receiver.umzi_delay_slots;
        let b = &self.budget;

        let spd1_line = KeyLineTimeline::new(self.pattern, b.mu_spd1, b.mu_spd1_leak);
        let slot_range = 2 * sym_range.start..2 * sym_range.end;
        let spd1 = sample_detections_range(
            &spd1_line,
            det,
            DetectorChannel::Spd1,
            clock,
            b.spd1_rate_hz,
            mix_seed(self.seed, TAG_SPD1),
            slot_range.clone(),
        );

        let dest_line = MonitorPortTimeline::new(self.pattern, b.classes_dest, delay);
        let dest_range = if final_chunk {
            slot_range.start..dest_line.n_slots()
        } else {
            slot_range.clone()
        };
        let spd2 = sample_detections_range(
            &dest_line,
            det,
            DetectorChannel::Spd2,
            clock,
            b.spd2_rate_hz,
            mix_seed(self.seed, TAG_SPD2),
            dest_range.clone(),
        );

        let constructive = self.with_constructive.then(|| {
            let con_line = MonitorPortTimeline::new(self.pattern, b.classes_con, delay);
            let con_rate = clock
                * (b.f_overlap * det.click_probability(b.classes_con.both_occupied)
                    + b.f_side * det.click_probability(b.classes_con.one_occupied)
                    + b.f_dead * det.click_probability(b.classes_con.neither))
                + det.dark_count_rate_hz;
            sample_detections_range(
                &con_line,
                det,
                DetectorChannel::Constructive,
                clock,
                con_rate,
                mix_seed(self.seed, TAG_CONSTRUCTIVE),
                dest_range,
            )
        });

        ChunkRecords {
            spd1,
            spd2,
            constructive,
        }
    }

    /// Sift and classify one chunk into partial statistics. Monitor slot
    /// counts are filled with their expected values for the streamed
    /// pattern (exact class counting would cost a full pattern scan).
    fn chunk_stats(&self, records: &ChunkRecords) -> SessionStats {
        let leak = self.cfg.source.leak_fraction();
        let mut stats = sift_stats(
            self.pattern,
            &records.spd1,
            leak,
            mix_seed(self.seed, TAG_TIE),
            self.cfg.discrimination_window_ps,
        );
        let delay = self.cfg.receiver.umzi_delay_slots;
        let (c_o, c_s) = classify_monitor_clicks(self.pattern, &records.spd2, delay);
        stats.monitor_overlap_counts = c_o;
        stats.monitor_side_counts = c_s;
        stats.monitor_window_slots = records.spd2.n_slots;
        stats.f_overlap = self.budget.f_overlap;
        stats.f_side = self.budget.f_side;
        stats
    }
}

/// Run a Monte Carlo session until `target_sifted` time-basis counts have
/// been collected, then evaluate the finite-key formula on the block.
///
/// `max_slots` bounds the simulated window; if the target cannot be reached
/// within it, [`Error::PartialBlock`] carries the partial statistics.
/// Deterministic in `(cfg, attenuation_db, seed)` for any worker count.
pub fn run_until_sifted(
    cfg: &SimConfig,
    attenuation_db: f64,
    seed: u64,
    target_sifted: u64,
    max_slots: u64,
) -> Result<SessionOutcome> {
    cfg.validate()?;
    let budget = link_budget(cfg, attenuation_db);
    let sift_per_symbol = budget.sifted_rate_hz / cfg.source.symbol_rate_hz();
    if !(sift_per_symbol > 0.0) {
        return Err(Error::Domain {
            context: "run_until_sifted",
            detail: "expected sifted rate is zero; nothing to accumulate".into(),
        });
    }
    let max_symbols = (max_slots / 2).max(BLOCK_SYMBOLS);

    let pattern = PatternStream {
        seed: mix_seed(seed, TAG_PATTERN),
        decoy_probability: cfg.decoy_probability,
        n_symbols: max_symbols,
    };
    let engine = ChunkEngine::new(&pattern, cfg, attenuation_db, seed, false);

    // cap chunks so per-chunk click buffers stay modest at any attenuation
    let events_per_symbol =
        (budget.spd1_rate_hz + budget.spd2_rate_hz) / cfg.source.symbol_rate_hz();
    let cap_symbols = ((2e6 / events_per_symbol.max(1e-12)) as u64).max(BLOCK_SYMBOLS);

    let leak = cfg.source.leak_fraction();
    let mut acc = SessionStats::empty(cfg.source.clock_rate_hz, leak);
    let mut done_symbols = 0u64;
    while acc.n_sifted < target_sifted && done_symbols < max_symbols {
        let missing = (target_sifted - acc.n_sifted) as f64;
        let est = (missing / sift_per_symbol * 1.05).ceil() as u64;
        let chunk = est
            .min(cap_symbols)
            .div_ceil(BLOCK_SYMBOLS)
            .max(1)
            .saturating_mul(BLOCK_SYMBOLS)
            .min(max_symbols - done_symbols);
        let end = done_symbols + chunk;
        let final_chunk = end == max_symbols;
        let records = engine.simulate(done_symbols..end, final_chunk);
        acc = acc.merge(&engine.chunk_stats(&records));
        done_symbols = end;
    }

    if acc.n_sifted < target_sifted {
        return Err(Error::PartialBlock {
            got: acc.n_sifted,
            target: target_sifted,
            stats: Box::new(acc),
        });
    }

    let result = evaluate_block(
        acc.n_sifted,
        acc.qber(),
        acc.visibility_est()?,
        budget.mu,
        acc.duration_s(),
        &cfg.security,
    )?;
    Ok(SessionOutcome { stats: acc, result })
}

/// Run a fixed-length Monte Carlo session (no target, no key evaluation).
pub fn run_fixed_symbols(
    cfg: &SimConfig,
    attenuation_db: f64,
    seed: u64,
    n_symbols: u64,
) -> Result<SessionStats> {
    cfg.validate()?;
    let pattern = PatternStream {
        seed: mix_seed(seed, TAG_PATTERN),
        decoy_probability: cfg.decoy_probability,
        n_symbols,
    };
    let engine = ChunkEngine::new(&pattern, cfg, attenuation_db, seed, false);
    let leak = cfg.source.leak_fraction();
    let mut acc = SessionStats::empty(cfg.source.clock_rate_hz, leak);
    let mut done = 0u64;
    while done < n_symbols {
        let end = (done + 64 * BLOCK_SYMBOLS).min(n_symbols);
        let records = engine.simulate(done..end, end == n_symbols);
        acc = acc.merge(&engine.chunk_stats(&records));
        done = end;
    }
    Ok(acc)
}

/// Accumulated per-bin histograms of a trace acquisition.
#[derive(Debug, Clone)]
pub struct TraceHistograms {
    /// Digitizer bin width, ps.
    pub bin_width_ps: f64,
    /// Slots per repeated frame.
    pub frame_slots: u64,
    /// The repeated frame.
    pub frame: SymbolSequence,
    /// SPD1 (time basis) counts per bin across the frame.
    pub spd1: Vec<u64>,
    /// Destructive-port counts per bin.
    pub destructive: Vec<u64>,
    /// Constructive-port counts per bin.
    pub constructive: Vec<u64>,
}

/// Acquire frame-synchronized histograms of all three detection channels.
///
/// The transmitter repeats a `frame_symbols`-long pattern for `duration_s`;
/// counts are folded modulo the frame period at digitizer resolution, the
/// oscilloscope-persistence view of the link.
pub fn run_trace(
    cfg: &SimConfig,
    attenuation_db: f64,
    seed: u64,
    duration_s: f64,
    frame_symbols: u64,
) -> Result<TraceHistograms> {
    run_trace_observed(cfg, attenuation_db, seed, duration_s, frame_symbols, |_| {})
}

/// [`run_trace`] with a per-chunk observer that sees every record set as it
/// is produced (used to stream raw event dumps without holding a whole
/// acquisition in memory).
pub fn run_trace_observed(
    cfg: &SimConfig,
    attenuation_db: f64,
    seed: u64,
    duration_s: f64,
    frame_symbols: u64,
    mut observe: impl FnMut(&DetectionRecordSet),
) -> Result<TraceHistograms> {
    cfg.validate()?;
    if !(duration_s > 0.0) {
        return Err(Error::InvalidParameter {
            name: "duration_s",
            value: duration_s,
            constraint: "must be positive",
        });
    }
    if frame_symbols == 0 {
        return Err(Error::InvalidParameter {
            name: "frame_symbols",
            value: 0.0,
            constraint: "must be at least 1",
        });
    }
    let slot_ps = cfg.source.slot_period_ps();
    let dig_ps = cfg.detector.digitizer_resolution_ps;
    let total_symbols =
        ((duration_s * cfg.source.symbol_rate_hz()).ceil() as u64).max(frame_symbols);
    let frame = generate_pattern(
        mix_seed(seed, TAG_PATTERN),
        frame_symbols,
        cfg.decoy_probability,
    )?;
    let pattern = FrameView {
        frame: &frame,
        n_symbols: total_symbols,
    };
    let engine = ChunkEngine::new(&pattern, cfg, attenuation_db, seed, true);

    let frame_slots = 2 * frame_symbols;
    let frame_ps = frame_slots as f64 * slot_ps;
    let n_bins = (frame_ps / dig_ps).round() as usize;
    let mut spd1 = vec![0u64; n_bins];
    let mut destructive = vec![0u64; n_bins];
    let mut constructive = vec![0u64; n_bins];

    let fold = |records: &DetectionRecordSet, hist: &mut Vec<u64>| {
        for ev in &records.events {
            let t = ev.slot_index as f64 * slot_ps + ev.sub_slot_time_ps as f64;
            let bin = ((t % frame_ps) / dig_ps) as usize;
            hist[bin.min(n_bins - 1)] += 1;
        }
    };

    let mut done = 0u64;
    while done < total_symbols {
        let end = (done + 64 * BLOCK_SYMBOLS).min(total_symbols);
        let records = engine.simulate(done..end, end == total_symbols);
        fold(&records.spd1, &mut spd1);
        fold(&records.spd2, &mut destructive);
        fold(records.constructive.as_ref().unwrap(), &mut constructive);
        observe(&records.spd1);
        observe(&records.spd2);
        observe(records.constructive.as_ref().unwrap());
        done = end;
    }

    Ok(TraceHistograms {
        bin_width_ps: dig_ps,
        frame_slots,
        frame,
        spd1,
        destructive,
        constructive,
    })
}

/// Borrowed frame view (avoids cloning the frame into a FramePattern).
struct FrameView<'a> {
    frame: &'a SymbolSequence,
    n_symbols: u64,
}

impl<'a> SymbolLookup for FrameView<'a> {
    fn n_symbols(&self) -> u64 {
        self.n_symbols
    }
    #[inline]
    fn symbol_at(&self, index: u64) -> crate::protocol::CowSymbol {
        self.frame.symbols[(index % self.frame.symbols.len() as u64) as usize]
    }
}

/// Expected constructive-port intensity ratio between interfering and
/// non-interfering slots (the "factor of four" diagnostic).
pub fn expected_constructive_peak_ratio(cfg: &SimConfig, attenuation_db: f64) -> f64 {
    let b = link_budget(cfg, attenuation_db);
    b.classes_con.both_occupied / b.classes_con.one_occupied
}

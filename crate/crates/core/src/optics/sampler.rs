//! Click-scaled detection sampling.
//!
//! Per-slot Bernoulli sampling would cost O(slots); at 30 dB a million-count
//! session spans ~6e10 slots, so the sampler instead draws candidate slots
//! by geometric skipping at the timeline's *maximum* click probability and
//! thins each candidate by the ratio of its true click probability to the
//! bound. This is an exact per-slot Bernoulli sampler whose runtime scales
//! with the number of candidate clicks.
//!
//! The timeline is cut into fixed blocks of [`BLOCK_SLOTS`]; every
//! (block, purpose) pair derives its own generator from the call seed, so
//! results are bit-identical for any worker count and any chunking of the
//! session.

use super::timeline::SlotIntensitySource;
use super::{ClickOrigin, DetectionEvent, DetectionRecordSet, DetectorChannel, DetectorParams};
use crate::rng::{block_rng, StreamKind};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

/// Slots per sampling block (~2.1 ms of timeline at 2 GHz).
pub const BLOCK_SLOTS: u64 = 1 << 22;

struct RawEvent {
    time_ps: u64,
    origin: ClickOrigin,
}

fn origin_rank(o: ClickOrigin) -> u8 {
    match o {
        ClickOrigin::Signal => 0,
        ClickOrigin::Dark => 1,
    }
}

/// Sample the detector response to a slot-intensity timeline.
///
/// `rate_estimate_hz` sets the timing-jitter width through the detector's
/// rate-dependent jitter law; it is an input rather than something measured
/// from the run itself so that analytic predictions and sampled data use
/// identical jitter.
pub fn sample_detections<S: SlotIntensitySource + ?Sized>(
    source: &S,
    det: &DetectorParams,
    channel: DetectorChannel,
    clock_rate_hz: f64,
    rate_estimate_hz: f64,
    seed: u64,
) -> DetectionRecordSet {
    sample_detections_range(
        source,
        det,
        channel,
        clock_rate_hz,
        rate_estimate_hz,
        seed,
        0..source.n_slots(),
    )
}

/// Sample a block-aligned sub-range of a timeline.
///
/// `range.start` must be a multiple of [`BLOCK_SLOTS`] and `range.end`
/// either block-aligned or the end of the source; this keeps every sampled
/// block identical to what an unchunked run would produce, so a session can
/// be cut into chunks without changing its statistics.
pub fn sample_detections_range<S: SlotIntensitySource + ?Sized>(
    source: &S,
    det: &DetectorParams,
    channel: DetectorChannel,
    clock_rate_hz: f64,
    rate_estimate_hz: f64,
    seed: u64,
    range: std::ops::Range<u64>,
) -> DetectionRecordSet {
    let n_slots = source.n_slots();
    debug_assert!(
        range.start.is_multiple_of(BLOCK_SLOTS),
        "range must start on a block"
    );
    debug_assert!(
        range.end.is_multiple_of(BLOCK_SLOTS) || range.end == n_slots,
        "range must end on a block or at the window end"
    );
    let slot_ps = 1e12 / clock_rate_hz;
    let dig_ps = det.digitizer_resolution_ps;
    let sigma_ps = det.jitter_sigma_ps(rate_estimate_hz);
    let p_max = det.click_probability(source.max_intensity());
    let window_ps = n_slots as f64 * slot_ps;

    let first_block = range.start / BLOCK_SLOTS;
    let last_block = range.end.div_ceil(BLOCK_SLOTS);
    let mut per_block: Vec<(Vec<RawEvent>, u64)> = (first_block..last_block)
        .into_par_iter()
        .map(|blk| {
            sample_block(
                source, det, blk, range.end, slot_ps, dig_ps, sigma_ps, p_max, window_ps, seed,
            )
        })
        .collect();

    let mut out_of_window = 0u64;
    let mut events: Vec<RawEvent> = Vec::new();
    for (evs, oow) in per_block.iter_mut() {
        out_of_window += *oow;
        events.append(evs);
    }
    // jitter can move events across block boundaries; restore time order
    events.sort_unstable_by_key(|e| (e.time_ps, origin_rank(e.origin)));

    // at most one click per slot: collapse same-slot coincidences
    let slot_of = |t: u64| ((t as f64) / slot_ps).floor() as u64;
    let mut collapsed: Vec<DetectionEvent> = Vec::with_capacity(events.len());
    let mut last_slot = u64::MAX;
    let mut last_time = 0u64;
    let dead_ps = det.dead_time_ns * 1e3;
    for ev in events {
        let slot = slot_of(ev.time_ps);
        if slot == last_slot && !collapsed.is_empty() {
            continue;
        }
        if dead_ps > 0.0 && !collapsed.is_empty() && ((ev.time_ps - last_time) as f64) < dead_ps {
            continue;
        }
        let sub = ev.time_ps - (slot as f64 * slot_ps) as u64;
        collapsed.push(DetectionEvent {
            detector: channel,
            slot_index: slot,
            sub_slot_time_ps: sub as u32,
            origin: ev.origin,
        });
        last_slot = slot;
        last_time = ev.time_ps;
    }

    DetectionRecordSet {
        detector: channel,
        events: collapsed,
        n_slots: range.end - range.start,
        slot_period_ps: slot_ps,
        digitizer_resolution_ps: dig_ps,
        out_of_window,
    }
}

#[allow(clippy::too_many_arguments)]
fn sample_block<S: SlotIntensitySource + ?Sized>(
    source: &S,
    det: &DetectorParams,
    blk: u64,
    n_slots: u64,
    slot_ps: f64,
    dig_ps: f64,
    sigma_ps: f64,
    p_max: f64,
    window_ps: f64,
    seed: u64,
) -> (Vec<RawEvent>, u64) {
    let start = blk * BLOCK_SLOTS;
    let end = (start + BLOCK_SLOTS).min(n_slots);
    let mut events = Vec::new();
    let mut out_of_window = 0u64;

    let push = |t: f64, origin: ClickOrigin, events: &mut Vec<RawEvent>, oow: &mut u64| {
        // digitizer quantization: floor to the resolution grid
        let t_dig = (t / dig_ps).floor() * dig_ps;
        if t_dig < 0.0 || t_dig >= window_ps {
            *oow += 1;
            return;
        }
        events.push(RawEvent {
            time_ps: t_dig as u64,
            origin,
        });
    };

    // photon clicks: geometric skips at p_max, thinned to the true per-slot
    // click probability
    if p_max > 0.0 {
        let mut rng = block_rng(seed, StreamKind::Signal, blk);
        let ln_skip = (1.0 - p_max).ln();
        let mut pos = start;
        loop {
            let u: f64 = rng.gen();
            let skip = if ln_skip == f64::NEG_INFINITY {
                0
            } else {
                ((1.0 - u).ln() / ln_skip) as u64
            };
            pos = pos.saturating_add(skip);
            if pos >= end {
                break;
            }
            let p = det.click_probability(source.intensity(pos));
            let accept: f64 = rng.gen();
            if accept * p_max < p {
                let z: f64 = rng.sample(StandardNormal);
                let t = (pos as f64 + 0.5) * slot_ps + sigma_ps * z;
                push(t, ClickOrigin::Signal, &mut events, &mut out_of_window);
            }
            pos += 1;
        }
    }

    // dark counts: Poisson in time, uniform over the block
    if det.dark_count_rate_hz > 0.0 {
        let mut rng = block_rng(seed, StreamKind::Dark, blk);
        let block_span_ps = (end - start) as f64 * slot_ps;
        let lambda = det.dark_count_rate_hz * block_span_ps * 1e-12;
        let n_dark = Poisson::new(lambda)
            .map(|d| d.sample(&mut rng) as u64)
            .unwrap_or(0);
        for _ in 0..n_dark {
            let t = start as f64 * slot_ps + rng.gen::<f64>() * block_span_ps;
            push(t, ClickOrigin::Dark, &mut events, &mut out_of_window);
        }
    }

    events.sort_unstable_by_key(|e| (e.time_ps, origin_rank(e.origin)));
    (events, out_of_window)
}

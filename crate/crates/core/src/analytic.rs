//! Closed-form expected rates, QBER and measured visibility.
//!
//! These are the instant-sweep functions and the oracle the Monte Carlo
//! path is validated against. They share the interferometer class table
//! with the sampler ([`MonitorClasses`]), so both sides of the comparison
//! evaluate the same physics by construction.

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::optics::{MonitorClasses, UmziPort};
use crate::protocol::expected_occupancy;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    libm::erfc(-z / SQRT_2) / 2.0
}

/// Everything the analytic model knows about one operating point.
///
/// Built once per (config, attenuation); the named rate/QBER/visibility
/// functions below are thin accessors over this.
#[derive(Debug, Clone, Copy)]
pub struct LinkBudget {
    /// Mean photon number in use at this attenuation.
    pub mu: f64,
    /// Linear channel transmission.
    pub transmission: f64,
    /// Occupied-slot intensity on the key line.
    pub mu_spd1: f64,
    /// Leakage intensity on the key line.
    pub mu_spd1_leak: f64,
    /// Occupied-slot intensity at the interferometer input.
    pub mu_monitor: f64,
    /// Dark probability per slot.
    pub dark_per_slot: f64,
    /// Click probability of an occupied key-line slot (light only).
    pub p_click_occupied: f64,
    /// Click probability of a leak slot (light only).
    pub p_click_leak: f64,
    /// Occupied-slot click probability with dark counts folded in.
    pub pa: f64,
    /// Empty-slot click probability with dark counts folded in.
    pub pb: f64,
    /// SPD1 total click rate, Hz.
    pub spd1_rate_hz: f64,
    /// Time-basis sifted count rate, Hz.
    pub sifted_rate_hz: f64,
    /// SPD2 (destructive port) total click rate, Hz.
    pub spd2_rate_hz: f64,
    /// SPD1 jitter sigma at this operating point, ps.
    pub sigma_spd1_ps: f64,
    /// SPD2 jitter sigma, ps.
    pub sigma_spd2_ps: f64,
    /// Expected QBER.
    pub qber: f64,
    /// Expected measured visibility.
    pub v_meas: f64,
    /// Destructive-port class intensities.
    pub classes_dest: MonitorClasses,
    /// Constructive-port class intensities.
    pub classes_con: MonitorClasses,
    /// Fraction of interferometer output slots with both contributors
    /// occupied.
    pub f_overlap: f64,
    /// Fraction with exactly one occupied contributor.
    pub f_side: f64,
    /// Fraction with no occupied contributor.
    pub f_dead: f64,
    /// Expected clicks per overlap slot (destructive port, dark included).
    pub click_overlap: f64,
    /// Expected clicks per side slot (destructive port, dark included).
    pub click_side: f64,
}

/// Compose a light click probability with the per-slot dark probability.
#[inline]
fn with_dark(p: f64, d: f64) -> f64 {
    1.0 - (1.0 - p) * (1.0 - d)
}

/// Build the analytic link budget for one operating point.
pub fn link_budget(cfg: &SimConfig, attenuation_db: f64) -> LinkBudget {
    let src = cfg.source_for(attenuation_db);
    let det = &cfg.detector;
    let rx = &cfg.receiver;
    let p = cfg.decoy_probability;
    let q = (1.0 - p) / 2.0;
    let clock = src.clock_rate_hz;
    let slot_ps = src.slot_period_ps();
    let leak = src.leak_fraction();
    let transmission = 10f64.powf(-attenuation_db / 10.0);

    // key line
    let mu_spd1 = src.mu * transmission * (1.0 - rx.monitor_tap);
    let mu_spd1_leak = mu_spd1 * leak;
    let p1 = det.click_probability(mu_spd1);
    let p2 = det.click_probability(mu_spd1_leak);
    let d = det.dark_count_rate_hz / clock;
    let pa = with_dark(p1, d);
    let pb = with_dark(p2, d);

    let occ = expected_occupancy(p);
    let spd1_rate_hz = clock * (occ * p1 + (1.0 - occ) * p2) + det.dark_count_rate_hz;
    let sifted_rate_hz = src.symbol_rate_hz() * (1.0 - p) * (pa + pb - pa * pb);

    // timing jitter and its sifting errors (first-order migration model:
    // a click crossing into the adjacent slot decodes wrongly unless the
    // destination symbol happens to carry the same bit or is a decoy)
    let sigma_spd1_ps = det.jitter_sigma_ps(spd1_rate_hz);
    let phi2 = normal_cdf(-(slot_ps / 2.0) / sigma_spd1_ps);
    let migration_weight = (1.0 - p) * (1.0 + q) + 2.0 * p * q;

    let err_per_symbol = (1.0 - p) * (pb - pa * pb / 2.0) + phi2 * p1 * migration_weight;
    let sift_per_symbol = (1.0 - p) * (pa + pb - pa * pb);
    let qber = err_per_symbol / sift_per_symbol;

    // monitor line
    let mu_monitor = src.mu * transmission * rx.monitor_tap;
    let v_src = src.source_visibility;
    let classes_dest = MonitorClasses::new(
        mu_monitor,
        leak,
        v_src,
        rx.cos_delta(),
        rx.umzi_loss_factor(),
        UmziPort::Destructive,
    );
    let classes_con = MonitorClasses::new(
        mu_monitor,
        leak,
        v_src,
        rx.cos_delta(),
        rx.umzi_loss_factor(),
        UmziPort::Constructive,
    );

    let o = q + p; // probability a cross-pair contributor slot is occupied
    let f_overlap = (p + o * o) / 2.0;
    let f_side = ((1.0 - p) + 2.0 * o * (1.0 - o)) / 2.0;
    let f_dead = (1.0 - o) * (1.0 - o) / 2.0;

    let click_overlap = with_dark(det.click_probability(classes_dest.both_occupied), d);
    let click_side = with_dark(det.click_probability(classes_dest.one_occupied), d);
    let click_dead = with_dark(det.click_probability(classes_dest.neither), d);

    let spd2_rate_hz = clock
        * (f_overlap * det.click_probability(classes_dest.both_occupied)
            + f_side * det.click_probability(classes_dest.one_occupied)
            + f_dead * det.click_probability(classes_dest.neither))
        + det.dark_count_rate_hz;
    let sigma_spd2_ps = det.jitter_sigma_ps(spd2_rate_hz);

    // visibility estimator expectation: side peaks act as the per-pulse
    // reference (4x a side slot), corrected for the known leakage share
    let v_meas = (1.0 - (1.0 + leak) * click_overlap / (2.0 * click_side)).clamp(0.0, 1.0);
    let _ = click_dead;

    LinkBudget {
        mu: src.mu,
        transmission,
        mu_spd1,
        mu_spd1_leak,
        mu_monitor,
        dark_per_slot: d,
        p_click_occupied: p1,
        p_click_leak: p2,
        pa,
        pb,
        spd1_rate_hz,
        sifted_rate_hz,
        spd2_rate_hz,
        sigma_spd1_ps,
        sigma_spd2_ps,
        qber,
        v_meas,
        classes_dest,
        classes_con,
        f_overlap,
        f_side,
        f_dead,
        click_overlap,
        click_side,
    }
}

/// Expected SPD1 click rate in clicks per second.
pub fn expected_spd1_rate(cfg: &SimConfig, attenuation_db: f64) -> f64 {
    link_budget(cfg, attenuation_db).spd1_rate_hz
}

/// Expected time-basis sifted count rate in counts per second.
pub fn expected_sifted_rate(cfg: &SimConfig, attenuation_db: f64) -> f64 {
    link_budget(cfg, attenuation_db).sifted_rate_hz
}

/// Expected SPD2 (destructive-port) click rate in clicks per second.
pub fn expected_spd2_rate(cfg: &SimConfig, attenuation_db: f64) -> f64 {
    link_budget(cfg, attenuation_db).spd2_rate_hz
}

/// Expected QBER of the sifted key.
pub fn expected_qber(cfg: &SimConfig, attenuation_db: f64) -> f64 {
    link_budget(cfg, attenuation_db).qber
}

/// Expected value of the measured visibility estimator.
///
/// Tends to the source visibility as accidentals vanish and degrades toward
/// the estimator's dark floor as the signal disappears.
pub fn expected_visibility_measured(cfg: &SimConfig, attenuation_db: f64, v_source: f64) -> f64 {
    let mut c = *cfg;
    c.source.source_visibility = v_source;
    link_budget(&c, attenuation_db).v_meas
}

/// Interference visibility of the source as a function of injected seed
/// power, from the calibration points (0 uW -> 0.5, 12 uW -> 0.99,
/// 216 uW -> 0.9978), saturating above 216 uW.
///
/// The curve is the exponential approach
/// `V(P) = 0.9978 - 0.4978 exp(-P / tau)` with tau fixed by the 12 uW
/// point.
pub fn injection_visibility(seed_power_uw: f64) -> Result<f64> {
    if !(seed_power_uw >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "seed_power_uw",
            value: seed_power_uw,
            constraint: "must be >= 0",
        });
    }
    const V_SAT: f64 = 0.9978;
    const SPAN: f64 = 0.4978;
    if seed_power_uw >= 216.0 {
        return Ok(V_SAT);
    }
    let tau = 12.0 / (SPAN / (V_SAT - 0.99)).ln();
    Ok(V_SAT - SPAN * (-seed_power_uw / tau).exp())
}

/// Expected session statistics over a fixed duration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SessionExpectation {
    /// Channel attenuation, dB.
    pub attenuation_db: f64,
    /// Acquisition duration, s.
    pub duration_s: f64,
    /// Slots elapsed.
    pub elapsed_slots: f64,
    /// Expected SPD1 clicks per second.
    pub spd1_rate_hz: f64,
    /// Expected SPD2 clicks per second.
    pub spd2_rate_hz: f64,
    /// Expected sifted counts.
    pub n_sifted: f64,
    /// Expected sifted errors.
    pub n_errors: f64,
    /// Expected QBER.
    pub qber: f64,
    /// Expected measured visibility.
    pub visibility: f64,
    /// Expected clicks in interfering (overlap) monitor slots.
    pub monitor_overlap_counts: f64,
    /// Expected clicks in side monitor slots.
    pub monitor_side_counts: f64,
    /// Expected number of overlap slots.
    pub n_overlap_slots: f64,
    /// Expected number of side slots.
    pub n_side_slots: f64,
}

/// Predict the expected session statistics for a run of `duration_s`.
pub fn predict_session(
    cfg: &SimConfig,
    attenuation_db: f64,
    duration_s: f64,
) -> SessionExpectation {
    let lb = link_budget(cfg, attenuation_db);
    let clock = cfg.source.clock_rate_hz;
    let slots = duration_s * clock;
    let n_sifted = lb.sifted_rate_hz * duration_s;
    SessionExpectation {
        attenuation_db,
        duration_s,
        elapsed_slots: slots,
        spd1_rate_hz: lb.spd1_rate_hz,
        spd2_rate_hz: lb.spd2_rate_hz,
        n_sifted,
        n_errors: lb.qber * n_sifted,
        qber: lb.qber,
        visibility: lb.v_meas,
        monitor_overlap_counts: slots * lb.f_overlap * lb.click_overlap,
        monitor_side_counts: slots * lb.f_side * lb.click_side,
        n_overlap_slots: slots * lb.f_overlap,
        n_side_slots: slots * lb.f_side,
    }
}

/// Duration needed to accumulate `target_counts` sifted counts.
pub fn predicted_duration_for_counts(
    cfg: &SimConfig,
    attenuation_db: f64,
    target_counts: u64,
) -> f64 {
    target_counts as f64 / link_budget(cfg, attenuation_db).sifted_rate_hz
}

/// Closed-form evaluation of one operating point: expected Q and V of a full
/// block of `cfg.security.block_size_n` sifted counts, fed through the
/// finite-key formula. This is what analytic sweeps emit per attenuation.
pub fn analytic_block_result(
    cfg: &SimConfig,
    attenuation_db: f64,
) -> crate::error::Result<crate::security::KeyRateResult> {
    cfg.validate()?;
    let lb = link_budget(cfg, attenuation_db);
    let n = cfg.security.block_size_n;
    let duration_s = n as f64 / lb.sifted_rate_hz;
    crate::security::evaluate_block(n, lb.qber, lb.v_meas, lb.mu, duration_s, &cfg.security)
}

//! Receiver optics and Monte Carlo detection.
//!
//! Models the lossy channel, the 90:10 passive splitter, the delay-line
//! interferometer used for coherence monitoring, and threshold single-photon
//! detectors with dark counts, rate-dependent Gaussian timing jitter, a
//! digitizer grid and optional dead time.

pub mod sampler;
pub mod timeline;

use crate::error::{Error, Result};
use crate::protocol::PulseTrain;
use crate::rng::mix_seed;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub use sampler::{sample_detections, sample_detections_range, BLOCK_SLOTS};
pub use timeline::{
    classify_pair, KeyLineTimeline, MonitorClasses, MonitorPortTimeline, PairClass,
    SlotIntensitySource,
};

/// Quantum channel parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Channel attenuation in dB.
    pub attenuation_db: f64,
}

impl ChannelParams {
    /// New channel with the given attenuation.
    pub fn new(attenuation_db: f64) -> Self {
        Self { attenuation_db }
    }

    /// Linear transmission factor.
    #[inline]
    pub fn transmission(&self) -> f64 {
        10f64.powf(-self.attenuation_db / 10.0)
    }

    /// Equivalent fiber length at 0.2 dB/km (informational).
    pub fn fiber_equivalent_km(&self) -> f64 {
        self.attenuation_db / 0.2
    }

    /// Validate the attenuation.
    pub fn validate(&self) -> Result<()> {
        if !(self.attenuation_db >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "attenuation_db",
                value: self.attenuation_db,
                constraint: "must be >= 0",
            });
        }
        Ok(())
    }
}

/// Receiver topology parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReceiverParams {
    /// Fraction of light tapped to the monitor interferometer.
    pub monitor_tap: f64,
    /// Interferometer insertion loss, dB.
    pub umzi_loss_db: f64,
    /// Differential delay in slots (1 slot = 500 ps at 2 GHz).
    pub umzi_delay_slots: u64,
    /// Heater phase in radians; pi aligns the destructive port.
    pub umzi_phase: f64,
}

impl Default for ReceiverParams {
    fn default() -> Self {
        Self {
            monitor_tap: 0.10,
            umzi_loss_db: 3.0,
            umzi_delay_slots: 1,
            umzi_phase: PI,
        }
    }
}

impl ReceiverParams {
    /// Interferometer insertion loss as a linear factor.
    #[inline]
    pub fn umzi_loss_factor(&self) -> f64 {
        10f64.powf(-self.umzi_loss_db / 10.0)
    }

    /// Cosine of the deviation from the aligned heater setting.
    ///
    /// 1 at the default phase of pi, so the destructive port nulls two
    /// equal coherent pulses.
    #[inline]
    pub fn cos_delta(&self) -> f64 {
        (self.umzi_phase - PI).cos()
    }

    /// Validate all fields.
    pub fn validate(&self) -> Result<()> {
        if !(self.monitor_tap > 0.0 && self.monitor_tap < 1.0) {
            return Err(Error::InvalidParameter {
                name: "monitor_tap",
                value: self.monitor_tap,
                constraint: "must lie in (0, 1)",
            });
        }
        if !(self.umzi_loss_db >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "umzi_loss_db",
                value: self.umzi_loss_db,
                constraint: "must be >= 0",
            });
        }
        if self.umzi_delay_slots == 0 {
            return Err(Error::InvalidParameter {
                name: "umzi_delay_slots",
                value: 0.0,
                constraint: "must be >= 1",
            });
        }
        Ok(())
    }
}

/// Threshold single-photon detector parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Detection efficiency.
    pub efficiency: f64,
    /// Dark count rate, Hz.
    pub dark_count_rate_hz: f64,
    /// Timing jitter sigma at low count rate, ps.
    pub jitter_sigma_low_ps: f64,
    /// Timing jitter sigma at/above the saturation rate, ps.
    pub jitter_sigma_high_ps: f64,
    /// Count rate at which jitter reaches its high value, Hz.
    pub jitter_saturation_rate_hz: f64,
    /// Detector dead time, ns (0 disables).
    pub dead_time_ns: f64,
    /// Digitizer time resolution, ps.
    pub digitizer_resolution_ps: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            efficiency: 0.34,
            dark_count_rate_hz: 10.0,
            jitter_sigma_low_ps: 40.0,
            jitter_sigma_high_ps: 90.0,
            jitter_saturation_rate_hz: 1e7,
            dead_time_ns: 0.0,
            digitizer_resolution_ps: 100.0,
        }
    }
}

impl DetectorParams {
    /// Click probability of a threshold detector on a coherent state of the
    /// given mean photon number: 1 - exp(-efficiency * intensity).
    #[inline]
    pub fn click_probability(&self, intensity: f64) -> f64 {
        -(-self.efficiency * intensity).exp_m1()
    }

    /// Jitter sigma at a given count rate: linear in rate, clamped at the
    /// saturation rate.
    #[inline]
    pub fn jitter_sigma_ps(&self, rate_hz: f64) -> f64 {
        let x = (rate_hz / self.jitter_saturation_rate_hz).clamp(0.0, 1.0);
        self.jitter_sigma_low_ps + (self.jitter_sigma_high_ps - self.jitter_sigma_low_ps) * x
    }

    /// Validate all fields.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::InvalidParameter {
                name: "efficiency",
                value: self.efficiency,
                constraint: "must lie in [0, 1]",
            });
        }
        for (name, v) in [
            ("dark_count_rate_hz", self.dark_count_rate_hz),
            ("jitter_sigma_low_ps", self.jitter_sigma_low_ps),
            ("jitter_sigma_high_ps", self.jitter_sigma_high_ps),
            ("dead_time_ns", self.dead_time_ns),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    constraint: "must be >= 0",
                });
            }
        }
        if self.jitter_sigma_high_ps < self.jitter_sigma_low_ps {
            return Err(Error::InvalidParameter {
                name: "jitter_sigma_high_ps",
                value: self.jitter_sigma_high_ps,
                constraint: "must be >= jitter_sigma_low_ps",
            });
        }
        if !(self.jitter_saturation_rate_hz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "jitter_saturation_rate_hz",
                value: self.jitter_saturation_rate_hz,
                constraint: "must be positive",
            });
        }
        if !(self.digitizer_resolution_ps > 0.0) {
            return Err(Error::InvalidParameter {
                name: "digitizer_resolution_ps",
                value: self.digitizer_resolution_ps,
                constraint: "must be positive",
            });
        }
        Ok(())
    }
}

/// Detection channel a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorChannel {
    /// Key-line detector (arrival-time measurement).
    Spd1,
    /// Monitor detector at the destructive interferometer port.
    Spd2,
    /// Constructive interferometer port; only instrumented for traces.
    Constructive,
}

impl DetectorChannel {
    /// Stable lowercase name used in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            DetectorChannel::Spd1 => "spd1",
            DetectorChannel::Spd2 => "spd2",
            DetectorChannel::Constructive => "constructive",
        }
    }
}

/// Whether a click came from light or from the dark count process.
/// Diagnostic only; a real receiver cannot tell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClickOrigin {
    /// Photon detection.
    Signal,
    /// Dark count.
    Dark,
}

/// One recorded click.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionEvent {
    /// Which detector fired.
    pub detector: DetectorChannel,
    /// Slot the digitized time falls into.
    pub slot_index: u64,
    /// Digitized offset within the slot, ps.
    pub sub_slot_time_ps: u32,
    /// Diagnostic origin tag.
    pub origin: ClickOrigin,
}

impl DetectionEvent {
    /// Absolute digitized time in ps.
    pub fn time_ps(&self, slot_period_ps: f64) -> u64 {
        (self.slot_index as f64 * slot_period_ps) as u64 + self.sub_slot_time_ps as u64
    }
}

/// All clicks of one detector over a simulated window.
#[derive(Debug, Clone)]
pub struct DetectionRecordSet {
    /// The detector.
    pub detector: DetectorChannel,
    /// Clicks ordered by time.
    pub events: Vec<DetectionEvent>,
    /// Window length in slots.
    pub n_slots: u64,
    /// Slot period, ps.
    pub slot_period_ps: f64,
    /// Digitizer resolution the event times are quantized to, ps.
    pub digitizer_resolution_ps: f64,
    /// Clicks whose digitized time fell outside the window (dropped).
    pub out_of_window: u64,
}

impl DetectionRecordSet {
    /// Acquisition duration in seconds.
    pub fn duration_s(&self) -> f64 {
        self.n_slots as f64 * self.slot_period_ps * 1e-12
    }
}

/// Apply channel plus extra attenuation to a pulse train.
pub fn attenuate(train: &PulseTrain, ch: &ChannelParams, extra_db: f64) -> Result<PulseTrain> {
    ch.validate()?;
    if !(extra_db >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "extra_db",
            value: extra_db,
            constraint: "must be >= 0",
        });
    }
    let factor = 10f64.powf(-(ch.attenuation_db + extra_db) / 10.0);
    Ok(PulseTrain {
        slot_intensities: train.slot_intensities.iter().map(|i| i * factor).collect(),
        occupancy: train.occupancy.clone(),
        phase_coherent: train.phase_coherent,
    })
}

/// Interferometer output port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UmziPort {
    /// Port that nulls two equal coherent pulses at the default phase.
    Destructive,
    /// Complementary port.
    Constructive,
}

/// Mean output intensity of one interferometer port for a pair of
/// consecutive input slots:
///
/// ```text
/// (mu_prev + mu_curr -/+ 2 V cos(phase - pi) sqrt(mu_prev mu_curr)) / 4
/// ```
///
/// The caller supplies the effective pair visibility; the timeline builder
/// passes 0 for pairs involving a nominally empty slot (leakage light does
/// not interfere) and for phase-incoherent trains.
pub fn umzi_slot_intensity(
    mu_prev: f64,
    mu_curr: f64,
    visibility: f64,
    phase: f64,
    port: UmziPort,
) -> f64 {
    let cross = 2.0 * visibility * (phase - PI).cos() * (mu_prev * mu_curr).sqrt();
    match port {
        UmziPort::Destructive => (mu_prev + mu_curr - cross) / 4.0,
        UmziPort::Constructive => (mu_prev + mu_curr + cross) / 4.0,
    }
}

/// Both port timelines of the monitor interferometer.
#[derive(Debug, Clone)]
pub struct MonitorTimelines {
    /// Destructive-port slot intensities (length n_slots + delay).
    pub destructive: Vec<f64>,
    /// Constructive-port slot intensities.
    pub constructive: Vec<f64>,
}

/// Build the monitor-path output intensities for a materialized train.
///
/// Output slot t folds the short-arm copy of input slot t with the long-arm
/// copy of slot t - delay. Intensities include the monitor tap share and the
/// interferometer insertion loss; the interference cross term applies only
/// between two occupied slots of a phase-coherent train.
pub fn build_monitor_timeline(
    train: &PulseTrain,
    rx: &ReceiverParams,
    visibility: f64,
) -> Result<MonitorTimelines> {
    rx.validate()?;
    let n = train.n_slots();
    let delay = rx.umzi_delay_slots as usize;
    let scale = rx.monitor_tap * rx.umzi_loss_factor();
    let phase = rx.umzi_phase;
    let n_out = n + delay;
    let mut destructive = Vec::with_capacity(n_out);
    let mut constructive = Vec::with_capacity(n_out);
    for t in 0..n_out {
        let (short_i, short_occ) = if t < n {
            (train.slot_intensities[t], train.occupancy[t])
        } else {
            (0.0, false)
        };
        let (long_i, long_occ) = if t >= delay {
            let s = t - delay;
            if s < n {
                (train.slot_intensities[s], train.occupancy[s])
            } else {
                (0.0, false)
            }
        } else {
            (0.0, false)
        };
        let v_eff = if train.phase_coherent && short_occ && long_occ {
            visibility
        } else {
            0.0
        };
        destructive.push(
            scale * umzi_slot_intensity(long_i, short_i, v_eff, phase, UmziPort::Destructive),
        );
        constructive.push(
            scale * umzi_slot_intensity(long_i, short_i, v_eff, phase, UmziPort::Constructive),
        );
    }
    Ok(MonitorTimelines {
        destructive,
        constructive,
    })
}

/// Detector response to an arbitrary slot-intensity timeline.
///
/// See [`sampler::sample_detections`]; this wrapper adds parameter validation.
pub fn simulate_detections<S: SlotIntensitySource + ?Sized>(
    source: &S,
    det: &DetectorParams,
    channel: DetectorChannel,
    clock_rate_hz: f64,
    rate_estimate_hz: f64,
    seed: u64,
) -> Result<DetectionRecordSet> {
    det.validate()?;
    if !(clock_rate_hz > 0.0) {
        return Err(Error::InvalidParameter {
            name: "clock_rate_hz",
            value: clock_rate_hz,
            constraint: "must be positive",
        });
    }
    Ok(sample_detections(
        source,
        det,
        channel,
        clock_rate_hz,
        rate_estimate_hz,
        seed,
    ))
}

/// Mean click rate a detector would see on a timeline (used as the jitter
/// rate estimate for materialized desk-scale runs).
fn mean_click_rate(slots: &[f64], det: &DetectorParams, clock_rate_hz: f64) -> f64 {
    if slots.is_empty() {
        return det.dark_count_rate_hz;
    }
    let mean_p: f64 =
        slots.iter().map(|&i| det.click_probability(i)).sum::<f64>() / slots.len() as f64;
    clock_rate_hz * mean_p + det.dark_count_rate_hz
}

/// Propagate a materialized train through channel and receiver and sample
/// both detectors.
///
/// SPD1 sees the (1 - tap) share of the attenuated train directly; SPD2 sees
/// the destructive interferometer port.
pub fn route_and_detect(
    train: &PulseTrain,
    ch: &ChannelParams,
    rx: &ReceiverParams,
    det: &DetectorParams,
    visibility: f64,
    clock_rate_hz: f64,
    seed: u64,
) -> Result<(DetectionRecordSet, DetectionRecordSet)> {
    det.validate()?;
    let attenuated = attenuate(train, ch, 0.0)?;
    let spd1_slots: Vec<f64> = attenuated
        .slot_intensities
        .iter()
        .map(|i| i * (1.0 - rx.monitor_tap))
        .collect();
    let monitor = build_monitor_timeline(&attenuated, rx, visibility)?;

    let rate1 = mean_click_rate(&spd1_slots, det, clock_rate_hz);
    let rate2 = mean_click_rate(&monitor.destructive, det, clock_rate_hz);

    let spd1 = sample_detections(
        &spd1_slots,
        det,
        DetectorChannel::Spd1,
        clock_rate_hz,
        rate1,
        mix_seed(seed, 1),
    );
    let spd2 = sample_detections(
        &monitor.destructive,
        det,
        DetectorChannel::Spd2,
        clock_rate_hz,
        rate2,
        mix_seed(seed, 2),
    );
    Ok((spd1, spd2))
}

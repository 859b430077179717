//! Plain-text configuration files and command-line overrides.
//!
//! The file format is one `key = value` pair per line, `#` starts a
//! comment. Every key addresses one field of the resolved parameter set;
//! unknown keys and out-of-range values are reported by name. Command-line
//! `--set key=value` overrides win over file values.

use anyhow::{anyhow, bail, Context, Result};
use cowsim_core::SimConfig;
use std::path::Path;

/// All recognized configuration keys, with their meaning.
pub const KEY_HELP: &[(&str, &str)] = &[
    ("mu", "mean photon number per non-empty pulse"),
    (
        "mu_low_loss",
        "mean photon number used below the low-loss threshold",
    ),
    (
        "low_loss_threshold_db",
        "attenuation below which mu_low_loss applies",
    ),
    (
        "extinction_ratio_db",
        "intensity extinction ratio, dB (inf allowed)",
    ),
    ("clock_rate_hz", "slot rate, Hz"),
    (
        "source_visibility",
        "interference visibility of the source, [0,1]",
    ),
    ("decoy_probability", "probability of a decoy symbol"),
    (
        "discrimination_window_ps",
        "sifting window around slot centers, ps (0 = full slot)",
    ),
    (
        "monitor_tap",
        "fraction routed to the monitor interferometer",
    ),
    ("umzi_loss_db", "interferometer insertion loss, dB"),
    ("umzi_delay_slots", "interferometer delay in slots"),
    (
        "umzi_phase",
        "heater phase, radians (pi = destructive aligned)",
    ),
    ("efficiency", "detector efficiency, [0,1]"),
    ("dark_count_rate_hz", "dark count rate per detector, Hz"),
    ("jitter_sigma_low_ps", "timing jitter at low rate, ps"),
    ("jitter_sigma_high_ps", "timing jitter at saturation, ps"),
    (
        "jitter_saturation_rate_hz",
        "rate at which jitter saturates, Hz",
    ),
    ("dead_time_ns", "detector dead time, ns (0 disables)"),
    ("digitizer_resolution_ps", "digitizer time resolution, ps"),
    ("epsilon_qkd", "total security parameter"),
    ("epsilon_cor", "correctness parameter"),
    ("f_ir", "information-reconciliation inefficiency (>= 1)"),
    ("block_size_n", "post-processing block size, sifted bits"),
];

fn apply_key(cfg: &mut SimConfig, key: &str, value: &str) -> Result<()> {
    let fval = || -> Result<f64> {
        let v = if value.eq_ignore_ascii_case("inf") {
            f64::INFINITY
        } else {
            value
                .parse::<f64>()
                .with_context(|| format!("key `{key}`: `{value}` is not a number"))?
        };
        Ok(v)
    };
    let uval = || -> Result<u64> {
        // accept scientific notation for counts (e.g. 2e7)
        if let Ok(u) = value.parse::<u64>() {
            return Ok(u);
        }
        let f = value
            .parse::<f64>()
            .with_context(|| format!("key `{key}`: `{value}` is not a count"))?;
        if f < 0.0 || f.fract() != 0.0 || f > 1.8e19 {
            bail!("key `{key}`: `{value}` is not a non-negative integer");
        }
        Ok(f as u64)
    };
    match key {
        "mu" => cfg.source.mu = fval()?,
        "mu_low_loss" => cfg.mu_low_loss = fval()?,
        "low_loss_threshold_db" => cfg.low_loss_threshold_db = fval()?,
        "extinction_ratio_db" => cfg.source.extinction_ratio_db = fval()?,
        "clock_rate_hz" => cfg.source.clock_rate_hz = fval()?,
        "source_visibility" => cfg.source.source_visibility = fval()?,
        "decoy_probability" => cfg.decoy_probability = fval()?,
        "discrimination_window_ps" => cfg.discrimination_window_ps = fval()?,
        "monitor_tap" => cfg.receiver.monitor_tap = fval()?,
        "umzi_loss_db" => cfg.receiver.umzi_loss_db = fval()?,
        "umzi_delay_slots" => cfg.receiver.umzi_delay_slots = uval()?,
        "umzi_phase" => cfg.receiver.umzi_phase = fval()?,
        "efficiency" => cfg.detector.efficiency = fval()?,
        "dark_count_rate_hz" => cfg.detector.dark_count_rate_hz = fval()?,
        "jitter_sigma_low_ps" => cfg.detector.jitter_sigma_low_ps = fval()?,
        "jitter_sigma_high_ps" => cfg.detector.jitter_sigma_high_ps = fval()?,
        "jitter_saturation_rate_hz" => cfg.detector.jitter_saturation_rate_hz = fval()?,
        "dead_time_ns" => cfg.detector.dead_time_ns = fval()?,
        "digitizer_resolution_ps" => cfg.detector.digitizer_resolution_ps = fval()?,
        "epsilon_qkd" => cfg.security.epsilon_qkd = fval()?,
        "epsilon_cor" => cfg.security.epsilon_cor = fval()?,
        "f_ir" => cfg.security.f_ir = fval()?,
        "block_size_n" => cfg.security.block_size_n = uval()?,
        _ => bail!("unknown configuration key `{key}` (see `cowsim keys` for the list)"),
    }
    Ok(())
}

/// Parse a config file body into overrides on `cfg`.
pub fn apply_file(cfg: &mut SimConfig, body: &str, origin: &str) -> Result<()> {
    for (lineno, raw) in body.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            anyhow!(
                "{origin}:{}: expected `key = value`, got `{line}`",
                lineno + 1
            )
        })?;
        apply_key(cfg, key.trim(), value.trim())
            .with_context(|| format!("{origin}:{}", lineno + 1))?;
    }
    Ok(())
}

/// Build the resolved configuration: defaults, then file, then `--set`
/// overrides, then validation.
pub fn resolve(config_path: Option<&Path>, sets: &[String]) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    if let Some(path) = config_path {
        let body = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        apply_file(&mut cfg, &body, &path.display().to_string())?;
    }
    for s in sets {
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects key=value, got `{s}`"))?;
        apply_key(&mut cfg, key.trim(), value.trim())?;
    }
    cfg.validate().map_err(|e| anyhow!("{e}"))?;
    Ok(cfg)
}

/// Render the resolved parameters as the run header (stderr provenance).
pub fn render_header(cfg: &SimConfig) -> String {
    let mut out = String::from("# resolved parameters\n");
    for pair in cfg.canonical_string().split(';') {
        out.push_str("#   ");
        out.push_str(pair);
        out.push('\n');
    }
    out.push_str(&format!("# params_hash = {:016x}\n", cfg.params_hash()));
    out
}

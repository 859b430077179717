//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line. Tolerances are fixed here, not tuned at runtime.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use cowsim_core::analytic::{
    analytic_block_result, expected_qber, link_budget, predict_session,
    predicted_duration_for_counts,
};
use cowsim_core::config::SimConfig;
use cowsim_core::optics::{classify_pair, PairClass};
use cowsim_core::postprocess::SessionStats;
use cowsim_core::protocol::FramePattern;
use cowsim_core::security::{secure_key_length, SecurityParams};
use cowsim_core::session::{run_fixed_symbols, run_trace, run_until_sifted};
use std::time::Instant;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion} failed: {detail}");
}

/// Criterion 1: the key-length implementation reproduces an arbitrary-
/// precision oracle to relative error < 1e-10 over a 1000-point grid,
/// in under 5 s.
#[test]
fn criterion_1_formula_fidelity() {
    let t0 = Instant::now();
    let csv = include_str!("data/keylen_oracle.csv");
    let sec = SecurityParams::default();
    let mut n_points = 0usize;
    let mut worst: f64 = 0.0;
    for line in csv.lines().skip(1) {
        let mut it = line.split(',');
        let v: f64 = it.next().unwrap().parse().unwrap();
        let mu: f64 = it.next().unwrap().parse().unwrap();
        let q: f64 = it.next().unwrap().parse().unwrap();
        let n: u64 = it.next().unwrap().parse().unwrap();
        let expect: f64 = it.next().unwrap().parse().unwrap();
        let got = secure_key_length(n, q, v, mu, &sec).unwrap();
        // 1-bit floor keeps the clamped-to-zero points meaningful
        let rel = (got - expect).abs() / expect.abs().max(1.0);
        worst = worst.max(rel);
        n_points += 1;
    }
    let dt = t0.elapsed().as_secs_f64();
    let pass = n_points == 1000 && worst < 1e-10 && dt < 5.0;
    report(
        "criterion 1 (formula fidelity)",
        pass,
        &format!("{n_points} points, worst rel err {worst:.3e}, {dt:.2} s"),
    );
}

/// Criterion 2: the analytic sweep reproduces the reference key rates
/// (4.57 Mbit/s at 1.5 dB, 127.8 kbit/s at 20 dB, 6.38 kbit/s at 30 dB)
/// within +/-30 % each.
#[test]
fn criterion_2_key_rate_anchors() {
    let t0 = Instant::now();
    let cfg = SimConfig::default();
    let anchors = [(1.5, 4.57e6), (20.0, 127.8e3), (30.0, 6.38e3)];
    let mut detail = String::new();
    let mut pass = true;
    for (att, reference) in anchors {
        let res = analytic_block_result(&cfg, att).unwrap();
        let dev = (res.rate_bits_per_s - reference) / reference;
        detail.push_str(&format!(
            "{att} dB: {:.4e} b/s ({:+.2} %); ",
            res.rate_bits_per_s,
            dev * 100.0
        ));
        pass &= dev.abs() <= 0.30;
        if att < cfg.low_loss_threshold_db {
            pass &= (res.inputs.mu - cfg.mu_low_loss).abs() < 1e-12;
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    pass &= dt < 1.0;
    report("criterion 2 (key-rate anchors)", pass, detail.trim_end());
}

/// Criterion 3: analytic QBER <= 0.15 % at >= 20 dB; at 1.5 dB with the
/// saturated 90 ps jitter, QBER in [0.5 %, 1.1 %].
#[test]
fn criterion_3_qber_anchors() {
    let t0 = Instant::now();
    let cfg = SimConfig::default();
    let mut pass = true;
    let mut detail = String::new();
    for att in [20.0, 25.0, 30.0] {
        let q = expected_qber(&cfg, att);
        detail.push_str(&format!("Q({att}) = {:.4} %; ", q * 100.0));
        pass &= q <= 0.0015;
    }
    let lb = link_budget(&cfg, 1.5);
    pass &= (lb.sigma_spd1_ps - 90.0).abs() < 1e-9;
    let q_low = lb.qber;
    detail.push_str(&format!(
        "Q(1.5) = {:.4} % at sigma = {} ps",
        q_low * 100.0,
        lb.sigma_spd1_ps
    ));
    pass &= (0.005..=0.011).contains(&q_low);
    pass &= t0.elapsed().as_secs_f64() < 1.0;
    report("criterion 3 (QBER anchors)", pass, &detail);
}

/// Criterion 4: Monte Carlo visibility at 10 dB with V_source = 0.98 and
/// >= 1e5 monitor counts lands in [0.973, 0.983], in under 2 minutes.
#[test]
fn criterion_4_visibility_anchor() {
    let t0 = Instant::now();
    let mut cfg = SimConfig::default();
    cfg.source.source_visibility = 0.98;
    // size the run for ~1.2e5 expected monitor counts
    let lb = link_budget(&cfg, 10.0);
    let n_symbols = ((1.2e5 / lb.spd2_rate_hz) * cfg.source.symbol_rate_hz()).ceil() as u64;
    let stats = run_fixed_symbols(&cfg, 10.0, 20260809, n_symbols).unwrap();
    let monitor_counts = stats.monitor_overlap_counts + stats.monitor_side_counts;
    let v = stats.visibility_est().unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let pass = monitor_counts >= 100_000 && (0.973..=0.983).contains(&v) && dt < 120.0;
    report(
        "criterion 4 (visibility anchor)",
        pass,
        &format!("V_est = {v:.5} from {monitor_counts} monitor counts, {dt:.1} s"),
    );
}

/// Criterion 5: in trace output at V_source >= 0.97, constructive-port
/// overlap peaks average 4.0 +/- 0.3 times the non-interfering peaks.
#[test]
fn criterion_5_factor_of_four() {
    let t0 = Instant::now();
    let mut cfg = SimConfig::default();
    cfg.source.source_visibility = 0.98;
    let trace = run_trace(&cfg, 15.0, 31, 2.0, 512).unwrap();

    // fold histogram bins into per-slot counts
    let bins_per_slot = (500.0 / trace.bin_width_ps).round() as usize;
    let n_slots = trace.frame_slots as usize;
    let mut slot_counts = vec![0u64; n_slots];
    for (bin, &c) in trace.constructive.iter().enumerate() {
        slot_counts[(bin / bins_per_slot).min(n_slots - 1)] += c;
    }

    // classify frame slots against a middle repetition so the frame wrap is
    // treated exactly like the transmitted stream
    let view = FramePattern {
        frame: trace.frame.clone(),
        n_symbols: 3 * trace.frame.symbols.len() as u64,
    };
    let base = trace.frame_slots; // start of the middle repetition
    let (mut overlap_sum, mut overlap_n) = (0u64, 0u64);
    let (mut side_sum, mut side_n) = (0u64, 0u64);
    for s in 0..trace.frame_slots {
        match classify_pair(&view, base + s, 1) {
            PairClass::BothOccupied => {
                overlap_sum += slot_counts[s as usize];
                overlap_n += 1;
            }
            PairClass::OneOccupied => {
                side_sum += slot_counts[s as usize];
                side_n += 1;
            }
            _ => {}
        }
    }
    let ratio = (overlap_sum as f64 / overlap_n as f64) / (side_sum as f64 / side_n as f64);
    let dt = t0.elapsed().as_secs_f64();
    let pass = (3.7..=4.3).contains(&ratio) && dt < 60.0;
    report(
        "criterion 5 (factor-of-four)",
        pass,
        &format!(
            "constructive overlap/side peak ratio = {ratio:.3} ({overlap_n} overlap, {side_n} side slots), {dt:.1} s"
        ),
    );
}

/// Criterion 6: at 5..30 dB with >= 1e5 sifted counts, the sampled sifted
/// rate, QBER and visibility sit within 3 sigma of the analytic model.
#[test]
fn criterion_6_monte_carlo_vs_analytic() {
    let t0 = Instant::now();
    let cfg = SimConfig::default();
    let mut pass = true;
    let mut detail = String::new();
    for (i, att) in [5.0, 10.0, 15.0, 20.0, 25.0, 30.0].into_iter().enumerate() {
        let outcome = run_until_sifted(&cfg, att, 1000 + i as u64, 100_000, u64::MAX).unwrap();
        let stats = &outcome.stats;
        let duration = stats.duration_s();
        let expect = predict_session(&cfg, att, duration);

        // sifted count: Poisson-scale fluctuation around the prediction
        let z_rate = (stats.n_sifted as f64 - expect.n_sifted) / expect.n_sifted.sqrt();

        // QBER: binomial error on the sifted sample
        let q_sig = (expect.qber * (1.0 - expect.qber) / stats.n_sifted as f64).sqrt();
        let z_q = (stats.qber() - expect.qber) / q_sig;

        // visibility: Poisson errors on overlap and side counts
        let v = stats.visibility_est().unwrap();
        let v_sig = (1.0 - expect.visibility)
            * (1.0 / expect.monitor_overlap_counts + 1.0 / expect.monitor_side_counts).sqrt();
        let z_v = (v - expect.visibility) / v_sig;

        detail.push_str(&format!("{att} dB z=({z_rate:+.2},{z_q:+.2},{z_v:+.2}); "));
        pass &= z_rate.abs() < 3.0 && z_q.abs() < 3.0 && z_v.abs() < 3.0;
    }
    let dt = t0.elapsed().as_secs_f64();
    pass &= dt < 600.0;
    report(
        "criterion 6 (Monte Carlo vs analytic)",
        pass,
        &format!("{detail}{dt:.1} s"),
    );
}

/// Criterion 7: predicted acquisition time for 2e7 time-basis counts at
/// 30 dB is 600 s +/- 25 %.
#[test]
fn criterion_7_duration_anchor() {
    let cfg = SimConfig::default();
    let d = predicted_duration_for_counts(&cfg, 30.0, 20_000_000);
    let pass = (450.0..=750.0).contains(&d);
    report(
        "criterion 7 (duration anchor)",
        pass,
        &format!("{d:.1} s for 2e7 counts at 30 dB"),
    );
}

/// Criterion 8: identical seeds give identical outputs at any worker count,
/// and a 30 dB run accumulating 1e6 counts finishes inside 60 s.
#[test]
fn criterion_8_determinism_and_performance() {
    let cfg = SimConfig::default();

    let run = |threads: usize, target: u64| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| run_until_sifted(&cfg, 30.0, 77, target, u64::MAX).unwrap())
    };

    let a = run(1, 100_000);
    let b = run(8, 100_000);
    let bytes_a = serde_json::to_vec(&a.stats).unwrap();
    let bytes_b = serde_json::to_vec(&b.stats).unwrap();
    let deterministic = bytes_a == bytes_b
        && a.result.key_length_bits == b.result.key_length_bits
        && a.result.rate_bits_per_s == b.result.rate_bits_per_s;

    let t0 = Instant::now();
    let big = run_until_sifted(&cfg, 30.0, 78, 1_000_000, u64::MAX).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let pass = deterministic && big.stats.n_sifted >= 1_000_000 && dt < 60.0;
    report(
        "criterion 8 (determinism and performance)",
        pass,
        &format!(
            "worker-count invariant: {deterministic}; 1e6 counts at 30 dB in {dt:.1} s ({:.2e} slots)",
            big.stats.elapsed_slots as f64
        ),
    );
}

/// Complementary check used by the visibility machinery: the estimator's
/// sigma model in criterion 6 assumes stats fields are consistent.
#[test]
fn stats_fields_are_consistent() {
    let cfg = SimConfig::default();
    let stats: SessionStats = run_fixed_symbols(&cfg, 15.0, 5, 4_000_000).unwrap();
    assert!(stats.n_errors <= stats.n_sifted);
    assert!(stats.n_sifted <= stats.n_spd1_events);
    assert!(stats.n_overlap_slots() > 0.0 && stats.n_side_slots() > 0.0);
    let d = stats.duration_s();
    assert!((d - stats.elapsed_slots as f64 / cfg.source.clock_rate_hz).abs() < 1e-12);
}

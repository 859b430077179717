//! Property tests for structural invariants.

use cowsim_core::config::SimConfig;
use cowsim_core::optics::{build_monitor_timeline, ChannelParams, ReceiverParams};
use cowsim_core::postprocess::SessionStats;
use cowsim_core::protocol::{
    encode_pulse_train, generate_pattern, symbol_at, CowSymbol, SourceParams,
};
use cowsim_core::security::{secure_key_length, SecurityParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Generated patterns are reproducible and agree with the counter-mode
    /// stream element-wise.
    #[test]
    fn pattern_reproducible(seed in any::<u64>(), len in 1u64..2000, p in 0.0f64..=1.0) {
        let a = generate_pattern(seed, len, p).unwrap();
        let b = generate_pattern(seed, len, p).unwrap();
        prop_assert_eq!(&a.symbols, &b.symbols);
        for k in 0..len {
            prop_assert_eq!(a.symbols[k as usize], symbol_at(seed, k, p));
        }
    }

    /// Decoding slot occupancy of a noiseless ideal-extinction train
    /// recovers the symbols exactly.
    #[test]
    fn encode_roundtrip(seed in any::<u64>(), len in 1u64..500, p in 0.0f64..=1.0) {
        let seq = generate_pattern(seed, len, p).unwrap();
        let src = SourceParams { extinction_ratio_db: f64::INFINITY, ..SourceParams::default() };
        let train = encode_pulse_train(&seq, &src).unwrap();
        for (k, sym) in seq.symbols.iter().enumerate() {
            let decoded = match (train.slot_intensities[2 * k] > 0.0, train.slot_intensities[2 * k + 1] > 0.0) {
                (true, false) => CowSymbol::Bit0,
                (false, true) => CowSymbol::Bit1,
                (true, true) => CowSymbol::Decoy,
                (false, false) => unreachable!(),
            };
            prop_assert_eq!(decoded, *sym);
        }
    }

    /// Total emitted intensity depends only on the symbol multiset.
    #[test]
    fn total_intensity_reorder_invariant(seed in any::<u64>(), len in 2u64..500, rot in 0usize..499) {
        let mut seq = generate_pattern(seed, len, 0.05).unwrap();
        let src = SourceParams::default();
        let before = encode_pulse_train(&seq, &src).unwrap().total_intensity();
        let r = rot % seq.symbols.len();
        seq.symbols.rotate_left(r);
        let after = encode_pulse_train(&seq, &src).unwrap().total_intensity();
        prop_assert!((before - after).abs() <= 1e-9 * before.max(1e-300));
    }

    /// Both interferometer ports together conserve the tapped energy for
    /// any train, visibility and phase.
    #[test]
    fn monitor_energy_conservation(
        seed in any::<u64>(),
        len in 1u64..300,
        v in 0.0f64..=1.0,
        phase_off in -0.5f64..0.5,
        att in 0.0f64..30.0,
    ) {
        let seq = generate_pattern(seed, len, 0.05).unwrap();
        let src = SourceParams::default();
        let train = encode_pulse_train(&seq, &src).unwrap();
        let train = cowsim_core::optics::attenuate(&train, &ChannelParams::new(att), 0.0).unwrap();
        let rx = ReceiverParams { umzi_phase: std::f64::consts::PI + phase_off, ..ReceiverParams::default() };
        let out = build_monitor_timeline(&train, &rx, v).unwrap();
        let total_out: f64 = out.destructive.iter().sum::<f64>() + out.constructive.iter().sum::<f64>();
        let expect = rx.monitor_tap * rx.umzi_loss_factor() * train.total_intensity();
        prop_assert!((total_out - expect).abs() <= 1e-9 * expect.max(1e-300),
            "out {} vs {}", total_out, expect);
    }

    /// Key length is clamped to [0, n] over the whole parameter domain.
    #[test]
    fn key_length_bounded(
        q in 0.0f64..=0.5,
        v in 0.0f64..=1.0,
        mu in 0.0f64..=1.0,
        n in 1u64..100_000_000,
    ) {
        let sec = SecurityParams::default();
        let l = secure_key_length(n, q, v, mu, &sec).unwrap();
        prop_assert!(l >= 0.0);
        prop_assert!(l <= n as f64);
    }

    /// Statistics merging is associative and commutative field by field.
    #[test]
    fn stats_merge_algebra(
        a in stats_strategy(),
        b in stats_strategy(),
        c in stats_strategy(),
    ) {
        prop_assert_eq!(a.merge(&b), b.merge(&a));
        prop_assert_eq!(a.merge(&b).merge(&c), a.merge(&b.merge(&c)));
    }
}

fn stats_strategy() -> impl Strategy<Value = SessionStats> {
    (
        0u64..1_000_000,
        0u64..1000,
        0u64..1000,
        0u64..100_000,
        0u64..100_000,
        1u64..10_000_000,
    )
        .prop_map(|(n_sifted, n_errors, n_decoy, c_o, c_s, slots)| {
            let cfg = SimConfig::default();
            let mut s = SessionStats::empty(cfg.source.clock_rate_hz, cfg.source.leak_fraction());
            s.n_sifted = n_sifted;
            s.n_errors = n_errors.min(n_sifted);
            s.n_decoy_clicks = n_decoy;
            s.n_spd1_events = n_sifted + n_decoy;
            s.monitor_overlap_counts = c_o;
            s.monitor_side_counts = c_s;
            s.monitor_window_slots = slots;
            s.f_overlap = 0.1325;
            s.f_side = 0.745;
            s.elapsed_slots = slots;
            s
        })
}

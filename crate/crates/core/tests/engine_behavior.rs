//! End-to-end behavior of the alternating loop against the reference
//! pipelines on paired seeds.

use simirs_core::channel::ScenarioConfig;
use simirs_core::engine::{run_alternating, run_baseline, Method};

/// On paired seeds the optimized pipeline wins against every reference on
/// most realizations and never ends below its own starting point.
///
/// Per-seed upsets are expected and real: with single-path channels an
/// 8-antenna array occasionally draws two near-collinear users, and the
/// equal-gain zero-forcing normalization then drags the whole served set
/// down; a reference that happens to serve fewer or different users dodges
/// that draw. The mean-level ordering (the paper's actual claim) is
/// asserted by the acceptance trend criteria; here the floor is the
/// calibrated per-seed rate for the desk profile (measured 75/100).
#[test]
fn proposed_beats_references_on_most_seeds() {
    let cfg = ScenarioConfig::desk();
    let seeds = 100u64;
    let mut wins = 0usize;
    for seed in 0..seeds {
        let (report, trace) = run_alternating(&cfg, seed).unwrap();
        assert!(
            report.sum_rate >= trace.records[0].sum_rate,
            "seed {seed}: returned state below the initial state"
        );
        let beats_all = [Method::RpbfRssi, Method::RpbfNbua, Method::NoIrs]
            .into_iter()
            .all(|m| report.sum_rate >= run_baseline(&cfg, seed, m).unwrap().sum_rate);
        if beats_all {
            wins += 1;
        }
    }
    assert!(
        wins >= 70,
        "proposed beat all references on only {wins}/{seeds} seeds"
    );
    println!("engine behavior: proposed beats every reference on {wins}/{seeds} paired seeds");
}

/// Identical config and seed give bit-identical traces across runs.
#[test]
fn trace_is_bit_identical_across_runs() {
    let mut cfg = ScenarioConfig::desk();
    cfg.user_count = 2;
    cfg.antennas = 4;
    cfg.irs_elements = 4;
    cfg.phase_bits = 2;
    let (r1, t1) = run_alternating(&cfg, 11).unwrap();
    let (r2, t2) = run_alternating(&cfg, 11).unwrap();
    assert_eq!(r1, r2);
    assert_eq!(t1.records, t2.records);
    for (a, b) in t1.records.iter().zip(&t2.records) {
        assert!(a.sum_rate.to_bits() == b.sum_rate.to_bits());
        assert_eq!(a.phase_fingerprint, b.phase_fingerprint);
    }
}

/// The degenerate single-element surface still runs the full pipeline.
#[test]
fn single_element_surface_runs() {
    let mut cfg = ScenarioConfig::desk();
    cfg.irs_elements = 1;
    cfg.phase_bits = 1;
    let (report, trace) = run_alternating(&cfg, 5).unwrap();
    assert!(report.sum_rate.is_finite());
    assert!(!trace.records.is_empty());
}

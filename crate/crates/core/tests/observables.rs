use std::f64::consts::PI;

use fiberlink_core::observables::format_value_uncertainty;
use fiberlink_core::{
    combine_observables, count_lambda, predict_interferometric_ledger, reciprocity_estimate,
    simulate_link, simulate_link_detailed, LinkConfig, NoiseSpec, PhaseSeries, Sampled,
    TemperatureProcess, TemperatureSeries, Verdict,
};

/// Pointwise agreement on the samples valid in both series, relative to
/// `scale`, the magnitude of the operands the series were computed from.
fn assert_close(a: &PhaseSeries, b: &PhaseSeries, rel: f64, scale: f64) {
    assert_eq!(a.len(), b.len());
    for i in 0..a.len() {
        if a.is_valid(i) && b.is_valid(i) {
            let (x, y) = (a.values()[i], b.values()[i]);
            assert!((x - y).abs() <= rel * scale, "sample {i}: {x} vs {y}");
        }
    }
}

fn magnitude<'a>(series: impl IntoIterator<Item = &'a PhaseSeries>) -> f64 {
    series
        .into_iter()
        .flat_map(|s| s.values().iter())
        .filter(|v| v.is_finite())
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

fn combo(a: &PhaseSeries, b: &PhaseSeries, f: impl Fn(f64, f64) -> f64) -> PhaseSeries {
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| f(*x, *y))
        .collect();
    let gaps = a
        .gaps()
        .iter()
        .zip(b.gaps())
        .map(|(x, y)| *x || *y)
        .collect();
    PhaseSeries::with_gaps(a.t0(), a.dt(), a.carrier_hz(), values, Some(gaps)).unwrap()
}

#[test]
fn algebra_holds_with_gaps() {
    let raw = simulate_link(&LinkConfig::default(), 2048.0, 2.0, 17).unwrap();
    let raw = fiberlink_core::ObservableSet {
        rt: raw.rt.with_gap_at(&[5, 100]),
        owf: raw.owf.with_gap_at(&[2000]),
        ..raw
    };
    let set = combine_observables(&raw).unwrap();
    let d = set.derived.as_ref().unwrap();
    let scale = magnitude([&set.rt, &set.owb, &set.owf]);
    assert_close(
        &d.twb3,
        &combo(&d.twb1, &d.twb2, |a, b| (a - b) / 2.0),
        1e-15,
        scale,
    );
    assert_close(
        &d.twnf,
        &combo(&d.twb1, &d.twb2, |a, b| (a + b) / 2.0),
        1e-15,
        scale,
    );
    for (name, s) in d.named() {
        let expect_gap = |i: usize| match name {
            "TWU2" => false,
            "TWU3" => i == 2000,
            "TWB3" => i == 2000,
            "TWNF" | "TWB2" => [5, 100, 2000].contains(&i),
            _ => [5, 100].contains(&i),
        };
        for i in [0, 5, 100, 2000, 3000] {
            assert_eq!(s.gaps()[i], expect_gap(i), "{name}[{i}]");
        }
    }
}

#[test]
fn reciprocal_noise_free_twnf_is_zero() {
    let cfg = LinkConfig {
        detection_floor: NoiseSpec::silent(),
        temperature: TemperatureProcess::constant(298.0),
        ..LinkConfig::default()
    };
    let set = combine_observables(&simulate_link(&cfg, 4096.0, 8.0, 5).unwrap()).unwrap();
    let scale = set.rt.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let twnf = &set.derived.unwrap().twnf;
    assert!(twnf.values().iter().all(|v| v.abs() <= 1e-14 * scale));
}

#[test]
fn temperature_only_matches_ledger() {
    let cfg = LinkConfig {
        fiber_noise: NoiseSpec::silent(),
        detection_floor: NoiseSpec::silent(),
        temperature: TemperatureProcess {
            diurnal_amplitude_k: 1.2,
            diurnal_period_s: 2000.0,
            linear_drift_k_per_s: 1e-4,
            random_walk_level: 1e-5,
            ..TemperatureProcess::constant(300.0)
        },
        l_bc_m: 0.3,
        l_oa_m: 0.05,
        l_ob_m: 0.2,
        ..LinkConfig::default()
    };
    let run = simulate_link_detailed(&cfg, 4096.0, 1.0, 2).unwrap();
    let set = combine_observables(&run.observables).unwrap();
    let ledger = predict_interferometric_ledger(&cfg, &run.terms.delta_t).unwrap();
    let d = set.derived.as_ref().unwrap();
    let scale = magnitude([&set.rt, &set.owb, &set.owf]);
    for (name, predicted) in ledger.named() {
        let sim = set.get(name).unwrap();
        assert_close(sim, predicted, 1e-15, scale);
    }
    // TWB1 against the closed form 2πνγΔT(L_BC + L_OA - L_OB).
    let k = 2.0 * PI * cfg.carrier_hz * cfg.gamma_fs_per_k_m * 1e-15 * 0.15;
    for (v, t) in d.twb1.values().iter().zip(&run.terms.delta_t.kelvin) {
        assert!((v - k * t).abs() <= 1e-13 * k.abs() * 3.0);
    }
}

#[test]
fn ledger_reference_step() {
    let cfg = LinkConfig {
        l_bc_m: 0.15,
        l_oa_m: 0.2,
        l_ob_m: 0.2,
        ..LinkConfig::default()
    };
    let dt = TemperatureSeries {
        t0: 0.0,
        dt: 1.0,
        kelvin: (0..100).map(|k| if k < 50 { 0.0 } else { 1.5 }).collect(),
    };
    let l = predict_interferometric_ledger(&cfg, &dt).unwrap();
    let te = l.twb1.time_error();
    assert!(((te[60] - te[10]) / 8.325e-15 - 1.0).abs() < 1e-6);
    assert!(l.owf.values().iter().all(|v| *v == 0.0));
    assert!(l.twnf.values().iter().all(|v| *v == 0.0));
    for i in 0..100 {
        assert_eq!(l.twb1.values()[i], -l.twb2.values()[i]);
        assert_eq!(l.twb1.values()[i], l.twb3.values()[i]);
    }
}

fn twb3_reciprocity(offset: f64, seed: u64) -> fiberlink_core::ReciprocityReport {
    let cfg = LinkConfig {
        nonreciprocal_offset: offset,
        ..LinkConfig::default()
    };
    let rate = 4.0;
    // One extra second: Λ counting consumes one gate, leaving 160 000.
    let set = combine_observables(&simulate_link(&cfg, 160_001.0, rate, seed).unwrap()).unwrap();
    let y = count_lambda(&set.derived.unwrap().twb3, 1.0, rate).unwrap();
    reciprocity_estimate(&y, 40_000.0).unwrap()
}

#[test]
fn reciprocity_coverage_and_injection() {
    let seeds = 6u64;
    let consistent = (0..seeds)
        .filter(|s| twb3_reciprocity(0.0, *s).verdict == Verdict::ConsistentWithZero)
        .count();
    assert!(3 * consistent >= 2 * seeds as usize, "{consistent}/{seeds}");
    for seed in 0..3 {
        let r = twb3_reciprocity(5e-20, 100 + seed);
        assert!((r.mean - 5e-20).abs() <= r.uncertainty, "{r}");
    }
}

#[test]
fn paper_style_formatting() {
    assert_eq!(
        format_value_uncertainty(3.1e-20, 3.9e-20),
        "3.1(±3.9)×10⁻²⁰"
    );
    assert_eq!(
        format_value_uncertainty(-2.2e-17, 1.0e-17),
        "-2.2(±1.0)×10⁻¹⁷"
    );
}

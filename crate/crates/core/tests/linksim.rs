use std::f64::consts::PI;

use fiberlink_core::stats::{phase_psd, PsdMethod};
use fiberlink_core::{
    simulate_link, simulate_link_detailed, AncServoConfig, LinkConfig, NoiseSpec, PhaseSeries,
    Sampled, TemperatureProcess,
};

fn close(a: &[f64], b: &[f64], rel: f64) {
    let scale = a
        .iter()
        .chain(b)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= rel * scale, "sample {i}: {x} vs {y}");
    }
}

fn fiber_only() -> LinkConfig {
    LinkConfig {
        detection_floor: NoiseSpec::silent(),
        temperature: TemperatureProcess::constant(298.0),
        ..LinkConfig::default()
    }
}

fn temperature_only() -> LinkConfig {
    LinkConfig {
        fiber_noise: NoiseSpec::silent(),
        detection_floor: NoiseSpec::silent(),
        temperature: TemperatureProcess {
            diurnal_amplitude_k: 1.0,
            diurnal_period_s: 3000.0,
            random_walk_level: 1e-6,
            ..TemperatureProcess::constant(295.0)
        },
        ..LinkConfig::default()
    }
}

#[test]
fn silent_link_is_zero() {
    let set = simulate_link(&LinkConfig::silent(), 2048.0, 1.0, 1).unwrap();
    for (name, s) in set.raw() {
        assert!(s.values().iter().all(|v| *v == 0.0), "{name}");
    }
    assert!(set.derived.is_none());
}

#[test]
fn fiber_only_two_way_sum_vanishes() {
    let set = simulate_link(&fiber_only(), 4096.0, 10.0, 3).unwrap();
    let sum: Vec<f64> = (0..set.rt.len())
        .map(|i| set.owb.values()[i] + set.owf.values()[i])
        .collect();
    close(&sum, set.rt.values(), 1e-14);
}

#[test]
fn temperature_only_round_trip_matches_formula() {
    let cfg = temperature_only();
    let run = simulate_link_detailed(&cfg, 4096.0, 1.0, 8).unwrap();
    let k = 2.0 * PI * cfg.carrier_hz * cfg.gamma_fs_per_k_m * 1e-15 * 2.0 * cfg.l_bc_m;
    let expected: Vec<f64> = run.terms.delta_t.kelvin.iter().map(|t| k * t).collect();
    close(run.observables.rt.values(), &expected, 1e-14);
    assert!(run.terms.delta_t.peak_to_peak() > 1.5);
}

#[test]
fn raw_series_are_interferometric_plus_fiber() {
    let cfg = LinkConfig {
        detection_floor: NoiseSpec::silent(),
        ..LinkConfig::default()
    };
    let run = simulate_link_detailed(&cfg, 2048.0, 4.0, 21).unwrap();
    let t = &run.terms;
    let o = &run.observables;
    for (raw, inter, fiber) in [
        (&o.anc, &t.inter_anc, &t.fiber_anc),
        (&o.rt, &t.inter_rt, &t.fiber_rt),
        (&o.owb, &t.inter_owb, &t.fiber_owb),
        (&o.owf, &t.inter_owf, &t.fiber_owf),
    ] {
        let sum: Vec<f64> = inter
            .values()
            .iter()
            .zip(fiber.values())
            .map(|(a, b)| a + b)
            .collect();
        assert_eq!(raw.values(), &sum[..]);
    }
    // Interferometric sign structure: OWB + OWF reproduces RT.
    let s: Vec<f64> = t
        .inter_owb
        .values()
        .iter()
        .zip(t.inter_owf.values())
        .map(|(a, b)| a + b)
        .collect();
    close(&s, t.inter_rt.values(), 1e-14);
}

fn increments(x: &PhaseSeries) -> Vec<f64> {
    x.values().windows(2).map(|w| w[1] - w[0]).collect()
}

#[test]
fn forward_content_lags_backward_by_delay() {
    // 100 kHz resolves the ~211 µs delay as 21 samples.
    let cfg = fiber_only();
    let rate = 100_000.0;
    let run = simulate_link_detailed(&cfg, 0.5, rate, 4).unwrap();
    let d = run.terms.delay_samples;
    assert_eq!(d, (cfg.delay_s() * rate).round() as usize);
    assert_eq!(d, 21);
    let b = increments(&run.terms.fiber_owb);
    let f = increments(&run.terms.fiber_owf);
    let corr = |lag: usize| -> f64 {
        let n = b.len() - lag;
        (0..n).map(|i| b[i] * f[i + lag]).sum::<f64>() / n as f64
    };
    let best = (0..60)
        .max_by(|&x, &y| corr(x).total_cmp(&corr(y)))
        .unwrap();
    assert_eq!(best, d);
}

#[test]
fn delay_below_one_sample_still_runs() {
    let run = simulate_link_detailed(&fiber_only(), 2048.0, 1.0, 2).unwrap();
    assert_eq!(run.terms.delay_samples, 0);
}

#[test]
fn delayed_loop_suppresses_low_frequency_noise() {
    let bandwidth = 100.0;
    let rate = 10_000.0;
    let cfg = LinkConfig {
        fiber_noise: NoiseSpec::single(-2, 1.0),
        detection_floor: NoiseSpec::silent(),
        temperature: TemperatureProcess::constant(298.0),
        anc: AncServoConfig::delayed_loop(bandwidth),
        ..LinkConfig::default()
    };
    let run = simulate_link_detailed(&cfg, 40.0, rate, 6).unwrap();
    let rt = run.terms.rt_f1.values();
    // Servo error rt + 2c with c = -fiber_anc; uncompensated it is rt.
    let err: Vec<f64> = rt
        .iter()
        .zip(run.terms.fiber_anc.values())
        .map(|(r, a)| r - 2.0 * a)
        .collect();
    let dt = 1.0 / rate;
    let open = PhaseSeries::new(0.0, dt, cfg.carrier_hz, rt.to_vec()).unwrap();
    let closed = PhaseSeries::new(0.0, dt, cfg.carrier_hz, err).unwrap();
    let po = phase_psd(&open, &PsdMethod::default()).unwrap();
    let pc = phase_psd(&closed, &PsdMethod::default()).unwrap();
    let (lo, hi) = (po.resolution(), bandwidth / 10.0);
    let suppression_db =
        10.0 * (po.band_mean(lo, hi).unwrap() / pc.band_mean(lo, hi).unwrap()).log10();
    assert!(suppression_db >= 20.0, "{suppression_db:.1} dB");
}

#[test]
fn delayed_loop_rejects_excess_bandwidth() {
    let cfg = LinkConfig {
        anc: AncServoConfig::delayed_loop(5000.0),
        ..fiber_only()
    };
    assert!(simulate_link(&cfg, 1.0, 10_000.0, 1).is_err());
}

#[test]
fn same_seed_same_output_and_provenance() {
    let cfg = LinkConfig::default();
    let a = simulate_link(&cfg, 1024.0, 2.0, 99).unwrap();
    let b = simulate_link(&cfg, 1024.0, 2.0, 99).unwrap();
    assert_eq!(a, b);
    let p = a.provenance.unwrap();
    assert_eq!(p.seed, 99);
    assert_eq!(p.config_hash, cfg.hash());
}

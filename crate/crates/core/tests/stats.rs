mod common;

use fiberlink_core::stats::{
    deviation_at, fit_loglog_slope, phase_psd, stability_deviation, BlackmanTukeyParams, Estimator,
    PsdMethod, TauGrid,
};
use fiberlink_core::{
    count_lambda, count_pi, gen_powerlaw, FrequencySeries, NoiseSpec, Sampled, DEFAULT_CARRIER_HZ,
};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const NU: f64 = DEFAULT_CARRIER_HZ;

/// White FM with `S_y = h0`: phase with `S_φ = ν² h0 f⁻²` sampled at
/// 100 Hz, Π-counted at 1 s. The oversampling keeps the missing aliased
/// power above the synthesis Nyquist frequency out of the 1 s gates.
fn white_fm(h0: f64, seconds: usize, seed: u64) -> FrequencySeries {
    let dt = 0.01;
    let x = gen_powerlaw(
        &NoiseSpec::single(-2, NU * NU * h0),
        seconds * 100 + 1,
        dt,
        seed,
    )
    .unwrap();
    count_pi(&x, 1.0).unwrap()
}

#[test]
fn white_fm_adev_law() {
    let h0 = 2e-26;
    let y = white_fm(h0, 40_000, 3);
    let curve = stability_deviation(&y, Estimator::Oadev, &TauGrid::Octave).unwrap();
    let at1 = curve.at(1.0).unwrap().dev;
    assert!((at1 / 1e-13 - 1.0).abs() < 0.1, "{at1}");
    for p in &curve.points {
        if p.tau_s <= 256.0 {
            let expected = (h0 / (2.0 * p.tau_s)).sqrt();
            assert!(
                (p.dev / expected - 1.0).abs() < 0.1,
                "τ {}: {}",
                p.tau_s,
                p.dev
            );
        }
    }
}

#[test]
fn white_pm_lambda_mdev_slope() {
    let x = gen_powerlaw(&NoiseSpec::single(0, 1e-3), 400_001, 1e-3, 9).unwrap();
    let y = count_lambda(&x, 1.0, 1000.0).unwrap();
    let curve = stability_deviation(&y, Estimator::Mdev, &TauGrid::Octave).unwrap();
    let fit = fit_loglog_slope(&curve, 1.0, 100.0).unwrap();
    assert!((fit.exponent + 1.5).abs() < 0.1, "{}", fit.exponent);
}

#[test]
fn psd_and_deviation_slopes_are_consistent() {
    // (alpha of S_φ, expected ADEV slope, expected MDEV slope)
    let cases = [(0, -1.0, -1.5), (-2, -0.5, -0.5), (-3, 0.0, 0.0)];
    for (alpha, adev_slope, mdev_slope) in cases {
        let x = gen_powerlaw(
            &NoiseSpec::single(alpha, 1.0),
            1 << 18,
            0.01,
            40 + alpha.unsigned_abs() as u64,
        )
        .unwrap();
        let psd = phase_psd(&x, &PsdMethod::default()).unwrap();
        let s_psd = fit_loglog_slope(&psd.log_binned(10), 0.01, 10.0)
            .unwrap()
            .exponent;
        assert!(
            (s_psd - alpha as f64).abs() < 0.15,
            "alpha {alpha}: psd {s_psd}"
        );
        let y = count_pi(&x, 0.01).unwrap();
        for (est, expected) in [
            (Estimator::Oadev, adev_slope),
            (Estimator::Mdev, mdev_slope),
        ] {
            let c = stability_deviation(&y, est, &TauGrid::Octave).unwrap();
            let s = fit_loglog_slope(&c, 0.04, 40.0).unwrap().exponent;
            assert!((s - expected).abs() < 0.15, "alpha {alpha} {est}: {s}");
        }
    }
}

fn scaled(y: &FrequencySeries, k: f64) -> FrequencySeries {
    FrequencySeries::new(
        y.t0(),
        y.gate_s(),
        y.kind(),
        y.carrier_hz(),
        y.y().iter().map(|v| v * k).collect(),
    )
    .unwrap()
}

#[test]
fn scale_equivariance() {
    let y = white_fm(1e-26, 4096, 1);
    // A power of two scales every floating-point operation exactly.
    let b8 = scaled(&y, 8.0);
    assert_eq!(b8.mean().unwrap(), 8.0 * y.mean().unwrap());
    let k = 7.25;
    let bk = scaled(&y, k);
    // The mean of zero-mean noise is a cancellation residual: compare it at
    // the scale of the samples.
    let amp = y.y().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((bk.mean().unwrap() - k * y.mean().unwrap()).abs() < 1e-12 * k * amp);
    for est in [Estimator::Adev, Estimator::Oadev, Estimator::Mdev] {
        let a = stability_deviation(&y, est, &TauGrid::Octave).unwrap();
        let b = stability_deviation(&b8, est, &TauGrid::Octave).unwrap();
        let c = stability_deviation(&bk, est, &TauGrid::Octave).unwrap();
        for ((p, q), r) in a.points.iter().zip(&b.points).zip(&c.points) {
            assert_eq!(q.dev, 8.0 * p.dev, "{est} at {}", p.tau_s);
            assert!(
                (r.dev / (k * p.dev) - 1.0).abs() < 1e-12,
                "{est} at {}",
                p.tau_s
            );
        }
    }
}

#[test]
fn gap_robustness() {
    let y = white_fm(1e-26, 20_000, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let drop: Vec<usize> = sample(&mut rng, y.len(), y.len() / 200).into_vec();
    let gapped = y.with_gap_at(&drop);
    for est in [Estimator::Oadev, Estimator::Mdev] {
        let a = stability_deviation(&y, est, &TauGrid::Octave).unwrap();
        let b = stability_deviation(&gapped, est, &TauGrid::Octave).unwrap();
        for p in &a.points {
            if let Some(q) = b.at(p.tau_s) {
                assert!(
                    (q.dev - p.dev).abs() < p.ci,
                    "{est} at {}: {} vs {}",
                    p.tau_s,
                    q.dev,
                    p.dev
                );
            }
        }
    }
}

fn detrended_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let t: Vec<f64> = (0..x.len()).map(|i| i as f64).collect();
    let (mt, mx) = (common::mean(&t), common::mean(x));
    let b = t
        .iter()
        .zip(x)
        .map(|(a, v)| (a - mt) * (v - mx))
        .sum::<f64>()
        / t.iter().map(|a| (a - mt).powi(2)).sum::<f64>();
    x.iter()
        .zip(&t)
        .map(|(v, a)| (v - mx - b * (a - mt)).powi(2))
        .sum::<f64>()
        / n
}

#[test]
fn parseval_consistency() {
    // Stationary input for Welch; a non-stationary mix for Blackman-Tukey,
    // whose lag-zero term is the full-record variance.
    let white = gen_powerlaw(&NoiseSpec::single(0, 2e-3), 1 << 16, 1e-3, 3).unwrap();
    let welch = phase_psd(&white, &PsdMethod::default()).unwrap();
    let v = detrended_variance(white.values());
    assert!((welch.integrated_power() / v - 1.0).abs() < 0.1);

    let mix = gen_powerlaw(
        &NoiseSpec::single(-2, 1.0).with_term(0, 0.1),
        1 << 16,
        0.01,
        4,
    )
    .unwrap();
    let bt = phase_psd(
        &mix,
        &PsdMethod::BlackmanTukey(BlackmanTukeyParams::default()),
    )
    .unwrap();
    let v = detrended_variance(mix.values());
    assert!(
        (bt.integrated_power() / v - 1.0).abs() < 0.1,
        "{} vs {v}",
        bt.integrated_power()
    );
}

#[test]
fn welch_and_blackman_tukey_agree() {
    let x = gen_powerlaw(&NoiseSpec::single(0, 1e-3), 1 << 18, 1e-3, 8).unwrap();
    let w = phase_psd(&x, &PsdMethod::default()).unwrap();
    let b = phase_psd(
        &x,
        &PsdMethod::BlackmanTukey(BlackmanTukeyParams::default()),
    )
    .unwrap();
    for (lo, hi) in [(1.0, 10.0), (10.0, 100.0), (100.0, 400.0)] {
        let (a, c) = (w.band_mean(lo, hi).unwrap(), b.band_mean(lo, hi).unwrap());
        assert!((a / c - 1.0).abs() < 0.1, "[{lo},{hi}]: {a} vs {c}");
    }
}

#[test]
fn constant_series_has_zero_deviation() {
    let y = FrequencySeries::new(
        1.0,
        1.0,
        fiberlink_core::CounterKind::Lambda,
        NU,
        vec![3e-18; 1000],
    )
    .unwrap();
    for est in [Estimator::Adev, Estimator::Oadev, Estimator::Mdev] {
        assert_eq!(deviation_at(&y, est, 10.0).unwrap().unwrap().dev, 0.0);
    }
}

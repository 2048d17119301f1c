mod common;

use fiberlink_core::stats::{fit_loglog_slope, phase_psd, PsdMethod};
use fiberlink_core::{cross_correlation, gen_correlated_pair, gen_powerlaw, NoiseSpec, Sampled};

const N: usize = 1 << 20;

#[test]
fn white_pm_level_matches_spec() {
    let x = gen_powerlaw(&NoiseSpec::single(0, 1e-3), N, 1e-3, 11).unwrap();
    let psd = phase_psd(&x, &PsdMethod::default()).unwrap();
    // Octave-band means: a single Welch bin scatters by ~40 %.
    let mut lo: f64 = 0.1;
    while lo < 100.0 {
        let hi = (2.0 * lo).min(100.0);
        let s = psd.band_mean(lo, hi).unwrap();
        assert!((s / 1e-3 - 1.0).abs() < 0.2, "S[{lo}, {hi}] = {s}");
        lo = hi;
    }
}

#[test]
fn flicker_fm_slope_with_independent_oracle() {
    let x = gen_powerlaw(&NoiseSpec::single(-3, 1e-2), N, 1.0, 5).unwrap();
    let psd = phase_psd(&x, &PsdMethod::default()).unwrap();
    let fit = fit_loglog_slope(&psd.log_binned(10), 5e-4, 5e-2).unwrap();
    assert!(
        (fit.exponent + 3.0).abs() < 0.1,
        "library slope {}",
        fit.exponent
    );

    let freqs = common::log_spaced(5e-4, 5e-2, 25);
    let oracle = common::direct_periodogram(x.values(), 1.0, 4, &freqs);
    let slope = common::loglog_slope(&freqs, &oracle);
    assert!((slope + 3.0).abs() < 0.1, "oracle slope {slope}");
    // Absolute level: 1e-2 f^-3 within a factor of two on average.
    let ratio: Vec<f64> = freqs
        .iter()
        .zip(&oracle)
        .map(|(f, s)| (s / (1e-2 * f.powi(-3))).ln())
        .collect();
    assert!(common::mean(&ratio).abs() < 2f64.ln());
}

#[test]
fn every_single_term_slope_within_tenth() {
    // Fit bands keep several resolution bins above the lowest frequency and
    // stay below the Nyquist roll-off of the window.
    for alpha in [0, -1, -2, -3, -4] {
        let x = gen_powerlaw(
            &NoiseSpec::single(alpha, 1.0),
            N,
            1.0,
            100 + alpha.unsigned_abs() as u64,
        )
        .unwrap();
        let psd = phase_psd(&x, &PsdMethod::default()).unwrap();
        let fit = fit_loglog_slope(&psd.log_binned(10), 1e-4, 1e-1).unwrap();
        assert!(
            (fit.exponent - alpha as f64).abs() < 0.1,
            "alpha {alpha}: fitted {}",
            fit.exponent
        );
    }
}

#[test]
fn amplitude_scales_psd_linearly() {
    let spec = NoiseSpec::single(-2, 3.0);
    let a = gen_powerlaw(&spec, 1 << 16, 0.1, 9).unwrap();
    let b = gen_powerlaw(&spec.scaled(16.0), 1 << 16, 0.1, 9).unwrap();
    let pa = phase_psd(&a, &PsdMethod::default()).unwrap();
    let pb = phase_psd(&b, &PsdMethod::default()).unwrap();
    let ratio = pb.band_power(0.01, 5.0) / pa.band_power(0.01, 5.0);
    assert!((ratio / 16.0 - 1.0).abs() < 1e-9, "{ratio}");
}

#[test]
fn deterministic_and_seed_sensitive() {
    let spec = NoiseSpec::single(-3, 1.0).with_term(0, 1e-3);
    let a = gen_powerlaw(&spec, 5000, 0.01, 42).unwrap();
    let b = gen_powerlaw(&spec, 5000, 0.01, 42).unwrap();
    let c = gen_powerlaw(&spec, 5000, 0.01, 43).unwrap();
    assert_eq!(a.values(), b.values());
    assert_ne!(a.values(), c.values());
}

#[test]
fn uncorrelated_pair_over_twenty_seeds() {
    let n = 1_000_000;
    let bound = 3.0 / (n as f64).sqrt();
    let spec = NoiseSpec::single(0, 1.0);
    let mut inside = 0;
    for seed in 0..20 {
        let (a, b) = gen_correlated_pair(&spec, 0.0, n, 1.0, seed).unwrap();
        let r = common::pearson(a.values(), b.values());
        if r.abs() < bound {
            inside += 1;
        }
    }
    // A 3σ bound: at most one excursion expected among twenty draws.
    assert!(inside >= 19, "{inside}/20 within 3/sqrt(n)");
}

#[test]
fn highly_correlated_pair_one_minus_r() {
    let n = 1_000_000;
    let spec = NoiseSpec::single(0, 1.0);
    for seed in [1, 2, 3] {
        let (a, b) = gen_correlated_pair(&spec, 1.0 - 1e-4, n, 1.0, seed).unwrap();
        let c = cross_correlation(&a, &b).unwrap();
        let omr = c.one_minus_r.unwrap();
        assert!(omr > 1e-4 / 3.0 && omr < 3e-4, "1-r = {omr}");
        let oracle = 1.0 - common::pearson(a.values(), b.values());
        assert!((omr / oracle - 1.0).abs() < 1e-3, "{omr} vs {oracle}");
    }
}

#[test]
fn pair_at_point_nine_and_swap_symmetry() {
    let n = 1_000_000;
    let (a, b) = gen_correlated_pair(&NoiseSpec::single(0, 1.0), 0.9, n, 1.0, 77).unwrap();
    let ab = cross_correlation(&a, &b).unwrap();
    let ba = cross_correlation(&b, &a).unwrap();
    assert_eq!(ab.r, ba.r);
    // Sampling error of r is about (1 - rho^2)/sqrt(n) = 1.9e-4.
    assert!((ab.r - 0.9).abs() < 1e-3, "r = {}", ab.r);
}

#[test]
fn pair_marginals_match_spec() {
    let spec = NoiseSpec::single(0, 2e-3);
    let (a, b) = gen_correlated_pair(&spec, 0.5, 1 << 18, 1e-3, 3).unwrap();
    for x in [a, b] {
        let psd = phase_psd(&x, &PsdMethod::default()).unwrap();
        let level = psd.band_mean(1.0, 400.0).unwrap();
        assert!((level / 2e-3 - 1.0).abs() < 0.05, "{level}");
    }
}

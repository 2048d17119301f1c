//! Allan-family stability estimators on fractional-frequency data.
//!
//! Gaps are skipped. Every estimator is built from means of `m` adjacent
//! frequency samples; a window mean averages its valid samples and is used
//! only when at least [`MIN_WINDOW_VALID_FRACTION`] of the window is valid,
//! so sparse dropouts cost few terms while short windows must be complete.
//! Window sums come from prefix sums of the series referenced to its first
//! valid sample, so a constant series gives exactly zero.
//!
//! Deviations are computed on whatever counter data is supplied. Note that
//! an ADEV computed from Λ-counted data is biased low at short τ compared
//! with Π data (the Λ weighting already averages over two gates); the two
//! converge at long τ.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::series::{CounterKind, FrequencySeries, Sampled};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    /// Non-overlapping Allan deviation.
    Adev,
    /// Overlapping Allan deviation.
    Oadev,
    /// Modified Allan deviation.
    Mdev,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Adev => "ADEV",
            Estimator::Oadev => "OADEV",
            Estimator::Mdev => "MDEV",
        })
    }
}

/// τ values to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum TauGrid {
    /// `gate × 2^k` up to a quarter of the record.
    Octave,
    /// Ten log-spaced points per decade (rounded to whole gates).
    Dense,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityPoint {
    pub tau_s: f64,
    pub dev: f64,
    /// 1σ confidence half-width.
    pub ci: f64,
    pub terms: usize,
    pub edf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCurve {
    pub estimator: Estimator,
    pub source_kind: CounterKind,
    pub points: Vec<StabilityPoint>,
}

impl StabilityCurve {
    pub fn taus(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.tau_s).collect()
    }

    pub fn devs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.dev).collect()
    }

    pub fn at(&self, tau_s: f64) -> Option<&StabilityPoint> {
        self.points
            .iter()
            .find(|p| (p.tau_s - tau_s).abs() <= 1e-9 * tau_s)
    }
}

/// Smallest valid fraction of an averaging window for its mean to be used.
/// Windows shorter than ten gates therefore need every sample.
pub const MIN_WINDOW_VALID_FRACTION: f64 = 0.9;

/// Prefix sums used by all estimators.
struct Prepared {
    n: usize,
    gate: f64,
    /// `sum[k]` = sum of referenced `y[0..k]`, gaps as zero.
    sum: Vec<f64>,
    /// `valid[k]` = number of valid samples in `y[0..k]`.
    valid: Vec<usize>,
}

impl Prepared {
    fn new(y: &FrequencySeries) -> Self {
        let values = y.values();
        let gaps = y.gaps();
        let reference = (0..values.len())
            .find(|&i| !gaps[i])
            .map(|i| values[i])
            .unwrap_or(0.0);
        let n = values.len();
        let mut sum = Vec::with_capacity(n + 1);
        let mut valid = Vec::with_capacity(n + 1);
        sum.push(0.0);
        valid.push(0);
        let (mut s, mut c) = (0.0, 0usize);
        for i in 0..n {
            if !gaps[i] {
                s += values[i] - reference;
                c += 1;
            }
            sum.push(s);
            valid.push(c);
        }
        Self {
            n,
            gate: y.gate_s(),
            sum,
            valid,
        }
    }

    /// Differences `D(i) = A(i+m) - A(i)` of adjacent window means, `None`
    /// where either window is too sparse.
    fn window_differences(&self, m: usize) -> Vec<Option<f64>> {
        let need = (MIN_WINDOW_VALID_FRACTION * m as f64).ceil() as usize;
        let means: Vec<Option<f64>> = (0..=self.n - m)
            .map(|s| {
                let c = self.valid[s + m] - self.valid[s];
                (c >= need.max(1)).then(|| (self.sum[s + m] - self.sum[s]) / c as f64)
            })
            .collect();
        (0..=self.n - 2 * m)
            .map(|i| Some(means[i + m]? - means[i]?))
            .collect()
    }

    fn allan(&self, m: usize, stride: usize) -> Option<(f64, usize)> {
        if 2 * m > self.n {
            return None;
        }
        let (acc, terms) = self
            .window_differences(m)
            .into_iter()
            .step_by(stride)
            .flatten()
            .fold((0.0, 0usize), |(a, t), d| (a + d * d, t + 1));
        (terms > 0).then(|| ((acc / (2.0 * terms as f64)).sqrt(), terms))
    }

    /// `mod σ² = ½ ⟨(mean of D over m consecutive starts)²⟩`, which equals
    /// the phase form `⟨(Σ x_{j+2m} - 2x_{j+m} + x_j)²⟩ / (2 m² τ²)`.
    fn modified(&self, m: usize) -> Option<(f64, usize)> {
        if 3 * m > self.n + 1 {
            return None;
        }
        let d = self.window_differences(m);
        let mut psum = Vec::with_capacity(d.len() + 1);
        let mut pbad = Vec::with_capacity(d.len() + 1);
        psum.push(0.0);
        pbad.push(0usize);
        for v in &d {
            psum.push(psum.last().unwrap() + v.unwrap_or(0.0));
            pbad.push(pbad.last().unwrap() + usize::from(v.is_none()));
        }
        let mut acc = 0.0;
        let mut terms = 0usize;
        for j in 0..=(d.len() - m) {
            if pbad[j + m] != pbad[j] {
                continue;
            }
            let t = (psum[j + m] - psum[j]) / m as f64;
            acc += t * t;
            terms += 1;
        }
        (terms > 0).then(|| ((acc / (2.0 * terms as f64)).sqrt(), terms))
    }

    /// Number of terms a gap-free record of the same length would give.
    fn full_terms(&self, estimator: Estimator, m: usize) -> usize {
        match estimator {
            Estimator::Adev => (self.n - 2 * m) / m + 1,
            Estimator::Oadev => self.n - 2 * m + 1,
            Estimator::Mdev => self.n + 2 - 3 * m,
        }
    }
}

fn edf(estimator: Estimator, terms: usize, full_terms: usize, m: usize, n: usize) -> f64 {
    let (tf, mf, nf) = (terms as f64, m as f64, n as f64);
    let raw = match estimator {
        Estimator::Adev => tf,
        // Overlapping estimate, white-FM approximation, scaled down by the
        // fraction of terms lost to gaps.
        Estimator::Oadev => {
            (3.0 * (nf - 1.0) / (2.0 * mf) - 2.0 * (nf - 2.0) / nf) * 4.0 * mf * mf
                / (4.0 * mf * mf + 5.0)
                * tf
                / full_terms as f64
        }
        // Roughly one independent term per m samples.
        Estimator::Mdev => tf / mf,
    };
    raw.clamp(1.0, tf.max(1.0))
}

fn point(prep: &Prepared, estimator: Estimator, m: usize) -> Option<StabilityPoint> {
    let (dev, terms) = match estimator {
        Estimator::Adev => prep.allan(m, m)?,
        Estimator::Oadev => prep.allan(m, 1)?,
        Estimator::Mdev => prep.modified(m)?,
    };
    if terms < 4 {
        return None;
    }
    let edf = edf(estimator, terms, prep.full_terms(estimator, m), m, prep.n);
    Some(StabilityPoint {
        tau_s: m as f64 * prep.gate,
        dev,
        // Normal approximation to the χ² spread of the variance estimate.
        ci: dev / (2.0 * edf).sqrt(),
        terms,
        edf,
    })
}

fn averaging_factor(tau_s: f64, gate_s: f64) -> Result<usize> {
    let ratio = tau_s / gate_s;
    let m = ratio.round();
    if m.is_nan() || m < 1.0 || (ratio - m).abs() > 1e-6 * ratio {
        return Err(invalid(
            "tau",
            format!("{tau_s} s is not a whole multiple of the {gate_s} s gate"),
        ));
    }
    Ok(m as usize)
}

fn grid_factors(grid: &TauGrid, gate: f64, max_m: usize) -> Result<Vec<usize>> {
    let mut ms = match grid {
        TauGrid::Octave => {
            let mut v = Vec::new();
            let mut m = 1usize;
            while m <= max_m {
                v.push(m);
                m *= 2;
            }
            v
        }
        TauGrid::Dense => {
            let mut v = Vec::new();
            let mut k = 0;
            loop {
                let m = 10f64.powf(k as f64 / 10.0).round() as usize;
                if m > max_m {
                    break;
                }
                v.push(m);
                k += 1;
            }
            v
        }
        TauGrid::Explicit(taus) => taus
            .iter()
            .map(|t| averaging_factor(*t, gate))
            .collect::<Result<Vec<_>>>()?,
    };
    ms.sort_unstable();
    ms.dedup();
    ms.retain(|m| *m <= max_m);
    Ok(ms)
}

/// Deviation curve of `y` for `taus`. τ values above a quarter of the record
/// or with fewer than four contributing differences are omitted.
pub fn stability_deviation(
    y: &FrequencySeries,
    estimator: Estimator,
    taus: &TauGrid,
) -> Result<StabilityCurve> {
    if y.len() < 8 {
        return Err(Error::RecordTooShort(format!(
            "{} samples, need at least 8 gates",
            y.len()
        )));
    }
    let prep = Prepared::new(y);
    let max_m = y.len() / 4;
    let points = grid_factors(taus, y.gate_s(), max_m)?
        .into_iter()
        .filter_map(|m| point(&prep, estimator, m))
        .collect();
    Ok(StabilityCurve {
        estimator,
        source_kind: y.kind(),
        points,
    })
}

/// Single deviation at `tau_s`, `None` when it cannot be formed.
pub fn deviation_at(
    y: &FrequencySeries,
    estimator: Estimator,
    tau_s: f64,
) -> Result<Option<StabilityPoint>> {
    let m = averaging_factor(tau_s, y.gate_s())?;
    if y.len() < 8 || m > y.len() / 4 {
        return Ok(None);
    }
    Ok(point(&Prepared::new(y), estimator, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(y: Vec<f64>) -> FrequencySeries {
        FrequencySeries::new(1.0, 1.0, CounterKind::Pi, 1.0, y).unwrap()
    }

    /// Direct textbook sums, O(N m).
    fn brute_oadev(y: &[f64], m: usize) -> f64 {
        let n = y.len();
        let avg = |i: usize| y[i..i + m].iter().sum::<f64>() / m as f64;
        let terms: Vec<f64> = (0..=n - 2 * m)
            .map(|i| (avg(i + m) - avg(i)).powi(2))
            .collect();
        (terms.iter().sum::<f64>() / (2.0 * terms.len() as f64)).sqrt()
    }

    fn brute_mdev(y: &[f64], m: usize) -> f64 {
        let mut x = vec![0.0];
        for v in y {
            x.push(x.last().unwrap() + v);
        }
        let n = x.len();
        let mut acc = 0.0;
        let mut count = 0;
        for j in 0..=n - 3 * m {
            let s: f64 = (j..j + m)
                .map(|i| x[i + 2 * m] - 2.0 * x[i + m] + x[i])
                .sum();
            acc += s * s;
            count += 1;
        }
        (acc / (2.0 * (m as f64).powi(4) * count as f64)).sqrt()
    }

    fn pseudo_random(n: usize) -> Vec<f64> {
        let mut state = 0x1234_5678_u64;
        (0..n)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn matches_brute_force() {
        let y = pseudo_random(400);
        let s = series(y.clone());
        for m in [1, 2, 3, 7, 25, 100] {
            let o = deviation_at(&s, Estimator::Oadev, m as f64)
                .unwrap()
                .unwrap();
            assert!(
                (o.dev / brute_oadev(&y, m) - 1.0).abs() < 1e-9,
                "oadev m={m}"
            );
            let d = deviation_at(&s, Estimator::Mdev, m as f64)
                .unwrap()
                .unwrap();
            assert!((d.dev / brute_mdev(&y, m) - 1.0).abs() < 1e-9, "mdev m={m}");
        }
    }

    #[test]
    fn mdev_equals_oadev_at_unit_factor() {
        let s = series(pseudo_random(300));
        let o = deviation_at(&s, Estimator::Oadev, 1.0).unwrap().unwrap();
        let d = deviation_at(&s, Estimator::Mdev, 1.0).unwrap().unwrap();
        assert!((o.dev - d.dev).abs() < 1e-12 * o.dev);
    }

    #[test]
    fn constant_gives_zero() {
        let s = series(vec![1e-17; 1000]);
        for est in [Estimator::Adev, Estimator::Oadev, Estimator::Mdev] {
            let c = stability_deviation(&s, est, &TauGrid::Octave).unwrap();
            assert!(!c.points.is_empty());
            assert!(c.points.iter().all(|p| p.dev == 0.0), "{est}");
        }
    }

    #[test]
    fn omits_long_taus() {
        let s = series(pseudo_random(100));
        let c = stability_deviation(
            &s,
            Estimator::Oadev,
            &TauGrid::Explicit(vec![1.0, 25.0, 26.0, 50.0]),
        )
        .unwrap();
        assert_eq!(c.taus(), vec![1.0, 25.0]);
    }

    #[test]
    fn rejects_short_series_and_bad_tau() {
        assert!(
            stability_deviation(&series(vec![0.0; 7]), Estimator::Oadev, &TauGrid::Octave).is_err()
        );
        let s = series(pseudo_random(100));
        assert!(deviation_at(&s, Estimator::Oadev, 1.5).is_err());
    }

    #[test]
    fn gaps_are_skipped() {
        let y = pseudo_random(200);
        let full = series(y.clone());
        let gapped = full.with_gap_at(&[50]);
        let g = deviation_at(&gapped, Estimator::Oadev, 1.0)
            .unwrap()
            .unwrap();
        let f = deviation_at(&full, Estimator::Oadev, 1.0).unwrap().unwrap();
        assert_eq!(g.terms, f.terms - 2);
        // Same sum without the two terms touching index 50.
        let kept: Vec<f64> = (0..199)
            .filter(|i| *i != 49 && *i != 50)
            .map(|i| (y[i + 1] - y[i]).powi(2))
            .collect();
        let expect = (kept.iter().sum::<f64>() / (2.0 * kept.len() as f64)).sqrt();
        assert!((g.dev / expect - 1.0).abs() < 1e-9);
    }

    #[test]
    fn octave_and_dense_grids() {
        let s = series(pseudo_random(1000));
        let o = stability_deviation(&s, Estimator::Oadev, &TauGrid::Octave).unwrap();
        assert_eq!(o.taus(), vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0]);
        let d = stability_deviation(&s, Estimator::Oadev, &TauGrid::Dense).unwrap();
        assert!(d.points.len() > o.points.len());
        assert!(d.taus().windows(2).all(|w| w[1] > w[0]));
        assert!(d.points.iter().all(|p| p.ci > 0.0));
    }

    #[test]
    fn sparse_gaps_average_valid_samples() {
        let y = pseudo_random(400);
        let gapped = series(y.clone()).with_gap_at(&[50, 333]);
        let m = 20;
        // Oracle: window means over valid samples, windows need 18 of 20.
        let mean = |s: usize| -> Option<f64> {
            let v: Vec<f64> = (s..s + m)
                .filter(|i| *i != 50 && *i != 333)
                .map(|i| y[i])
                .collect();
            (v.len() >= 18).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        let terms: Vec<f64> = (0..=400 - 2 * m)
            .filter_map(|i| Some((mean(i + m)? - mean(i)?).powi(2)))
            .collect();
        let expect = (terms.iter().sum::<f64>() / (2.0 * terms.len() as f64)).sqrt();
        let g = deviation_at(&gapped, Estimator::Oadev, m as f64)
            .unwrap()
            .unwrap();
        assert_eq!(g.terms, terms.len());
        assert_eq!(g.terms, 400 - 2 * m + 1);
        assert!((g.dev / expect - 1.0).abs() < 1e-9);
        // A window longer than 10 % missing is dropped.
        let holes: Vec<usize> = (100..103).collect();
        let sparse = series(y).with_gap_at(&holes);
        let s = deviation_at(&sparse, Estimator::Oadev, m as f64)
            .unwrap()
            .unwrap();
        assert!(s.terms < 400 - 2 * m + 1);
    }
}

//! One-sided phase power spectral density.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fft;
use crate::series::{PhaseSeries, Sampled};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchParams {
    pub segments: usize,
    pub overlap: f64,
}

impl Default for WelchParams {
    fn default() -> Self {
        Self {
            segments: 4,
            overlap: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlackmanTukeyParams {
    /// Maximum autocorrelation lag in samples; a tenth of the record when
    /// absent.
    pub max_lag: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PsdMethod {
    /// Averaged Hann-windowed periodograms of linearly detrended segments.
    Welch(WelchParams),
    /// Fourier transform of the Hann-lag-windowed autocovariance.
    BlackmanTukey(BlackmanTukeyParams),
}

impl Default for PsdMethod {
    fn default() -> Self {
        PsdMethod::Welch(WelchParams::default())
    }
}

/// `S_φ(f)` in rad²/Hz on a uniform frequency grid starting at DC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub density: Vec<f64>,
}

impl Psd {
    pub fn resolution(&self) -> f64 {
        self.freqs.get(1).copied().unwrap_or(0.0)
    }

    /// Rectangle-rule integral of the density over the whole grid.
    pub fn integrated_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.resolution()
    }

    /// Integral of the density over `[lo, hi]`.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        self.freqs
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, s)| s)
            .sum::<f64>()
            * self.resolution()
    }

    /// Mean density over `[lo, hi]`.
    pub fn band_mean(&self, lo: f64, hi: f64) -> Option<f64> {
        let (sum, n) = self
            .freqs
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .fold((0.0, 0usize), |(s, n), (_, d)| (s + d, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    /// Averages bins into logarithmically spaced bands (`per_decade` per
    /// decade), skipping DC. Useful before plotting or slope fitting.
    pub fn log_binned(&self, per_decade: usize) -> Psd {
        let mut freqs = Vec::new();
        let mut density = Vec::new();
        let df = self.resolution();
        if df == 0.0 || per_decade == 0 {
            return Psd { freqs, density };
        }
        let ratio = 10f64.powf(1.0 / per_decade as f64);
        let mut lo = df;
        let top = *self.freqs.last().unwrap();
        while lo <= top {
            let hi = lo * ratio;
            let (mut fs, mut ss, mut n) = (0.0, 0.0, 0usize);
            for (f, s) in self.freqs.iter().zip(&self.density) {
                if *f >= lo && *f < hi {
                    fs += f;
                    ss += s;
                    n += 1;
                }
            }
            if n > 0 {
                freqs.push(fs / n as f64);
                density.push(ss / n as f64);
            }
            lo = hi;
        }
        Psd { freqs, density }
    }
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

fn welch(x: &[f64], dt: f64, params: &WelchParams) -> Result<Psd> {
    if params.segments == 0 {
        return Err(invalid("segments", "need at least one segment"));
    }
    if !(0.0..1.0).contains(&params.overlap) {
        return Err(invalid("overlap", "must lie in [0, 1)"));
    }
    let k = params.segments as f64;
    let len = (x.len() as f64 / (1.0 + (k - 1.0) * (1.0 - params.overlap))).floor() as usize;
    if len < 8 {
        return Err(Error::RecordTooShort(format!(
            "segment length {len} is below 8 samples"
        )));
    }
    let step = ((len as f64 * (1.0 - params.overlap)).round() as usize).max(1);
    let window = hann(len);
    let norm = window.iter().map(|w| w * w).sum::<f64>();
    let bins = len / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut count = 0usize;
    let mut start = 0;
    while start + len <= x.len() && count < params.segments {
        let mut seg = x[start..start + len].to_vec();
        fft::detrend_linear(&mut seg);
        let mut buf: Vec<Complex64> = seg
            .iter()
            .zip(&window)
            .map(|(v, w)| Complex64::new(v * w, 0.0))
            .collect();
        fft::forward(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf[..bins]) {
            *a += c.norm_sqr();
        }
        count += 1;
        start += step;
    }
    let df = 1.0 / (len as f64 * dt);
    let density = acc
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let one_sided = if j == 0 || (len.is_multiple_of(2) && j == len / 2) {
                1.0
            } else {
                2.0
            };
            one_sided * dt * a / (norm * count as f64)
        })
        .collect();
    Ok(Psd {
        freqs: (0..bins).map(|j| j as f64 * df).collect(),
        density,
    })
}

fn blackman_tukey(x: &[f64], dt: f64, params: &BlackmanTukeyParams) -> Result<Psd> {
    let n = x.len();
    let max_lag = params.max_lag.unwrap_or(n / 10).min(n - 1);
    if max_lag < 8 {
        return Err(Error::RecordTooShort(format!(
            "maximum lag {max_lag} is below 8 samples"
        )));
    }
    let mut x = x.to_vec();
    fft::detrend_linear(&mut x);

    // Biased autocovariance through a zero-padded transform.
    let padded = (2 * n).next_power_of_two();
    let mut buf = vec![Complex64::default(); padded];
    for (b, v) in buf.iter_mut().zip(&x) {
        b.re = *v;
    }
    fft::forward(&mut buf);
    for c in &mut buf {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    fft::inverse(&mut buf);
    let acov: Vec<f64> = buf[..max_lag]
        .iter()
        .map(|c| c.re / (padded as f64 * n as f64))
        .collect();

    let len = 2 * max_lag;
    let mut lagged = vec![Complex64::default(); len];
    for (k, r) in acov.iter().enumerate() {
        let w = 0.5 * (1.0 + (std::f64::consts::PI * k as f64 / max_lag as f64).cos());
        lagged[k].re = w * r;
        if k > 0 {
            lagged[len - k].re = w * r;
        }
    }
    fft::forward(&mut lagged);
    let bins = max_lag + 1;
    let df = 1.0 / (len as f64 * dt);
    let density = lagged[..bins]
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let one_sided = if j == 0 || j == max_lag { 1.0 } else { 2.0 };
            one_sided * dt * c.re
        })
        .collect();
    Ok(Psd {
        freqs: (0..bins).map(|j| j as f64 * df).collect(),
        density,
    })
}

/// One-sided PSD of a gap-free phase series.
pub fn phase_psd(x: &PhaseSeries, method: &PsdMethod) -> Result<Psd> {
    if x.has_gaps() {
        return Err(Error::GappedInput("phase_psd"));
    }
    if x.len() < 8 {
        return Err(Error::RecordTooShort(format!(
            "{} samples, need at least 8",
            x.len()
        )));
    }
    match method {
        PsdMethod::Welch(p) => welch(x.values(), x.dt(), p),
        PsdMethod::BlackmanTukey(p) => blackman_tukey(x.values(), x.dt(), p),
    }
}

//! Reproducible stochastic processes: power-law phase noise, correlated
//! noise pairs and slow temperature processes.
//!
//! Power-law noise is synthesized in the frequency domain. A white Gaussian
//! sequence is transformed, each bin is multiplied by the square root of the
//! target one-sided PSD, and the result is transformed back. The synthesis
//! length is twice the requested length (rounded up to a power of two) and
//! only the first half is kept, so the output is not circularly wrapped.
//! Series containing random-walk-like terms (`alpha <= -2`) get one linear
//! detrend afterwards.
//!
//! # Seeds
//!
//! Every generator takes a single 64-bit seed and draws from a ChaCha8
//! stream. Independent parts of one draw use distinct ChaCha stream ids
//! (see [`stream`]), and composite simulations derive per-component seeds
//! with [`derive_seed`], so each part is reproducible on its own.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fft;
use crate::series::{PhaseSeries, TemperatureSeries};

/// Optical carrier used throughout the default configuration, in Hz.
pub const DEFAULT_CARRIER_HZ: f64 = 194.4e12;

/// Internal sample rate used when phase is generated for counter emulation.
pub const DEFAULT_INTERNAL_RATE_HZ: f64 = 1000.0;

/// Supported phase-PSD exponents, white PM through random-walk FM.
pub const SUPPORTED_ALPHAS: [i32; 5] = [0, -1, -2, -3, -4];

/// ChaCha stream ids used inside a single generator call.
pub mod stream {
    pub const POWERLAW: u64 = 0;
    pub const PAIR_COMMON: u64 = 1;
    pub const PAIR_FIRST: u64 = 2;
    pub const PAIR_SECOND: u64 = 3;
    pub const TEMPERATURE: u64 = 4;
}

const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of component `offset` of a composite run seeded with `master`:
/// `master + offset * 0x9E3779B97F4A7C15` (wrapping).
pub fn derive_seed(master: u64, offset: u64) -> u64 {
    master.wrapping_add(offset.wrapping_mul(SEED_STRIDE))
}

fn rng(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

fn default_carrier() -> f64 {
    DEFAULT_CARRIER_HZ
}

/// One power-law term `S_φ(f) = amplitude * f^alpha` (rad²/Hz, `f` in Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseTerm {
    pub alpha: i32,
    pub amplitude: f64,
}

/// Piecewise power-law phase-noise spectrum.
///
/// The spectrum is the sum of its terms below `high_freq_cutoff_hz` and zero
/// above it. A missing cutoff means the Nyquist frequency of whatever series
/// is generated from the spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub terms: Vec<NoiseTerm>,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    #[serde(default)]
    pub high_freq_cutoff_hz: Option<f64>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::silent()
    }
}

impl NoiseSpec {
    pub fn silent() -> Self {
        Self {
            terms: Vec::new(),
            carrier_hz: DEFAULT_CARRIER_HZ,
            high_freq_cutoff_hz: None,
        }
    }

    pub fn single(alpha: i32, amplitude: f64) -> Self {
        Self::silent().with_term(alpha, amplitude)
    }

    pub fn with_term(mut self, alpha: i32, amplitude: f64) -> Self {
        self.terms.push(NoiseTerm { alpha, amplitude });
        self
    }

    pub fn with_carrier(mut self, carrier_hz: f64) -> Self {
        self.carrier_hz = carrier_hz;
        self
    }

    pub fn with_cutoff(mut self, cutoff_hz: f64) -> Self {
        self.high_freq_cutoff_hz = Some(cutoff_hz);
        self
    }

    /// Multiplies every term amplitude by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.amplitude *= factor;
        }
        out
    }

    pub fn is_silent(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == 0.0)
    }

    fn is_white(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.alpha == 0 || t.amplitude == 0.0)
    }

    /// Target one-sided PSD at `f` (no cutoff applied).
    pub fn psd_at(&self, f: f64) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.amplitude != 0.0)
            .map(|t| t.amplitude * f.powi(t.alpha))
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if !SUPPORTED_ALPHAS.contains(&t.alpha) {
                return Err(Error::UnsupportedExponent(t.alpha));
            }
            if !(t.amplitude >= 0.0 && t.amplitude.is_finite()) {
                return Err(invalid(
                    "amplitude",
                    format!("must be finite and >= 0, got {}", t.amplitude),
                ));
            }
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return Err(invalid(
                "carrier_hz",
                format!("must be positive, got {}", self.carrier_hz),
            ));
        }
        if let Some(fc) = self.high_freq_cutoff_hz {
            if !(fc > 0.0 && fc.is_finite()) {
                return Err(invalid(
                    "high_freq_cutoff_hz",
                    format!("must be positive, got {fc}"),
                ));
            }
        }
        Ok(())
    }

    /// Effective cutoff for a series with step `dt`.
    pub fn cutoff_for(&self, dt: f64) -> Result<f64> {
        let nyquist = 0.5 / dt;
        match self.high_freq_cutoff_hz {
            None => Ok(nyquist),
            Some(fc) if fc <= nyquist * (1.0 + 1e-9) => Ok(fc.min(nyquist)),
            Some(fc) => Err(invalid(
                "high_freq_cutoff_hz",
                format!("cutoff {fc} Hz is above the Nyquist frequency {nyquist} Hz"),
            )),
        }
    }
}

fn check_grid(n: usize, dt: f64) -> Result<()> {
    if n < 2 {
        return Err(invalid("n", format!("need at least 2 samples, got {n}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    Ok(())
}

/// Record-length check for coloured terms: the band between the
/// fundamental `1/(n dt)` and the cutoff must span at least one decade, and
/// a warning is logged below two decades (fewer than 10 periods of the
/// lowest resolved decade).
fn check_record_length(spec: &NoiseSpec, n: usize, dt: f64, cutoff: f64) -> Result<()> {
    let coloured = spec.terms.iter().any(|t| t.alpha < 0 && t.amplitude > 0.0);
    if !coloured {
        return Ok(());
    }
    let span = n as f64 * dt * cutoff;
    if span < 10.0 {
        return Err(Error::RecordTooShort(format!(
            "{n} samples at {dt} s resolve less than one decade below the {cutoff} Hz cutoff"
        )));
    }
    if span < 100.0 {
        log::warn!(
            "record of {} s covers fewer than 10 periods of its lowest decade; low-frequency terms are poorly resolved",
            n as f64 * dt
        );
    }
    Ok(())
}

fn white_draws(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Raw shaped samples for `spec`, without series metadata.
fn shaped(spec: &NoiseSpec, n: usize, dt: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    spec.validate()?;
    check_grid(n, dt)?;
    let cutoff = spec.cutoff_for(dt)?;
    check_record_length(spec, n, dt, cutoff)?;
    if spec.is_silent() {
        return Ok(vec![0.0; n]);
    }

    // A flat spectrum up to Nyquist needs no shaping: scale the white draws.
    if spec.is_white() && cutoff >= 0.5 / dt {
        let level = spec.psd_at(1.0);
        let sigma = (level / (2.0 * dt)).sqrt();
        return Ok(white_draws(rng, n).into_iter().map(|v| v * sigma).collect());
    }

    let m = (2 * n).next_power_of_two();
    let mut buf = fft::from_real(&white_draws(rng, m));
    fft::forward(&mut buf);
    let df = 1.0 / (m as f64 * dt);
    buf[0] = Default::default();
    for j in 1..=m / 2 {
        let f = j as f64 * df;
        let gain = if f <= cutoff * (1.0 + 1e-12) {
            (spec.psd_at(f) / (2.0 * dt)).sqrt()
        } else {
            0.0
        };
        buf[j] *= gain;
        if j != m / 2 {
            buf[m - j] *= gain;
        }
    }
    fft::inverse(&mut buf);
    let scale = 1.0 / m as f64;
    let mut x: Vec<f64> = buf[..n].iter().map(|c| c.re * scale).collect();
    if spec
        .terms
        .iter()
        .any(|t| t.alpha <= -2 && t.amplitude > 0.0)
    {
        fft::detrend_linear(&mut x);
    }
    Ok(x)
}

/// Power-law phase noise with one-sided PSD given by `spec`, `n` samples at
/// step `dt`, starting at `t = 0`.
pub fn gen_powerlaw(spec: &NoiseSpec, n: usize, dt: f64, seed: u64) -> Result<PhaseSeries> {
    let mut rng = rng(seed, stream::POWERLAW);
    let x = shaped(spec, n, dt, &mut rng)?;
    PhaseSeries::new(0.0, dt, spec.carrier_hz, x)
}

/// Two series with the marginal spectrum of `spec` and population Pearson
/// correlation `rho`.
///
/// Each output is `sqrt(rho) * common + sqrt(1 - rho) * own`, where
/// `common` and the two `own` parts are independent draws of `spec`.
pub fn gen_correlated_pair(
    spec: &NoiseSpec,
    rho: f64,
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<(PhaseSeries, PhaseSeries)> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(invalid("rho", format!("must lie in [0, 1], got {rho}")));
    }
    let draw = |stream_id| shaped(spec, n, dt, &mut rng(seed, stream_id));
    let (first, second) = if rho == 1.0 {
        let common = draw(stream::PAIR_COMMON)?;
        (common.clone(), common)
    } else if rho == 0.0 {
        (draw(stream::PAIR_FIRST)?, draw(stream::PAIR_SECOND)?)
    } else {
        let common = draw(stream::PAIR_COMMON)?;
        let a = draw(stream::PAIR_FIRST)?;
        let b = draw(stream::PAIR_SECOND)?;
        let wc = rho.sqrt();
        let wi = (1.0 - rho).sqrt();
        let mix = |own: Vec<f64>| -> Vec<f64> {
            common
                .iter()
                .zip(own)
                .map(|(c, o)| wc * c + wi * o)
                .collect()
        };
        (mix(a), mix(b))
    };
    Ok((
        PhaseSeries::new(0.0, dt, spec.carrier_hz, first)?,
        PhaseSeries::new(0.0, dt, spec.carrier_hz, second)?,
    ))
}

/// Slow temperature process of the interferometer enclosure.
///
/// `T(t) = mean + A sin(2πt/P) + drift * t + W(t)`, where `W` is a random
/// walk with one-sided PSD `random_walk_level / f²` (K²/Hz at 1 Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureProcess {
    pub mean_k: f64,
    #[serde(default)]
    pub diurnal_amplitude_k: f64,
    #[serde(default = "default_period")]
    pub diurnal_period_s: f64,
    #[serde(default)]
    pub linear_drift_k_per_s: f64,
    #[serde(default)]
    pub random_walk_level: f64,
}

fn default_period() -> f64 {
    86_400.0
}

impl Default for TemperatureProcess {
    fn default() -> Self {
        Self::constant(298.0)
    }
}

impl TemperatureProcess {
    pub fn constant(mean_k: f64) -> Self {
        Self {
            mean_k,
            diurnal_amplitude_k: 0.0,
            diurnal_period_s: default_period(),
            linear_drift_k_per_s: 0.0,
            random_walk_level: 0.0,
        }
    }

    /// Whether the process ever departs from its mean.
    pub fn is_constant(&self) -> bool {
        self.diurnal_amplitude_k == 0.0
            && self.linear_drift_k_per_s == 0.0
            && self.random_walk_level == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean_k.is_finite() {
            return Err(invalid("mean_k", "must be finite"));
        }
        if !(self.diurnal_amplitude_k >= 0.0 && self.diurnal_amplitude_k.is_finite()) {
            return Err(invalid("diurnal_amplitude_k", "must be finite and >= 0"));
        }
        if !(self.diurnal_period_s > 0.0 && self.diurnal_period_s.is_finite()) {
            return Err(invalid("diurnal_period_s", "must be positive"));
        }
        if !self.linear_drift_k_per_s.is_finite() {
            return Err(invalid("linear_drift_k_per_s", "must be finite"));
        }
        if !(self.random_walk_level >= 0.0 && self.random_walk_level.is_finite()) {
            return Err(invalid("random_walk_level", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Samples `proc` at `t_k = k dt`, `k = 0..n`.
pub fn gen_temperature(
    proc: &TemperatureProcess,
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<TemperatureSeries> {
    proc.validate()?;
    if n == 0 {
        return Err(invalid("n", "need at least one sample"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    let omega = 2.0 * PI / proc.diurnal_period_s;
    let mut kelvin: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            let mut v = proc.mean_k;
            if proc.diurnal_amplitude_k != 0.0 {
                v += proc.diurnal_amplitude_k * (omega * t).sin();
            }
            if proc.linear_drift_k_per_s != 0.0 {
                v += proc.linear_drift_k_per_s * t;
            }
            v
        })
        .collect();
    if proc.random_walk_level > 0.0 {
        // A Wiener process with variance growth D has S(f) = D / (2π² f²).
        let step_sigma = (2.0 * PI * PI * proc.random_walk_level * dt).sqrt();
        let mut rng = rng(seed, stream::TEMPERATURE);
        let mut walk = 0.0;
        for v in kelvin.iter_mut().skip(1) {
            let z: f64 = StandardNormal.sample(&mut rng);
            walk += step_sigma * z;
            *v += walk;
        }
    }
    Ok(TemperatureSeries {
        t0: 0.0,
        dt,
        kelvin,
    })
}

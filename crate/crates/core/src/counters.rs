//! Dead-time-free frequency counters and cycle-slip detection.
//!
//! Both counters reference fractional frequency to the optical carrier of
//! the input phase. Output samples are time-stamped at the end of their
//! averaging window, so Π and Λ samples with equal timestamps describe the
//! same gate.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::series::{CounterKind, FrequencySeries, PhaseSeries, Sampled};

fn samples_per_gate(phase: &PhaseSeries, gate_s: f64) -> Result<usize> {
    if !(gate_s > 0.0 && gate_s.is_finite()) {
        return Err(invalid("gate_s", format!("must be positive, got {gate_s}")));
    }
    let ratio = gate_s / phase.dt();
    let m = ratio.round();
    if m < 1.0 || (ratio - m).abs() > 1e-9 * ratio {
        return Err(Error::GateNotMultiple {
            gate_s,
            step_s: phase.dt(),
        });
    }
    Ok(m as usize)
}

/// Π-type counting: `y_k = (x((k+1)T) - x(kT)) / (2πν T)`.
pub fn count_pi(phase: &PhaseSeries, gate_s: f64) -> Result<FrequencySeries> {
    let m = samples_per_gate(phase, gate_s)?;
    let x = phase.values();
    let gaps = phase.gaps();
    if x.len() < m + 1 {
        return Err(Error::RecordTooShort(format!(
            "{} phase samples cannot fill one {gate_s} s gate",
            x.len()
        )));
    }
    let k_out = (x.len() - 1) / m;
    let scale = 1.0 / (2.0 * PI * phase.carrier_hz() * gate_s);
    let mut y = Vec::with_capacity(k_out);
    let mut out_gaps = Vec::with_capacity(k_out);
    for k in 0..k_out {
        let (a, b) = (k * m, (k + 1) * m);
        let gap = gaps[a..=b].iter().any(|g| *g);
        out_gaps.push(gap);
        y.push(if gap { f64::NAN } else { (x[b] - x[a]) * scale });
    }
    FrequencySeries::with_gaps(
        phase.t0() + gate_s,
        gate_s,
        CounterKind::Pi,
        phase.carrier_hz(),
        y,
        Some(out_gaps),
    )
}

/// Λ-type counting: difference of adjacent boxcar phase means,
/// `y_k = (mean x over [kT,(k+1)T) - mean x over [(k-1)T,kT)) / (2πν T)`,
/// which weights frequency triangularly over two gates.
pub fn count_lambda(
    phase: &PhaseSeries,
    gate_s: f64,
    internal_rate_hz: f64,
) -> Result<FrequencySeries> {
    if (internal_rate_hz * phase.dt() - 1.0).abs() > 1e-9 {
        return Err(invalid(
            "internal_rate_hz",
            format!(
                "{internal_rate_hz} Hz does not match the phase sample step {} s",
                phase.dt()
            ),
        ));
    }
    let m = samples_per_gate(phase, gate_s)?;
    if m < 2 {
        return Err(invalid(
            "internal_rate_hz",
            "Λ averaging needs at least two phase samples per gate",
        ));
    }
    let x = phase.values();
    let gaps = phase.gaps();
    let blocks = x.len() / m;
    if blocks < 2 {
        return Err(Error::RecordTooShort(format!(
            "{} phase samples cannot fill two {gate_s} s gates",
            x.len()
        )));
    }
    let (means, block_gaps): (Vec<f64>, Vec<bool>) = (0..blocks)
        .map(|j| {
            let range = j * m..(j + 1) * m;
            if gaps[range.clone()].iter().any(|g| *g) {
                (f64::NAN, true)
            } else {
                (x[range].iter().sum::<f64>() / m as f64, false)
            }
        })
        .unzip();
    let scale = 1.0 / (2.0 * PI * phase.carrier_hz() * gate_s);
    let mut y = Vec::with_capacity(blocks - 1);
    let mut out_gaps = Vec::with_capacity(blocks - 1);
    for k in 1..blocks {
        let gap = block_gaps[k] || block_gaps[k - 1];
        out_gaps.push(gap);
        y.push(if gap {
            f64::NAN
        } else {
            (means[k] - means[k - 1]) * scale
        });
    }
    FrequencySeries::with_gaps(
        phase.t0() + 2.0 * gate_s,
        gate_s,
        CounterKind::Lambda,
        phase.carrier_hz(),
        y,
        Some(out_gaps),
    )
}

/// Outcome of [`detect_cycle_slips`].
#[derive(Debug, Clone, PartialEq)]
pub struct SlipReport {
    pub flagged: Vec<usize>,
    /// Input with flagged samples converted to gaps.
    pub cleaned: FrequencySeries,
    /// Robust standard deviation of the residuals.
    pub robust_sigma: f64,
}

/// Half-width of the running-median window.
pub const SLIP_MEDIAN_HALF_WIDTH: usize = 10;

/// Normal-consistency factor of the median absolute deviation.
const MAD_TO_SIGMA: f64 = 1.482_602_218_505_602;

fn median(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let mid = n / 2;
    let (_, upper, _) = buf.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = buf[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Flags samples whose deviation from the median of their
/// `2 * SLIP_MEDIAN_HALF_WIDTH` nearest valid neighbours exceeds
/// `threshold_sigma` robust standard deviations, and gaps them.
pub fn detect_cycle_slips(y: &FrequencySeries, threshold_sigma: f64) -> Result<SlipReport> {
    if threshold_sigma.is_nan() || threshold_sigma <= 0.0 {
        return Err(invalid("threshold_sigma", "must be positive"));
    }
    let valid: Vec<usize> = (0..y.len()).filter(|&i| y.is_valid(i)).collect();
    if valid.len() < 100 {
        return Err(Error::RecordTooShort(format!(
            "{} valid samples, need at least 100 for robust scale estimation",
            valid.len()
        )));
    }
    let v = y.values();
    let h = SLIP_MEDIAN_HALF_WIDTH;
    let mut window = Vec::with_capacity(2 * h + 1);
    // The sample itself is left out of its reference median; including it
    // pulls the median towards outliers and narrows the residual core
    // relative to its tails, which inflates the false-alarm rate.
    let residuals: Vec<f64> = (0..valid.len())
        .map(|p| {
            let lo = p
                .saturating_sub(h)
                .min(valid.len().saturating_sub(2 * h + 1));
            let hi = (lo + 2 * h + 1).min(valid.len());
            window.clear();
            window.extend((lo..hi).filter(|&q| q != p).map(|q| v[valid[q]]));
            v[valid[p]] - median(&mut window)
        })
        .collect();
    let mut scratch = residuals.clone();
    let center = median(&mut scratch);
    let mut abs_dev: Vec<f64> = residuals.iter().map(|r| (r - center).abs()).collect();
    let sigma = MAD_TO_SIGMA * median(&mut abs_dev);
    let flagged: Vec<usize> = if sigma > 0.0 {
        valid
            .iter()
            .zip(&residuals)
            .filter(|(_, r)| (**r - center).abs() > threshold_sigma * sigma)
            .map(|(&i, _)| i)
            .collect()
    } else {
        Vec::new()
    };
    Ok(SlipReport {
        cleaned: y.with_gap_at(&flagged),
        flagged,
        robust_sigma: sigma,
    })
}

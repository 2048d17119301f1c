//! Least-squares power-law fits on log-log axes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::deviation::StabilityCurve;
use crate::stats::psd::Psd;

/// Anything that can be viewed as `(abscissa, ordinate)` points.
pub trait LogLogCurve {
    fn points(&self) -> Vec<(f64, f64)>;
}

impl LogLogCurve for Psd {
    fn points(&self) -> Vec<(f64, f64)> {
        self.freqs
            .iter()
            .copied()
            .zip(self.density.iter().copied())
            .collect()
    }
}

impl LogLogCurve for StabilityCurve {
    fn points(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.tau_s, p.dev)).collect()
    }
}

impl LogLogCurve for [(f64, f64)] {
    fn points(&self) -> Vec<(f64, f64)> {
        self.to_vec()
    }
}

impl LogLogCurve for Vec<(f64, f64)> {
    fn points(&self) -> Vec<(f64, f64)> {
        self.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub exponent: f64,
    pub stderr: f64,
    /// Natural log of the prefactor `c` in `y = c x^p`.
    pub ln_prefactor: f64,
    pub points: usize,
}

/// Fits `y = c x^p` to the points with `lo <= x <= hi` by ordinary least
/// squares on `(ln x, ln y)`.
pub fn fit_loglog_slope<C: LogLogCurve + ?Sized>(curve: &C, lo: f64, hi: f64) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = curve
        .points()
        .into_iter()
        .filter(|(x, _)| *x >= lo && *x <= hi && *x > 0.0)
        .collect();
    if pts.len() < 4 {
        return Err(Error::RecordTooShort(format!(
            "{} points in [{lo}, {hi}], need at least 4",
            pts.len()
        )));
    }
    if let Some((x, y)) = pts.iter().find(|(_, y)| y.is_nan() || *y <= 0.0) {
        return Err(Error::NonPositive { at: *x, value: *y });
    }
    let n = pts.len() as f64;
    let lx: Vec<f64> = pts.iter().map(|(x, _)| x.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|(_, y)| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        exponent: slope,
        stderr,
        ln_prefactor: intercept,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let x = 2f64.powi(i);
                (x, 3.5 * x.powf(-1.5))
            })
            .collect();
        let fit = fit_loglog_slope(&pts, 0.0, f64::INFINITY).unwrap();
        assert!((fit.exponent + 1.5).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
        assert!((fit.ln_prefactor - 3.5f64.ln()).abs() < 1e-12);
        assert_eq!(fit.points, 8);
    }

    #[test]
    fn range_and_errors() {
        let pts: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, i as f64)).collect();
        assert!(fit_loglog_slope(&pts, 1.0, 3.0).is_err());
        let mut bad = pts.clone();
        bad[5].1 = 0.0;
        assert!(matches!(
            fit_loglog_slope(&bad, 1.0, 10.0),
            Err(Error::NonPositive { .. })
        ));
        let fit = fit_loglog_slope(&pts, 2.0, 8.0).unwrap();
        assert_eq!(fit.points, 7);
        assert!((fit.exponent - 1.0).abs() < 1e-12);
    }
}

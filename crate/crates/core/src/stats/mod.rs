//! Stability, spectral and accuracy estimators.

mod accuracy;
mod correlation;
mod deviation;
mod fit;
mod psd;

pub use accuracy::{accuracy_report, AccuracyReport, AccuracyRow};
pub use correlation::{cross_correlation, Correlation, MIN_JOINT_SAMPLES};
pub use deviation::{
    deviation_at, stability_deviation, Estimator, StabilityCurve, StabilityPoint, TauGrid,
    MIN_WINDOW_VALID_FRACTION,
};
pub use fit::{fit_loglog_slope, LogLogCurve, SlopeFit};
pub use psd::{phase_psd, BlackmanTukeyParams, Psd, PsdMethod, WelchParams};

use crate::series::Sampled;

/// Fraction of scheduled samples that are valid; zero for an empty series.
pub fn uptime<S: Sampled>(y: &S) -> f64 {
    if y.is_empty() {
        0.0
    } else {
        y.valid_count() as f64 / y.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{CounterKind, FrequencySeries};

    #[test]
    fn uptime_fractions() {
        let y = FrequencySeries::new(1.0, 1.0, CounterKind::Pi, 1.0, vec![0.0; 1000]).unwrap();
        assert_eq!(uptime(&y), 1.0);
        let gaps: Vec<usize> = (0..35).collect();
        assert_eq!(uptime(&y.with_gap_at(&gaps)), 0.965);
        let all: Vec<usize> = (0..1000).collect();
        assert_eq!(uptime(&y.with_gap_at(&all)), 0.0);
    }
}

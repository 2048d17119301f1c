//! Thin wrapper over `rustfft` used by the generators and the spectral
//! estimators.
//!
//! The scalar planner is used throughout so transforms give the same bits on
//! every CPU, independent of the SIMD features detected at runtime.

use rustfft::num_complex::Complex64;
use rustfft::FftPlannerScalar;

pub(crate) fn forward(buf: &mut [Complex64]) {
    let mut planner = FftPlannerScalar::<f64>::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

/// Unnormalized inverse transform.
pub(crate) fn inverse(buf: &mut [Complex64]) {
    let mut planner = FftPlannerScalar::<f64>::new();
    planner.plan_fft_inverse(buf.len()).process(buf);
}

pub(crate) fn from_real(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Least-squares line removal in place.
pub(crate) fn detrend_linear(x: &mut [f64]) {
    let n = x.len();
    if n < 2 {
        if n == 1 {
            x[0] = 0.0;
        }
        return;
    }
    let nf = n as f64;
    let t_mean = (nf - 1.0) / 2.0;
    let x_mean = x.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, v) in x.iter().enumerate() {
        let t = i as f64 - t_mean;
        sxy += t * (v - x_mean);
        sxx += t * t;
    }
    let slope = sxy / sxx;
    for (i, v) in x.iter_mut().enumerate() {
        *v -= x_mean + slope * (i as f64 - t_mean);
    }
}

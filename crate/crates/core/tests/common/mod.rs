#![allow(dead_code)]

use std::f64::consts::PI;

/// Averaged Hann periodogram evaluated by direct summation at the given
/// frequencies, over `segments` non-overlapping, mean-removed segments.
/// Shares no code with the library estimator.
pub fn direct_periodogram(x: &[f64], dt: f64, segments: usize, freqs: &[f64]) -> Vec<f64> {
    let len = x.len() / segments;
    let w: Vec<f64> = (0..len)
        .map(|i| (PI * i as f64 / len as f64).sin().powi(2))
        .collect();
    let w2: f64 = w.iter().map(|v| v * v).sum();
    freqs
        .iter()
        .map(|&f| {
            let step = 2.0 * PI * f * dt;
            let mut acc = 0.0;
            for s in 0..segments {
                let seg = &x[s * len..(s + 1) * len];
                // Remove the straight line through the end points; Hann
                // leakage handles the rest.
                let (a, b) = (seg[0], seg[len - 1]);
                let (mut re, mut im) = (0.0, 0.0);
                for (i, v) in seg.iter().enumerate() {
                    let line = a + (b - a) * i as f64 / (len - 1) as f64;
                    let (sn, cs) = (step * i as f64).sin_cos();
                    let u = (v - line) * w[i];
                    re += u * cs;
                    im -= u * sn;
                }
                acc += re * re + im * im;
            }
            2.0 * dt * acc / (w2 * segments as f64)
        })
        .collect()
}

/// Ordinary least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma).powi(2);
        db += (y - mb).powi(2);
    }
    num / (da * db).sqrt()
}

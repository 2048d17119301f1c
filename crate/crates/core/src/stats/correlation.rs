//! Pearson correlation of two aligned series over their jointly valid
//! samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Sampled;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// `1 - r`, computed from standardized differences when `r > 0.999` so
    /// that values near one stay legible.
    pub one_minus_r: Option<f64>,
    pub samples: usize,
}

/// Minimum number of jointly valid samples.
pub const MIN_JOINT_SAMPLES: usize = 100;

pub fn cross_correlation<S: Sampled>(a: &S, b: &S) -> Result<Correlation> {
    if a.len() != b.len() {
        return Err(Error::Misaligned(format!(
            "lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let joint: Vec<(f64, f64)> = (0..a.len())
        .filter(|&i| a.is_valid(i) && b.is_valid(i))
        .map(|i| (a.values()[i], b.values()[i]))
        .collect();
    if joint.len() < MIN_JOINT_SAMPLES {
        return Err(Error::RecordTooShort(format!(
            "{} jointly valid samples, need at least {MIN_JOINT_SAMPLES}",
            joint.len()
        )));
    }
    let n = joint.len() as f64;
    let ma = joint.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = joint.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for (x, y) in &joint {
        let (da, db) = (x - ma, y - mb);
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if saa == 0.0 {
        return Err(Error::ZeroVariance("first series"));
    }
    if sbb == 0.0 {
        return Err(Error::ZeroVariance("second series"));
    }
    let r = (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0);
    let one_minus_r = (r > 0.999).then(|| {
        let (sa, sb) = ((saa / n).sqrt(), (sbb / n).sqrt());
        let d2: f64 = joint
            .iter()
            .map(|(x, y)| ((x - ma) / sa - (y - mb) / sb).powi(2))
            .sum();
        d2 / (2.0 * n)
    });
    Ok(Correlation {
        r,
        one_minus_r,
        samples: joint.len(),
    })
}

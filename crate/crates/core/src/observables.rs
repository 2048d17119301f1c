//! Observable algebra on the four beat notes, the interferometric-noise
//! ledger and the reciprocity estimator.
//!
//! The combinations are linear, so they apply equally to phase series and
//! to counted fractional-frequency series; [`combine_observables`] is generic
//! over [`Sampled`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linksim::{interferometric_phase, LinkConfig};
use crate::series::{FrequencySeries, PhaseSeries, Sampled, TemperatureSeries};
use crate::stats::{deviation_at, Estimator};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

/// Names of the seven derived observables, in table order.
pub const DERIVED_NAMES: [&str; 7] = ["TWU1", "TWU2", "TWU3", "TWB1", "TWB2", "TWB3", "TWNF"];

/// Names of the four raw beat notes.
pub const RAW_NAMES: [&str; 4] = ["ANC", "RT", "OWB", "OWF"];

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedObservables<S> {
    pub twu1: S,
    pub twu2: S,
    pub twu3: S,
    pub twb1: S,
    pub twb2: S,
    pub twb3: S,
    pub twnf: S,
}

impl<S> DerivedObservables<S> {
    /// `(name, series)` pairs in [`DERIVED_NAMES`] order.
    pub fn named(&self) -> [(&'static str, &S); 7] {
        [
            ("TWU1", &self.twu1),
            ("TWU2", &self.twu2),
            ("TWU3", &self.twu3),
            ("TWB1", &self.twb1),
            ("TWB2", &self.twb2),
            ("TWB3", &self.twb3),
            ("TWNF", &self.twnf),
        ]
    }
}

/// The four raw beat notes and, once combined, the seven derived
/// observables. All members share one time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSet<S> {
    pub anc: S,
    pub rt: S,
    pub owb: S,
    pub owf: S,
    pub derived: Option<DerivedObservables<S>>,
    pub provenance: Option<Provenance>,
}

impl<S: Sampled> ObservableSet<S> {
    pub fn from_raw(anc: S, rt: S, owb: S, owf: S) -> Self {
        Self {
            anc,
            rt,
            owb,
            owf,
            derived: None,
            provenance: None,
        }
    }

    pub fn raw(&self) -> [(&'static str, &S); 4] {
        [
            ("ANC", &self.anc),
            ("RT", &self.rt),
            ("OWB", &self.owb),
            ("OWF", &self.owf),
        ]
    }

    /// Raw members followed by derived members when present.
    pub fn all(&self) -> Vec<(&'static str, &S)> {
        let mut out: Vec<_> = self.raw().to_vec();
        if let Some(d) = &self.derived {
            out.extend(d.named());
        }
        out
    }

    pub fn get(&self, name: &str) -> Option<&S> {
        self.all()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, s)| s)
    }

    /// Applies `f` to every member, keeping the structure.
    pub fn map<T, F>(&self, mut f: F) -> Result<ObservableSet<T>>
    where
        F: FnMut(&S) -> Result<T>,
    {
        let derived = match &self.derived {
            None => None,
            Some(d) => Some(DerivedObservables {
                twu1: f(&d.twu1)?,
                twu2: f(&d.twu2)?,
                twu3: f(&d.twu3)?,
                twb1: f(&d.twb1)?,
                twb2: f(&d.twb2)?,
                twb3: f(&d.twb3)?,
                twnf: f(&d.twnf)?,
            }),
        };
        Ok(ObservableSet {
            anc: f(&self.anc)?,
            rt: f(&self.rt)?,
            owb: f(&self.owb)?,
            owf: f(&self.owf)?,
            derived,
            provenance: self.provenance.clone(),
        })
    }
}

fn zip2<S: Sampled>(a: &S, b: &S, f: impl Fn(f64, f64) -> f64) -> S {
    let (va, vb) = (a.values(), b.values());
    let (ga, gb) = (a.gaps(), b.gaps());
    let mut values = Vec::with_capacity(va.len());
    let mut gaps = Vec::with_capacity(va.len());
    for i in 0..va.len() {
        let gap = ga[i] || gb[i];
        gaps.push(gap);
        values.push(if gap { f64::NAN } else { f(va[i], vb[i]) });
    }
    a.rebuilt(values, gaps)
}

fn zip3<S: Sampled>(a: &S, b: &S, c: &S, f: impl Fn(f64, f64, f64) -> f64) -> S {
    let (va, vb, vc) = (a.values(), b.values(), c.values());
    let (ga, gb, gc) = (a.gaps(), b.gaps(), c.gaps());
    let mut values = Vec::with_capacity(va.len());
    let mut gaps = Vec::with_capacity(va.len());
    for i in 0..va.len() {
        let gap = ga[i] || gb[i] || gc[i];
        gaps.push(gap);
        values.push(if gap {
            f64::NAN
        } else {
            f(va[i], vb[i], vc[i])
        });
    }
    a.rebuilt(values, gaps)
}

/// Populates the derived members:
///
/// ```text
/// TWU1 = ANC - RT/2      TWB1 = OWB - RT/2
/// TWU2 = ANC - OWB       TWB2 = OWF - RT/2
/// TWU3 = ANC - OWF       TWB3 = (OWB - OWF)/2
///                        TWNF = (OWB + OWF - RT)/2
/// ```
///
/// A gap in any operand gaps the result sample.
pub fn combine_observables<S: Sampled>(raw: &ObservableSet<S>) -> Result<ObservableSet<S>> {
    raw.anc.check_aligned(&raw.rt)?;
    raw.anc.check_aligned(&raw.owb)?;
    raw.anc.check_aligned(&raw.owf)?;
    let (anc, rt, owb, owf) = (&raw.anc, &raw.rt, &raw.owb, &raw.owf);
    let derived = DerivedObservables {
        twu1: zip2(anc, rt, |a, r| a - r / 2.0),
        twu2: zip2(anc, owb, |a, b| a - b),
        twu3: zip2(anc, owf, |a, f| a - f),
        twb1: zip2(owb, rt, |b, r| b - r / 2.0),
        twb2: zip2(owf, rt, |f, r| f - r / 2.0),
        twb3: zip2(owb, owf, |b, f| (b - f) / 2.0),
        twnf: zip3(owb, owf, rt, |b, f, r| (b + f - r) / 2.0),
    };
    Ok(ObservableSet {
        derived: Some(derived),
        ..raw.clone()
    })
}

/// Predicted interferometric phase of each observable, in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferometricLedger {
    pub rt: PhaseSeries,
    pub owb: PhaseSeries,
    pub owf: PhaseSeries,
    pub twb1: PhaseSeries,
    pub twb2: PhaseSeries,
    pub twb3: PhaseSeries,
    pub twnf: PhaseSeries,
}

impl InterferometricLedger {
    pub fn named(&self) -> [(&'static str, &PhaseSeries); 7] {
        [
            ("RT", &self.rt),
            ("OWB", &self.owb),
            ("OWF", &self.owf),
            ("TWB1", &self.twb1),
            ("TWB2", &self.twb2),
            ("TWB3", &self.twb3),
            ("TWNF", &self.twnf),
        ]
    }
}

/// Interferometric contributions for a temperature excursion `delta_t`:
/// `RT ∝ 2 L_BC`, `OWB ∝ 2 L_BC + L_OA - L_OB`, `OWF ∝ L_OB - L_OA`, the
/// three TWB terms `±(L_BC + L_OA - L_OB)` and an identically zero TWNF.
pub fn predict_interferometric_ledger(
    config: &LinkConfig,
    delta_t: &TemperatureSeries,
) -> Result<InterferometricLedger> {
    let inter =
        |dl: f64| interferometric_phase(config.carrier_hz, config.gamma_fs_per_k_m, delta_t, dl);
    let rt = inter(2.0 * config.l_bc_m)?;
    let owb = inter(2.0 * config.l_bc_m + config.l_oa_m - config.l_ob_m)?;
    let owf = inter(config.l_ob_m - config.l_oa_m)?;
    let twb1 = inter(config.twb_mismatch_m())?;
    let twb2 = twb1.rebuilt(
        twb1.values().iter().map(|v| -v).collect(),
        twb1.gaps().to_vec(),
    );
    let twb3 = twb1.clone();
    let twnf = twb1.rebuilt(vec![0.0; twb1.len()], vec![false; twb1.len()]);
    Ok(InterferometricLedger {
        rt,
        owb,
        owf,
        twb1,
        twb2,
        twb3,
        twnf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ConsistentWithZero,
    Inconsistent,
}

/// Mean fractional-frequency offset of a two-way observable and its
/// statistical uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReciprocityReport {
    pub mean: f64,
    pub oadev: f64,
    pub mdev: f64,
    /// The larger of `oadev` and `mdev`.
    pub uncertainty: f64,
    pub averaging_tau_s: f64,
    pub sigma_multiplier: f64,
    pub verdict: Verdict,
    pub samples: usize,
}

impl ReciprocityReport {
    /// `mean(±uncertainty)×10ⁿ`.
    pub fn formatted(&self) -> String {
        format_value_uncertainty(self.mean, self.uncertainty)
    }
}

impl fmt::Display for ReciprocityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match self.verdict {
            Verdict::ConsistentWithZero => "consistent with zero",
            Verdict::Inconsistent => "NOT consistent with zero",
        };
        write!(
            f,
            "{} (OADEV {:.2e}, MDEV {:.2e} at {} s; {} at {}σ)",
            self.formatted(),
            self.oadev,
            self.mdev,
            self.averaging_tau_s,
            verdict,
            self.sigma_multiplier
        )
    }
}

fn superscript(n: i32) -> String {
    const DIGITS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
    let mut s = String::new();
    if n < 0 {
        s.push('⁻');
    }
    for c in n.unsigned_abs().to_string().chars() {
        s.push(DIGITS[c.to_digit(10).unwrap() as usize]);
    }
    s
}

/// Formats `value` and `uncertainty` with a shared power of ten and one
/// decimal, e.g. `3.1(±3.9)×10⁻²⁰`.
pub fn format_value_uncertainty(value: f64, uncertainty: f64) -> String {
    let scale = value.abs().max(uncertainty.abs());
    if scale == 0.0 || !scale.is_finite() {
        return format!("{value:.1}(±{uncertainty:.1})");
    }
    let mut exp = scale.log10().floor() as i32;
    // Rounding to one decimal can carry into the next power of ten.
    if (scale / 10f64.powi(exp) * 10.0).round() >= 100.0 {
        exp += 1;
    }
    let m = 10f64.powi(exp);
    format!(
        "{:.1}(±{:.1})×10{}",
        value / m,
        uncertainty / m,
        superscript(exp)
    )
}

/// Default averaging time: a quarter of the record, rounded down to whole
/// gates.
pub fn default_averaging_tau(y: &FrequencySeries) -> f64 {
    let gates = (y.len() / 4).max(1);
    gates as f64 * y.gate_s()
}

/// Reciprocity test at 1σ. See [`reciprocity_estimate_with`].
pub fn reciprocity_estimate(
    y: &FrequencySeries,
    averaging_tau_s: f64,
) -> Result<ReciprocityReport> {
    reciprocity_estimate_with(y, averaging_tau_s, 1.0)
}

/// Mean of the valid samples against the larger of OADEV and MDEV at
/// `averaging_tau_s`; consistent with zero iff `|mean| <= k * uncertainty`.
pub fn reciprocity_estimate_with(
    y: &FrequencySeries,
    averaging_tau_s: f64,
    sigma_multiplier: f64,
) -> Result<ReciprocityReport> {
    if sigma_multiplier.is_nan() || sigma_multiplier <= 0.0 {
        return Err(invalid("sigma_multiplier", "must be positive"));
    }
    if y.duration() < 4.0 * averaging_tau_s * (1.0 - 1e-12) {
        return Err(Error::RecordTooShort(format!(
            "{} s record is shorter than 4 × {} s",
            y.duration(),
            averaging_tau_s
        )));
    }
    let valid = y.valid_count();
    if 2 * valid < y.len() {
        return Err(Error::TooManyGaps {
            valid,
            total: y.len(),
        });
    }
    let mean = y.mean().expect("at least half the samples are valid");
    let at = |est| -> Result<f64> {
        deviation_at(y, est, averaging_tau_s)?
            .map(|p| p.dev)
            .ok_or_else(|| {
                Error::RecordTooShort(format!(
                    "too few valid differences for {est} at {averaging_tau_s} s"
                ))
            })
    };
    let oadev = at(Estimator::Oadev)?;
    let mdev = at(Estimator::Mdev)?;
    let uncertainty = oadev.max(mdev);
    let verdict = if mean.abs() <= sigma_multiplier * uncertainty {
        Verdict::ConsistentWithZero
    } else {
        Verdict::Inconsistent
    };
    Ok(ReciprocityReport {
        mean,
        oadev,
        mdev,
        uncertainty,
        averaging_tau_s,
        sigma_multiplier,
        verdict,
        samples: valid,
    })
}

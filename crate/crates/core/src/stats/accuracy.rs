//! Mean offset and statistical uncertainty of a set of observables, laid
//! out as observables × {Mean, ADEV, MDEV} × {Π, Λ}.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::series::{CounterKind, FrequencySeries, Sampled};
use crate::stats::deviation::{deviation_at, Estimator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub name: String,
    pub kind: CounterKind,
    pub mean: f64,
    pub oadev: f64,
    pub mdev: f64,
    pub samples: usize,
    pub gap_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub tau_avg_s: f64,
    pub rows: Vec<AccuracyRow>,
}

/// One row per `(name, series)` input, in input order.
pub fn accuracy_report(
    inputs: &[(&str, &FrequencySeries)],
    tau_avg_s: f64,
) -> Result<AccuracyReport> {
    if !(tau_avg_s > 0.0 && tau_avg_s.is_finite()) {
        return Err(invalid(
            "tau_avg_s",
            format!("must be positive, got {tau_avg_s}"),
        ));
    }
    let mut rows = Vec::with_capacity(inputs.len());
    for (name, y) in inputs {
        if y.duration() < 4.0 * tau_avg_s * (1.0 - 1e-12) {
            return Err(Error::RecordTooShort(format!(
                "{name}: {} s record is shorter than 4 × {tau_avg_s} s",
                y.duration()
            )));
        }
        let mean = y.mean().ok_or(Error::TooManyGaps {
            valid: 0,
            total: y.len(),
        })?;
        let dev = |est| -> Result<f64> {
            deviation_at(y, est, tau_avg_s)?
                .map(|p| p.dev)
                .ok_or_else(|| {
                    Error::RecordTooShort(format!(
                        "{name}: too few valid differences for {est} at {tau_avg_s} s"
                    ))
                })
        };
        rows.push(AccuracyRow {
            name: name.to_string(),
            kind: y.kind(),
            mean,
            oadev: dev(Estimator::Oadev)?,
            mdev: dev(Estimator::Mdev)?,
            samples: y.valid_count(),
            gap_fraction: 1.0 - y.valid_count() as f64 / y.len() as f64,
        });
    }
    Ok(AccuracyReport { tau_avg_s, rows })
}

/// Leading alphabetic part of an observable name: `TWU2` → `TWU`.
fn group_of(name: &str) -> &str {
    name.trim_end_matches(|c: char| c.is_ascii_digit())
}

impl AccuracyReport {
    pub fn row(&self, name: &str, kind: CounterKind) -> Option<&AccuracyRow> {
        self.rows.iter().find(|r| r.name == name && r.kind == kind)
    }

    /// Observable names in first-appearance order.
    pub fn names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.name.as_str()) {
                names.push(&r.name);
            }
        }
        names
    }

    /// Shared power of ten for every observable in the same name group,
    /// chosen from the largest magnitude in that group.
    fn group_exponent(&self, group: &str) -> i32 {
        let max = self
            .rows
            .iter()
            .filter(|r| group_of(&r.name) == group)
            .flat_map(|r| [r.mean.abs(), r.oadev, r.mdev])
            .fold(0.0, f64::max);
        if max > 0.0 && max.is_finite() {
            let mut e = max.log10().floor() as i32;
            if (max / 10f64.powi(e) * 10.0).round() >= 100.0 {
                e += 1;
            }
            e
        } else {
            0
        }
    }

    /// Plain-text table: one column per observable, a scale row giving the
    /// power of ten per name group, then Mean / ADEV / MDEV for each counter
    /// kind present.
    pub fn render_table(&self) -> String {
        let names = self.names();
        let tau = format_tau(self.tau_avg_s);
        let labels = [
            "Mean".to_string(),
            format!("ADEV at {tau} s"),
            format!("MDEV at {tau} s"),
        ];
        let label_w = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0) + 4;
        let col_w = 10;
        let exps: Vec<i32> = names
            .iter()
            .map(|n| self.group_exponent(group_of(n)))
            .collect();

        let mut out = String::new();
        let _ = write!(out, "{:<label_w$}", "Quantity");
        for n in &names {
            let _ = write!(out, "{n:>col_w$}");
        }
        out.push('\n');
        let _ = write!(out, "{:<label_w$}", "");
        for e in &exps {
            let _ = write!(out, "{:>col_w$}", format!("×10^{e}"));
        }
        out.push('\n');
        let rule = "-".repeat(label_w + col_w * names.len());
        for kind in [CounterKind::Pi, CounterKind::Lambda] {
            if !self.rows.iter().any(|r| r.kind == kind) {
                continue;
            }
            out.push_str(&rule);
            out.push('\n');
            for (li, label) in labels.iter().enumerate() {
                let _ = write!(out, "{:<2}{:<w$}", kind.symbol(), label, w = label_w - 2);
                for (n, e) in names.iter().zip(&exps) {
                    let cell = match self.row(n, kind) {
                        Some(r) => {
                            let v = [r.mean, r.oadev, r.mdev][li];
                            format!("{:.1}", v / 10f64.powi(*e))
                        }
                        None => "-".to_string(),
                    };
                    let _ = write!(out, "{cell:>col_w$}");
                }
                out.push('\n');
            }
        }
        out
    }
}

fn format_tau(tau: f64) -> String {
    if tau.fract() == 0.0 && tau.abs() < 1e15 {
        format!("{}", tau as i64)
    } else {
        format!("{tau}")
    }
}

//! Uniformly sampled phase and fractional-frequency series with gap masks.
//!
//! Gapped samples carry no value. They are stored as `NaN` so that any code
//! path that forgets to consult the mask poisons its result instead of
//! silently using a stale number.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Common access to a uniformly sampled series with a gap mask.
pub trait Sampled: Clone {
    fn values(&self) -> &[f64];
    fn gaps(&self) -> &[bool];
    fn start(&self) -> f64;
    fn step(&self) -> f64;

    /// Same grid and metadata, new samples. `values` and `gaps` must have the
    /// length of `self`.
    fn rebuilt(&self, values: Vec<f64>, gaps: Vec<bool>) -> Self;

    /// Metadata other than the grid that must agree for two series to be
    /// combined (carrier, counter kind).
    fn compatible(&self, other: &Self) -> std::result::Result<(), String>;

    fn len(&self) -> usize {
        self.values().len()
    }

    fn is_empty(&self) -> bool {
        self.values().is_empty()
    }

    fn is_valid(&self, i: usize) -> bool {
        !self.gaps()[i]
    }

    fn valid_count(&self) -> usize {
        self.gaps().iter().filter(|g| !**g).count()
    }

    fn has_gaps(&self) -> bool {
        self.gaps().iter().any(|g| *g)
    }

    /// Timestamp of sample `i`.
    fn time_at(&self, i: usize) -> f64 {
        self.start() + i as f64 * self.step()
    }

    fn check_aligned(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Misaligned(format!(
                "lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        let step = self.step();
        if (step - other.step()).abs() > 1e-12 * step.abs() {
            return Err(Error::Misaligned(format!(
                "steps {} s and {} s",
                step,
                other.step()
            )));
        }
        if (self.start() - other.start()).abs() > 1e-9 * step.abs() {
            return Err(Error::Misaligned(format!(
                "start times {} s and {} s",
                self.start(),
                other.start()
            )));
        }
        self.compatible(other).map_err(Error::Misaligned)
    }

    /// Longest run of consecutive valid samples as `(start, len)`.
    fn longest_valid_run(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut run_start = 0;
        let mut run_len = 0;
        for (i, gap) in self.gaps().iter().enumerate() {
            if *gap {
                run_len = 0;
            } else {
                if run_len == 0 {
                    run_start = i;
                }
                run_len += 1;
                if run_len > best.1 {
                    best = (run_start, run_len);
                }
            }
        }
        best
    }

    /// Marks sample `i` as a gap.
    fn with_gap_at(&self, indices: &[usize]) -> Self {
        let mut values = self.values().to_vec();
        let mut gaps = self.gaps().to_vec();
        for &i in indices {
            values[i] = f64::NAN;
            gaps[i] = true;
        }
        self.rebuilt(values, gaps)
    }
}

fn normalized_gaps(values: &mut [f64], gaps: Option<Vec<bool>>) -> Result<Vec<bool>> {
    let gaps = match gaps {
        Some(g) => {
            if g.len() != values.len() {
                return Err(invalid(
                    "gaps",
                    format!("mask length {} != series length {}", g.len(), values.len()),
                ));
            }
            g
        }
        None => values.iter().map(|v| !v.is_finite()).collect(),
    };
    for (v, g) in values.iter_mut().zip(&gaps) {
        if *g {
            *v = f64::NAN;
        } else if !v.is_finite() {
            return Err(invalid("values", "non-finite sample outside the gap mask"));
        }
    }
    Ok(gaps)
}

/// Optical phase (radians at the carrier) on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSeries {
    t0: f64,
    dt: f64,
    carrier_hz: f64,
    values: Vec<f64>,
    gaps: Vec<bool>,
}

impl PhaseSeries {
    /// Gap-free series. Non-finite values are treated as gaps.
    pub fn new(t0: f64, dt: f64, carrier_hz: f64, values: Vec<f64>) -> Result<Self> {
        Self::with_gaps(t0, dt, carrier_hz, values, None)
    }

    pub fn with_gaps(
        t0: f64,
        dt: f64,
        carrier_hz: f64,
        mut values: Vec<f64>,
        gaps: Option<Vec<bool>>,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("step must be positive, got {dt}")));
        }
        if !(carrier_hz > 0.0 && carrier_hz.is_finite()) {
            return Err(invalid(
                "carrier_hz",
                format!("carrier must be positive, got {carrier_hz}"),
            ));
        }
        let gaps = normalized_gaps(&mut values, gaps)?;
        Ok(Self {
            t0,
            dt,
            carrier_hz,
            values,
            gaps,
        })
    }

    pub fn zeros(t0: f64, dt: f64, carrier_hz: f64, n: usize) -> Result<Self> {
        Self::new(t0, dt, carrier_hz, vec![0.0; n])
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    /// Phase expressed as time error `φ / (2πν)` in seconds.
    pub fn time_error(&self) -> Vec<f64> {
        let k = 1.0 / (2.0 * PI * self.carrier_hz);
        self.values.iter().map(|v| v * k).collect()
    }

    /// Contiguous sub-series `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        Self {
            t0: self.time_at(start),
            dt: self.dt,
            carrier_hz: self.carrier_hz,
            values: self.values[start..start + len].to_vec(),
            gaps: self.gaps[start..start + len].to_vec(),
        }
    }

    /// Adds a phase step of `radians` to every sample from `index` on.
    /// Used to emulate cycle slips.
    pub fn add_step(&mut self, index: usize, radians: f64) {
        for v in &mut self.values[index..] {
            *v += radians;
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl Sampled for PhaseSeries {
    fn values(&self) -> &[f64] {
        &self.values
    }

    fn gaps(&self) -> &[bool] {
        &self.gaps
    }

    fn start(&self) -> f64 {
        self.t0
    }

    fn step(&self) -> f64 {
        self.dt
    }

    fn rebuilt(&self, values: Vec<f64>, gaps: Vec<bool>) -> Self {
        assert_eq!(values.len(), self.values.len());
        assert_eq!(gaps.len(), self.values.len());
        Self {
            values,
            gaps,
            ..*self
        }
    }

    fn compatible(&self, other: &Self) -> std::result::Result<(), String> {
        if self.carrier_hz != other.carrier_hz {
            return Err(format!(
                "carriers {} Hz and {} Hz",
                self.carrier_hz, other.carrier_hz
            ));
        }
        Ok(())
    }
}

/// Frequency-counter averaging mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CounterKind {
    Pi,
    Lambda,
}

impl CounterKind {
    pub fn symbol(self) -> &'static str {
        match self {
            CounterKind::Pi => "Π",
            CounterKind::Lambda => "Λ",
        }
    }
}

impl fmt::Display for CounterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CounterKind::Pi => f.write_str("Pi"),
            CounterKind::Lambda => f.write_str("Lambda"),
        }
    }
}

impl FromStr for CounterKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "Pi" | "pi" | "PI" | "Π" => Ok(CounterKind::Pi),
            "Lambda" | "lambda" | "LAMBDA" | "Λ" => Ok(CounterKind::Lambda),
            other => Err(format!("unknown counter kind `{other}`")),
        }
    }
}

/// Fractional-frequency samples, one per counter gate.
///
/// `t0` is the timestamp of the first sample, taken at the end of its gate
/// window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySeries {
    t0: f64,
    gate_s: f64,
    kind: CounterKind,
    carrier_hz: f64,
    y: Vec<f64>,
    gaps: Vec<bool>,
}

impl FrequencySeries {
    pub fn new(
        t0: f64,
        gate_s: f64,
        kind: CounterKind,
        carrier_hz: f64,
        y: Vec<f64>,
    ) -> Result<Self> {
        Self::with_gaps(t0, gate_s, kind, carrier_hz, y, None)
    }

    pub fn with_gaps(
        t0: f64,
        gate_s: f64,
        kind: CounterKind,
        carrier_hz: f64,
        mut y: Vec<f64>,
        gaps: Option<Vec<bool>>,
    ) -> Result<Self> {
        if !(gate_s > 0.0 && gate_s.is_finite()) {
            return Err(invalid(
                "gate_s",
                format!("gate must be positive, got {gate_s}"),
            ));
        }
        if !(carrier_hz > 0.0 && carrier_hz.is_finite()) {
            return Err(invalid(
                "carrier_hz",
                format!("carrier must be positive, got {carrier_hz}"),
            ));
        }
        let gaps = normalized_gaps(&mut y, gaps)?;
        Ok(Self {
            t0,
            gate_s,
            kind,
            carrier_hz,
            y,
            gaps,
        })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn gate_s(&self) -> f64 {
        self.gate_s
    }

    pub fn kind(&self) -> CounterKind {
        self.kind
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Record duration covered by the samples.
    pub fn duration(&self) -> f64 {
        self.y.len() as f64 * self.gate_s
    }

    pub fn slice(&self, start: usize, len: usize) -> Self {
        Self {
            t0: self.time_at(start),
            y: self.y[start..start + len].to_vec(),
            gaps: self.gaps[start..start + len].to_vec(),
            ..*self
        }
    }

    /// Integrates to phase (radians) at gate boundaries. The result has one
    /// more sample than `self` and starts at zero one gate before `t0`.
    pub fn to_phase(&self) -> Result<PhaseSeries> {
        if self.has_gaps() {
            return Err(Error::GappedInput("integration to phase"));
        }
        let k = 2.0 * PI * self.carrier_hz * self.gate_s;
        let mut x = Vec::with_capacity(self.y.len() + 1);
        let mut acc = 0.0;
        x.push(acc);
        for v in &self.y {
            acc += v * k;
            x.push(acc);
        }
        PhaseSeries::new(self.t0 - self.gate_s, self.gate_s, self.carrier_hz, x)
    }

    /// Mean of the valid samples, `None` when every sample is gapped.
    /// Accumulated relative to the first valid sample, so a constant series
    /// has exactly its value as mean.
    pub fn mean(&self) -> Option<f64> {
        let mut valid = self
            .y
            .iter()
            .zip(&self.gaps)
            .filter(|(_, g)| !**g)
            .map(|(v, _)| *v);
        let first = valid.next()?;
        let (sum, n) = valid.fold((0.0, 1usize), |(s, n), v| (s + (v - first), n + 1));
        Some(first + sum / n as f64)
    }
}

impl Sampled for FrequencySeries {
    fn values(&self) -> &[f64] {
        &self.y
    }

    fn gaps(&self) -> &[bool] {
        &self.gaps
    }

    fn start(&self) -> f64 {
        self.t0
    }

    fn step(&self) -> f64 {
        self.gate_s
    }

    fn rebuilt(&self, values: Vec<f64>, gaps: Vec<bool>) -> Self {
        assert_eq!(values.len(), self.y.len());
        assert_eq!(gaps.len(), self.y.len());
        Self {
            y: values,
            gaps,
            ..*self
        }
    }

    fn compatible(&self, other: &Self) -> std::result::Result<(), String> {
        if self.kind != other.kind {
            return Err(format!("counter kinds {} and {}", self.kind, other.kind));
        }
        if self.carrier_hz != other.carrier_hz {
            return Err(format!(
                "carriers {} Hz and {} Hz",
                self.carrier_hz, other.carrier_hz
            ));
        }
        Ok(())
    }
}

/// Temperature samples in kelvin on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSeries {
    pub t0: f64,
    pub dt: f64,
    pub kelvin: Vec<f64>,
}

impl TemperatureSeries {
    /// Excursion `T(t) - reference` in kelvin.
    pub fn excursion(&self, reference_k: f64) -> TemperatureSeries {
        TemperatureSeries {
            t0: self.t0,
            dt: self.dt,
            kelvin: self.kelvin.iter().map(|t| t - reference_k).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.kelvin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kelvin.is_empty()
    }

    pub fn peak_to_peak(&self) -> f64 {
        let (lo, hi) = self
            .kelvin
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
        hi - lo
    }
}

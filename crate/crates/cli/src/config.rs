//! Campaign configuration (TOML).
//!
//! ```toml
//! duration_s = 86400
//! internal_rate_hz = 1000
//! gate_s = 1
//! seeds = [1, 2, 3]
//! outputs = "out"
//! analyses = ["stability", "psd", "accuracy", "reciprocity", "correlation", "ledger"]
//!
//! [link]
//! length_km = 43
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fiberlink_core::LinkConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Stability,
    Psd,
    Accuracy,
    Reciprocity,
    Correlation,
    Ledger,
}

impl Analysis {
    pub const ALL: [Analysis; 6] = [
        Analysis::Stability,
        Analysis::Psd,
        Analysis::Accuracy,
        Analysis::Reciprocity,
        Analysis::Correlation,
        Analysis::Ledger,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::Stability => "stability",
            Analysis::Psd => "psd",
            Analysis::Accuracy => "accuracy",
            Analysis::Reciprocity => "reciprocity",
            Analysis::Correlation => "correlation",
            Analysis::Ledger => "ledger",
        }
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Analysis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Analysis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Analysis::ALL.iter().map(|a| a.name()).collect();
                CliError::Config(format!(
                    "unknown analysis '{s}' (expected one of {})",
                    known.join(", ")
                ))
            })
    }
}

fn default_rate() -> f64 {
    fiberlink_core::noisegen::DEFAULT_INTERNAL_RATE_HZ
}

fn default_gate() -> f64 {
    1.0
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

fn default_start_mjd() -> i64 {
    60_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub link: LinkConfig,
    pub duration_s: f64,
    #[serde(default = "default_rate")]
    pub internal_rate_hz: f64,
    #[serde(default = "default_gate")]
    pub gate_s: f64,
    pub seeds: Vec<u64>,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    /// Epoch of the record: integer MJD, seconds of day zero.
    #[serde(default = "default_start_mjd")]
    pub start_mjd: i64,
    /// Averaging time for accuracy and reciprocity; a quarter of the record
    /// when absent.
    #[serde(default)]
    pub tau_avg_s: Option<f64>,
    /// Cycle-slip threshold in robust σ; slips are not searched when absent.
    #[serde(default)]
    pub slip_threshold_sigma: Option<f64>,
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: CampaignConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Number of counter gates in the record.
    pub fn gates(&self) -> usize {
        (self.duration_s / self.gate_s).round() as usize
    }

    /// Every violated constraint, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .link
            .violations()
            .into_iter()
            .map(|v| format!("link.{v}"))
            .collect();
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            out.push(format!(
                "duration_s: must be positive, got {}",
                self.duration_s
            ));
        }
        if !(self.gate_s > 0.0 && self.gate_s.is_finite()) {
            out.push(format!("gate_s: must be positive, got {}", self.gate_s));
        } else if self.duration_s > 0.0 {
            let ratio = self.duration_s / self.gate_s;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio || ratio.round() < 1.0 {
                out.push(format!(
                    "gate_s: {} s does not divide duration_s {} s",
                    self.gate_s, self.duration_s
                ));
            }
        }
        if !(self.internal_rate_hz > 0.0 && self.internal_rate_hz.is_finite()) {
            out.push(format!(
                "internal_rate_hz: must be positive, got {}",
                self.internal_rate_hz
            ));
        } else if self.gate_s > 0.0 {
            let per_gate = self.internal_rate_hz * self.gate_s;
            if (per_gate - per_gate.round()).abs() > 1e-9 * per_gate || per_gate.round() < 2.0 {
                out.push(format!(
                    "internal_rate_hz: {} Hz must give a whole number (>= 2) of samples per {} s gate",
                    self.internal_rate_hz, self.gate_s
                ));
            }
        }
        if self.seeds.is_empty() {
            out.push("seeds: at least one seed is required".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            out.push("seeds: duplicate seeds".into());
        }
        if let Some(t) = self.tau_avg_s {
            if !(t > 0.0 && t.is_finite()) {
                out.push(format!("tau_avg_s: must be positive, got {t}"));
            }
        }
        if let Some(k) = self.slip_threshold_sigma {
            if !(k > 0.0 && k.is_finite()) {
                out.push(format!("slip_threshold_sigma: must be positive, got {k}"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "{} invalid setting(s):\n  {}",
                v.len(),
                v.join("\n  ")
            )))
        }
    }
}

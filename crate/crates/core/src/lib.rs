//! Simulation and analysis of hybrid two-way optical fiber links.
//!
//! The crate is organised bottom-up:
//!
//! * [`noisegen`] — reproducible power-law, correlated and temperature noise;
//! * [`linksim`] — the link model producing the four raw beat-note phases;
//! * [`counters`] — Π and Λ frequency counting and cycle-slip flagging;
//! * [`observables`] — two-way combinations, interferometric predictions and
//!   the reciprocity test;
//! * [`stats`] — deviations, spectra, slope fits, correlation and accuracy
//!   tables.
//!
//! ```
//! use fiberlink_core::{
//!     combine_observables, count_lambda, simulate_link, stability_deviation, Estimator,
//!     LinkConfig, TauGrid,
//! };
//!
//! let raw = simulate_link(&LinkConfig::default(), 2048.0, 4.0, 7).unwrap();
//! let set = combine_observables(&raw).unwrap();
//! let twb3 = &set.derived.as_ref().unwrap().twb3;
//! let y = count_lambda(twb3, 1.0, 4.0).unwrap();
//! let curve = stability_deviation(&y, Estimator::Mdev, &TauGrid::Octave).unwrap();
//! assert!(!curve.points.is_empty());
//! ```

pub mod counters;
pub mod error;
mod fft;
pub mod linksim;
pub mod noisegen;
pub mod observables;
pub mod series;
pub mod stats;

pub use counters::{count_lambda, count_pi, detect_cycle_slips, SlipReport};
pub use error::{Error, Result};
pub use linksim::{
    anc_correction, interferometric_phase, link_temperature_excursion, simulate_link,
    simulate_link_detailed, AncMode, AncServoConfig, LinkConfig, LinkRun, LinkTerms,
};
pub use noisegen::{
    derive_seed, gen_correlated_pair, gen_powerlaw, gen_temperature, NoiseSpec, NoiseTerm,
    TemperatureProcess, DEFAULT_CARRIER_HZ,
};
pub use observables::{
    combine_observables, predict_interferometric_ledger, reciprocity_estimate,
    reciprocity_estimate_with, DerivedObservables, InterferometricLedger, ObservableSet,
    Provenance, ReciprocityReport, Verdict,
};
pub use series::{CounterKind, FrequencySeries, PhaseSeries, Sampled, TemperatureSeries};
pub use stats::{
    accuracy_report, cross_correlation, fit_loglog_slope, phase_psd, stability_deviation, uptime,
    AccuracyReport, Estimator, Psd, PsdMethod, StabilityCurve, TauGrid,
};

//! Hybrid link model: two parallel fibers F1 and F2 from one cable, an
//! actively compensated link on F1 and a local two-way setup on F2.
//!
//! Each of the four beat notes recorded at the local site is the sum of an
//! interferometric term and a fiber term, plus optional detection, laser and
//! RF residuals:
//!
//! ```text
//! ANC = inter_ANC + RT_F1 / 2            (after the servo)
//! RT  = inter_RT  + backward(t) + forward(t - τ)
//! OWB = inter_OWB + backward(t)
//! OWF = inter_OWF + forward(t - τ)
//! ```
//!
//! Forward and backward propagation noise on F2 come from one one-way
//! process, so the round trip is reciprocal unless a non-reciprocal offset
//! is injected. F1 shares that process with correlation `interfiber_rho`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::noisegen::{
    derive_seed, gen_correlated_pair, gen_powerlaw, gen_temperature, NoiseSpec, TemperatureProcess,
    DEFAULT_CARRIER_HZ,
};
use crate::observables::{ObservableSet, Provenance};
use crate::series::{PhaseSeries, Sampled, TemperatureSeries};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Per-component seed offsets used with [`derive_seed`].
pub mod seed_offset {
    pub const FIBER: u64 = 1;
    pub const TEMPERATURE: u64 = 2;
    pub const DETECTION_ANC: u64 = 3;
    pub const DETECTION_RT: u64 = 4;
    pub const DETECTION_OWB: u64 = 5;
    pub const DETECTION_OWF: u64 = 6;
    pub const LASER: u64 = 7;
    pub const RF_ANC: u64 = 8;
    pub const RF_RT: u64 = 9;
    pub const RF_OWB: u64 = 10;
    pub const RF_OWF: u64 = 11;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AncMode {
    /// Exact subtraction of half the round-trip noise.
    Ideal,
    /// First-order integrator acting on round-trip-delayed observations.
    DelayedLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainShape {
    #[default]
    FirstOrderIntegrator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AncServoConfig {
    pub mode: AncMode,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub gain_shape: GainShape,
}

fn default_bandwidth() -> f64 {
    100.0
}

impl Default for AncServoConfig {
    fn default() -> Self {
        Self {
            mode: AncMode::Ideal,
            bandwidth_hz: default_bandwidth(),
            gain_shape: GainShape::FirstOrderIntegrator,
        }
    }
}

impl AncServoConfig {
    pub fn delayed_loop(bandwidth_hz: f64) -> Self {
        Self {
            mode: AncMode::DelayedLoop,
            bandwidth_hz,
            gain_shape: GainShape::FirstOrderIntegrator,
        }
    }

    /// Highest admissible bandwidth for a one-way delay `tau_s` and a loop
    /// sampled at `dt`: `min(1/(4τ), 1/(8 D dt))` where `D dt` is the
    /// round-trip observation delay in whole samples (at least one).
    pub fn bandwidth_limit(tau_s: f64, dt: f64) -> f64 {
        let delay_samples = loop_delay_samples(tau_s, dt) as f64;
        (1.0 / (4.0 * tau_s)).min(1.0 / (8.0 * delay_samples * dt))
    }
}

fn loop_delay_samples(tau_s: f64, dt: f64) -> usize {
    ((2.0 * tau_s / dt).round() as usize).max(1)
}

/// Physical parameters of the link.
///
/// Noise specs nested in the config are generated at the link carrier; their
/// own `carrier_hz` is ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    pub length_km: f64,
    pub group_index: f64,
    /// Explicit one-way delay. Derived from length and index when absent.
    pub tau_s: Option<f64>,
    pub carrier_hz: f64,
    /// Phase-temperature coefficient in fs/(K·m).
    pub gamma_fs_per_k_m: f64,
    pub l_bc_m: f64,
    pub l_oa_m: f64,
    pub l_ob_m: f64,
    /// Length mismatch of the F1 compensation interferometer.
    pub l_anc_m: f64,
    /// Round-trip propagation noise of F2.
    pub fiber_noise: NoiseSpec,
    pub interfiber_rho: f64,
    /// White detection floor applied independently to each beat note.
    pub detection_floor: NoiseSpec,
    /// Optional separate (higher) floor for the weak OWF beat note.
    pub owf_detection_floor: Option<NoiseSpec>,
    pub temperature: TemperatureProcess,
    /// Fractional-frequency asymmetry `(backward - forward) / 2` of F2,
    /// realized as a frequency offset of `-2 ×` this value on the forward
    /// path only. Zero means a reciprocal fiber.
    pub nonreciprocal_offset: f64,
    /// Laser phase residual, common to all four beat notes.
    pub laser_residual: NoiseSpec,
    /// RF residual, drawn independently per beat note.
    pub rf_residual: NoiseSpec,
    pub anc: AncServoConfig,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            length_km: 43.0,
            group_index: 1.468,
            tau_s: None,
            carrier_hz: DEFAULT_CARRIER_HZ,
            gamma_fs_per_k_m: 37.0,
            l_bc_m: 0.10,
            l_oa_m: 0.15,
            l_ob_m: 0.10,
            l_anc_m: 0.0,
            // Flicker FM below 80 mHz, white FM above.
            fiber_noise: NoiseSpec::single(-3, 8.0).with_term(-2, 100.0),
            interfiber_rho: 1.0 - 1e-4,
            detection_floor: NoiseSpec::single(0, 1e-3),
            owf_detection_floor: None,
            temperature: TemperatureProcess {
                diurnal_amplitude_k: 0.75,
                ..TemperatureProcess::constant(298.0)
            },
            nonreciprocal_offset: 0.0,
            laser_residual: NoiseSpec::silent(),
            rf_residual: NoiseSpec::silent(),
            anc: AncServoConfig::default(),
        }
    }
}

impl LinkConfig {
    /// A link with every noise source switched off.
    pub fn silent() -> Self {
        Self {
            fiber_noise: NoiseSpec::silent(),
            detection_floor: NoiseSpec::silent(),
            temperature: TemperatureProcess::constant(298.0),
            ..Self::default()
        }
    }

    pub fn derived_tau_s(&self) -> f64 {
        self.group_index * self.length_km * 1e3 / SPEED_OF_LIGHT
    }

    /// One-way propagation delay.
    pub fn delay_s(&self) -> f64 {
        self.tau_s.unwrap_or_else(|| self.derived_tau_s())
    }

    /// `L_BC + L_OA - L_OB`, the mismatch seen by the two-way observables.
    pub fn twb_mismatch_m(&self) -> f64 {
        self.l_bc_m + self.l_oa_m - self.l_ob_m
    }

    pub fn owf_detection(&self) -> &NoiseSpec {
        self.owf_detection_floor
            .as_ref()
            .unwrap_or(&self.detection_floor)
    }

    fn noise_specs(&self) -> impl Iterator<Item = (&'static str, &NoiseSpec)> {
        [
            ("fiber_noise", &self.fiber_noise),
            ("detection_floor", &self.detection_floor),
            ("owf_detection_floor", self.owf_detection()),
            ("laser_residual", &self.laser_residual),
            ("rf_residual", &self.rf_residual),
        ]
        .into_iter()
    }

    /// Every violated constraint, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name}: must be positive, got {v}"));
            }
        };
        positive("length_km", self.length_km);
        positive("group_index", self.group_index);
        positive("carrier_hz", self.carrier_hz);
        let mut non_negative = |name: &str, v: f64| {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(format!("{name}: must be finite and >= 0, got {v}"));
            }
        };
        non_negative("gamma_fs_per_k_m", self.gamma_fs_per_k_m);
        non_negative("l_bc_m", self.l_bc_m);
        non_negative("l_oa_m", self.l_oa_m);
        non_negative("l_ob_m", self.l_ob_m);
        non_negative("l_anc_m", self.l_anc_m);
        if let Some(tau) = self.tau_s {
            let derived = self.derived_tau_s();
            if !(tau > 0.0 && tau.is_finite()) {
                out.push(format!("tau_s: must be positive, got {tau}"));
            } else if (tau / derived - 1.0).abs() > 0.01 {
                out.push(format!(
                    "tau_s: {tau} s is inconsistent with length and group index ({derived} s)"
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.interfiber_rho) {
            out.push(format!(
                "interfiber_rho: must lie in [0, 1], got {}",
                self.interfiber_rho
            ));
        }
        if !self.nonreciprocal_offset.is_finite() {
            out.push("nonreciprocal_offset: must be finite".into());
        }
        for (name, spec) in self.noise_specs() {
            if let Err(e) = spec.clone().with_carrier(self.carrier_hz).validate() {
                out.push(format!("{name}: {e}"));
            }
        }
        if let Err(e) = self.temperature.validate() {
            out.push(format!("temperature: {e}"));
        }
        if self.anc.mode == AncMode::DelayedLoop
            && !(self.anc.bandwidth_hz > 0.0 && self.anc.bandwidth_hz.is_finite())
        {
            out.push(format!(
                "anc.bandwidth_hz: must be positive, got {}",
                self.anc.bandwidth_hz
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().first() {
            None => Ok(()),
            Some(v) => Err(invalid("link", v.clone())),
        }
    }

    /// SHA-256 of the canonical JSON form of the config, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("link config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// `φ = 2πν γ ΔT δL` pointwise, with `γ` in fs/(K·m).
pub fn interferometric_phase(
    carrier_hz: f64,
    gamma_fs_per_k_m: f64,
    delta_t: &TemperatureSeries,
    delta_l_m: f64,
) -> Result<PhaseSeries> {
    if delta_t.is_empty() {
        return Err(invalid("delta_t", "temperature series is empty"));
    }
    let k = 2.0 * PI * carrier_hz * gamma_fs_per_k_m * 1e-15 * delta_l_m;
    let values = delta_t.kelvin.iter().map(|t| k * t).collect();
    PhaseSeries::new(delta_t.t0, delta_t.dt, carrier_hz, values)
}

/// Correction applied by the F1 servo for an observed round-trip phase.
///
/// In ideal mode this is exactly `-round_trip / 2`. The delayed loop is a
/// discrete integrator `c[k+1] = c[k] - g e[k+1-D]` on the round-trip error
/// `e = rt + 2c`, with `g = π B dt` and `D` the round-trip delay in whole
/// samples, so `c` follows `-rt/2` below the bandwidth `B`.
pub fn anc_correction(
    round_trip: &PhaseSeries,
    servo: &AncServoConfig,
    tau_s: f64,
) -> Result<PhaseSeries> {
    match servo.mode {
        AncMode::Ideal => {
            let values = round_trip.values().iter().map(|v| -0.5 * v).collect();
            Ok(round_trip.rebuilt(values, round_trip.gaps().to_vec()))
        }
        AncMode::DelayedLoop => {
            if !(tau_s > 0.0 && tau_s.is_finite()) {
                return Err(invalid("tau_s", format!("must be positive, got {tau_s}")));
            }
            let dt = round_trip.dt();
            let limit = AncServoConfig::bandwidth_limit(tau_s, dt);
            if servo.bandwidth_hz.is_nan()
                || servo.bandwidth_hz <= 0.0
                || servo.bandwidth_hz > limit
            {
                return Err(Error::AncBandwidth {
                    bandwidth_hz: servo.bandwidth_hz,
                    limit_hz: limit,
                });
            }
            let delay = loop_delay_samples(tau_s, dt);
            let gain = PI * servo.bandwidth_hz * dt;
            let rt = round_trip.values();
            let gaps = round_trip.gaps();
            let n = rt.len();
            let mut c = vec![0.0; n];
            let mut err = vec![0.0; n];
            for k in 0..n {
                err[k] = if gaps[k] { 0.0 } else { rt[k] + 2.0 * c[k] };
                if k + 1 < n {
                    c[k + 1] = if k + 1 >= delay {
                        let obs = k + 1 - delay;
                        if gaps[obs] {
                            c[k]
                        } else {
                            c[k] - gain * err[obs]
                        }
                    } else {
                        c[k]
                    };
                }
            }
            Ok(round_trip.rebuilt(c, vec![false; n]))
        }
    }
}

/// Temperature excursion `T - mean` seen by the interferometers in a
/// simulation with master `seed`, `n` samples at step `dt`. Identical to the
/// excursion [`simulate_link_detailed`] uses, so the interferometric ledger
/// of a run can be rebuilt from its provenance.
pub fn link_temperature_excursion(
    config: &LinkConfig,
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<TemperatureSeries> {
    let temperature = gen_temperature(
        &config.temperature,
        n,
        dt,
        derive_seed(seed, seed_offset::TEMPERATURE),
    )?;
    Ok(temperature.excursion(config.temperature.mean_k))
}

/// Individual terms of a simulation, kept for diagnostics and tests.
#[derive(Debug, Clone)]
pub struct LinkTerms {
    /// Temperature excursion `T - mean` of the interferometers.
    pub delta_t: TemperatureSeries,
    pub inter_anc: PhaseSeries,
    pub inter_rt: PhaseSeries,
    pub inter_owb: PhaseSeries,
    pub inter_owf: PhaseSeries,
    /// F1 round-trip propagation noise before compensation.
    pub rt_f1: PhaseSeries,
    /// F1 fiber term of the ANC beat note (minus the servo correction).
    pub fiber_anc: PhaseSeries,
    pub fiber_rt: PhaseSeries,
    /// `backward-F2(t)`.
    pub fiber_owb: PhaseSeries,
    /// `forward-F2(t - τ)`.
    pub fiber_owf: PhaseSeries,
    /// Delay actually applied, in internal samples.
    pub delay_samples: usize,
}

#[derive(Debug, Clone)]
pub struct LinkRun {
    pub observables: ObservableSet<PhaseSeries>,
    pub terms: LinkTerms,
}

/// Simulates `duration_s` of the link at `internal_rate_hz`. The result has
/// `duration * rate + 1` samples starting at `t = 0`; only raw members are
/// populated.
pub fn simulate_link(
    config: &LinkConfig,
    duration_s: f64,
    internal_rate_hz: f64,
    seed: u64,
) -> Result<ObservableSet<PhaseSeries>> {
    simulate_link_detailed(config, duration_s, internal_rate_hz, seed).map(|run| run.observables)
}

/// Like [`simulate_link`] but also returns every term of the sum.
pub fn simulate_link_detailed(
    config: &LinkConfig,
    duration_s: f64,
    internal_rate_hz: f64,
    seed: u64,
) -> Result<LinkRun> {
    config.validate()?;
    if !(internal_rate_hz > 0.0 && internal_rate_hz.is_finite()) {
        return Err(invalid(
            "internal_rate_hz",
            format!("must be positive, got {internal_rate_hz}"),
        ));
    }
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(invalid(
            "duration_s",
            format!("must be positive, got {duration_s}"),
        ));
    }
    let steps = duration_s * internal_rate_hz;
    if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
        return Err(invalid(
            "duration_s",
            format!("{duration_s} s is not a whole number of samples at {internal_rate_hz} Hz"),
        ));
    }
    let steps = steps.round() as usize;
    if steps < 1 << 10 {
        return Err(Error::RecordTooShort(format!(
            "{steps} internal samples, need at least 1024"
        )));
    }
    let dt = 1.0 / internal_rate_hz;
    let nyquist = 0.5 * internal_rate_hz;
    for (name, spec) in config.noise_specs() {
        if let Some(fc) = spec.high_freq_cutoff_hz {
            if !spec.is_silent() && fc > nyquist * (1.0 + 1e-9) {
                return Err(invalid(
                    "internal_rate_hz",
                    format!("{internal_rate_hz} Hz is below twice the {fc} Hz cutoff of {name}"),
                ));
            }
        }
    }

    let n = steps + 1;
    let carrier = config.carrier_hz;
    let tau = config.delay_s();
    let delay = (tau * internal_rate_hz).round() as usize;
    if delay == 0 {
        log::warn!(
            "one-way delay {tau:.3e} s rounds to zero samples at {internal_rate_hz} Hz; raise the internal rate for delay-sensitive studies"
        );
    }
    let spec_at = |s: &NoiseSpec| s.clone().with_carrier(carrier);

    // Interferometric terms.
    let delta_t = link_temperature_excursion(config, n, dt, seed)?;
    let inter = |dl: f64| interferometric_phase(carrier, config.gamma_fs_per_k_m, &delta_t, dl);
    let inter_anc = inter(config.l_anc_m)?;
    let inter_rt = inter(2.0 * config.l_bc_m)?;
    let inter_owb = inter(2.0 * config.l_bc_m + config.l_oa_m - config.l_ob_m)?;
    let inter_owf = inter(config.l_ob_m - config.l_oa_m)?;

    // One-way processes of F2 (p) and F1 (q); the round trip of each is the
    // sum of two one-way passes, so each carries a quarter of the RT level.
    let one_way = spec_at(&config.fiber_noise).scaled(0.25);
    let (p, q) = gen_correlated_pair(
        &one_way,
        config.interfiber_rho,
        n + delay,
        dt,
        derive_seed(seed, seed_offset::FIBER),
    )?;
    let p = p.values();
    let q = q.values();
    let forward_rate = -2.0 * config.nonreciprocal_offset * 2.0 * PI * carrier;
    let backward: Vec<f64> = (0..n).map(|k| p[k + delay]).collect();
    let forward_lagged: Vec<f64> = (0..n)
        .map(|k| {
            let ramp = if forward_rate != 0.0 {
                forward_rate * (k as f64 - delay as f64) * dt
            } else {
                0.0
            };
            p[k] + ramp
        })
        .collect();
    let rt_f2: Vec<f64> = backward
        .iter()
        .zip(&forward_lagged)
        .map(|(b, f)| b + f)
        .collect();
    let rt_f1: Vec<f64> = (0..n).map(|k| q[k + delay] + q[k]).collect();

    let mk = |v: Vec<f64>| PhaseSeries::new(0.0, dt, carrier, v);
    let rt_f1 = mk(rt_f1)?;
    let correction = anc_correction(&rt_f1, &config.anc, tau)?;
    let fiber_anc = correction.rebuilt(
        correction.values().iter().map(|c| -c).collect(),
        vec![false; n],
    );
    let fiber_rt = mk(rt_f2)?;
    let fiber_owb = mk(backward)?;
    let fiber_owf = mk(forward_lagged)?;

    // Additive residuals.
    let draw = |spec: &NoiseSpec, offset: u64| -> Result<Option<Vec<f64>>> {
        if spec.is_silent() {
            return Ok(None);
        }
        let x = gen_powerlaw(&spec_at(spec), n, dt, derive_seed(seed, offset))?;
        Ok(Some(x.into_values()))
    };
    let laser = draw(&config.laser_residual, seed_offset::LASER)?;
    let channels = [
        (
            &inter_anc,
            &fiber_anc,
            &config.detection_floor,
            seed_offset::DETECTION_ANC,
            seed_offset::RF_ANC,
        ),
        (
            &inter_rt,
            &fiber_rt,
            &config.detection_floor,
            seed_offset::DETECTION_RT,
            seed_offset::RF_RT,
        ),
        (
            &inter_owb,
            &fiber_owb,
            &config.detection_floor,
            seed_offset::DETECTION_OWB,
            seed_offset::RF_OWB,
        ),
        (
            &inter_owf,
            &fiber_owf,
            config.owf_detection(),
            seed_offset::DETECTION_OWF,
            seed_offset::RF_OWF,
        ),
    ];
    let mut raw = Vec::with_capacity(4);
    for (inter, fiber, detection, det_offset, rf_offset) in channels {
        let mut values: Vec<f64> = inter
            .values()
            .iter()
            .zip(fiber.values())
            .map(|(i, f)| i + f)
            .collect();
        for extra in [
            draw(detection, det_offset)?,
            laser.clone(),
            draw(&config.rf_residual, rf_offset)?,
        ]
        .into_iter()
        .flatten()
        {
            for (v, e) in values.iter_mut().zip(extra) {
                *v += e;
            }
        }
        raw.push(mk(values)?);
    }
    let mut raw = raw.into_iter();
    let observables = ObservableSet {
        anc: raw.next().unwrap(),
        rt: raw.next().unwrap(),
        owb: raw.next().unwrap(),
        owf: raw.next().unwrap(),
        derived: None,
        provenance: Some(Provenance {
            config_hash: config.hash(),
            seed,
        }),
    };
    Ok(LinkRun {
        observables,
        terms: LinkTerms {
            delta_t,
            inter_anc,
            inter_rt,
            inter_owb,
            inter_owf,
            rt_f1,
            fiber_anc,
            fiber_rt,
            fiber_owb,
            fiber_owf,
            delay_samples: delay,
        },
    })
}

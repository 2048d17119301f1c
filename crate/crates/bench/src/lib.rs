//! Inputs shared by the benchmarks in `benches/`.

use fiberlink_core::{count_lambda, gen_powerlaw, FrequencySeries, NoiseSpec, PhaseSeries};

/// White phase noise at `rate_hz` covering `seconds`.
pub fn white_phase(seconds: usize, rate_hz: f64, seed: u64) -> PhaseSeries {
    let n = seconds * rate_hz as usize + 1;
    gen_powerlaw(&NoiseSpec::single(0, 1e-3), n, 1.0 / rate_hz, seed).expect("valid spec")
}

/// Λ-counted white phase noise, one sample per second.
pub fn lambda_record(seconds: usize, seed: u64) -> FrequencySeries {
    count_lambda(&white_phase(seconds + 1, 10.0, seed), 1.0, 10.0).expect("valid gate")
}

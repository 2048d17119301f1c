use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported power-law exponent {0}; supported exponents are 0, -1, -2, -3, -4")]
    UnsupportedExponent(i32),

    #[error("record too short: {0}")]
    RecordTooShort(String),

    #[error("series are misaligned: {0}")]
    Misaligned(String),

    #[error("gate {gate_s} s is not an integer multiple of the sample step {step_s} s")]
    GateNotMultiple { gate_s: f64, step_s: f64 },

    #[error("loop bandwidth {bandwidth_hz} Hz exceeds the delay-limited bound of {limit_hz} Hz")]
    AncBandwidth { bandwidth_hz: f64, limit_hz: f64 },

    #[error("too many gaps: {valid} valid samples out of {total}")]
    TooManyGaps { valid: usize, total: usize },

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("non-positive value {value} at abscissa {at} inside the fit range")]
    NonPositive { at: f64, value: f64 },

    #[error("series contains gaps; {0} requires a gap-free segment")]
    GappedInput(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

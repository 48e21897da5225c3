use alloc::string::String;

/// Errors raised by the models and numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {what} must be {requirement} (got {value})")]
    Domain {
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("displacement {x} m outside the FPI dynamic range ±{dynamic_range} m")]
    OutOfRange { x: f64, dynamic_range: f64 },
    #[error("ringdown fit failed: {reason}")]
    FitFailure { reason: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("required optical power {required} W exceeds the damage threshold {allowed} W")]
    PowerLimit { required: f64, allowed: f64 },
    #[error("initial gain {g0} infeasible at P0 = {power} W; needs at least {min_power} W")]
    Infeasible { g0: f64, power: f64, min_power: f64 },
    #[error("integration did not converge: estimate {estimate}, error {error_estimate} after {intervals} intervals")]
    Integration {
        estimate: f64,
        error_estimate: f64,
        intervals: usize,
    },
    #[error("simulation diverged at step {step} (|x| = {x})")]
    Divergence { step: usize, x: f64 },
    #[error("spectrum error: {0}")]
    Spectrum(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn require_positive(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            what,
            requirement: "finite and > 0",
            value,
        })
    }
}

pub(crate) fn require_non_negative(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            what,
            requirement: "finite and >= 0",
            value,
        })
    }
}

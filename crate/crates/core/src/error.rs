use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A derivative or an updated state contained NaN or infinity.
    IntegrationFailure {
        t: f64,
        index: usize,
        /// Last state that passed the finiteness scan, when known.
        last_valid: Option<Vec<f64>>,
    },
    /// Rotor speed at or below the admissible minimum.
    Singularity { z: f64 },
    /// No positive pitch configuration balances the rotor at the requested point.
    NoOperatingPoint { f: f64, g: f64 },
    /// An input violated a documented precondition.
    Contract(String),
    /// Invalid configuration value.
    Config(String),
    /// An iterative numerical routine did not converge.
    Numerical(String),
    /// Empirical gain requested with zero disturbance energy.
    UndefinedGain,
    /// A gain sufficient condition failed in strict mode.
    GainCheck(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::IntegrationFailure { t, index, .. } => {
                write!(f, "integration failure at t = {t}: non-finite value at state index {index}")
            }
            Error::Singularity { z } => write!(f, "rotor speed singularity (z = {z})"),
            Error::NoOperatingPoint { f: fv, g } => {
                write!(f, "no feasible operating point (f = {fv}, g = {g})")
            }
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical error: {msg}"),
            Error::UndefinedGain => write!(f, "L2 gain undefined: disturbance energy is zero"),
            Error::GainCheck(msg) => write!(f, "gain check failed: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

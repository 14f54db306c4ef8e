use thiserror::Error;

/// Errors produced by the identification, tuning and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid transfer function: {0}")]
    InvalidTransferFunction(String),

    #[error("transfer function is improper (numerator degree {num} > denominator degree {den})")]
    Improper { num: usize, den: usize },

    #[error("plant must be strictly proper")]
    NotStrictlyProper,

    #[error("singular frequency: {omega} rad/s is a pole on the imaginary axis")]
    SingularFrequency { omega: f64 },

    #[error("unsupported relay phase {0} deg (expected 0, -60 or -120)")]
    UnsupportedRelayPhase(f64),

    #[error("band [{lo}, {hi}] rad/s lies outside the approximation band [{valid_lo}, {valid_hi}] rad/s")]
    BandOutsideValid {
        lo: f64,
        hi: f64,
        valid_lo: f64,
        valid_hi: f64,
    },

    #[error("invalid relay configuration: {0}")]
    InvalidRelayConfig(String),

    #[error("limit cycle did not converge")]
    NotConverged,

    #[error("unclassifiable plant: no self-oscillation at relay phases 0, -60 and -120 deg")]
    Unclassifiable,

    #[error("identified frequency {omega} rad/s lies outside the approximation band [1e-3, 1e3] rad/s")]
    OutsideApproximationBand { omega: f64 },

    #[error("resonance frequency {omega_r} rad/s is not below the identified frequency {omega_nu} rad/s")]
    ResonanceAboveIdentified { omega_r: f64, omega_nu: f64 },

    #[error("singular tuning denominator (eta^2 * omega_r^2 == omega_nu^2)")]
    SingularTuning,

    #[error("invalid tuning input: {0}")]
    InvalidTuningInput(String),

    #[error("invalid tracking configuration: {0}")]
    InvalidTrackingConfig(String),

    #[error("no gain crossover found")]
    NoGainCrossover,

    #[error("invalid frequency band or grid: {0}")]
    InvalidBand(String),

    #[error("invalid batch specification: {0}")]
    InvalidBatch(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

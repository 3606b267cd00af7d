use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A frequency sits at or above the Nyquist limit of the rate it is used with.
    #[error("frequency {freq} Hz aliases: it must lie below the Nyquist limit of {nyquist} Hz")]
    Aliasing { freq: f64, nyquist: f64 },

    /// The transmitter rate cannot carry the carrier plus its upper sideband.
    #[error("output rate must exceed 2(f_c+w) = {required} Hz to avoid aliasing, got {rate} Hz")]
    SamplingRate { required: f64, rate: u32 },

    /// The lowest modulated frequency reaches into the audible range.
    #[error("f_c−w must exceed 20000 Hz for an inaudible signal: f_c={carrier} Hz, w={bandwidth} Hz gives lowest frequency {lowest} Hz")]
    Audible {
        carrier: f64,
        bandwidth: f64,
        lowest: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("input too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("input is silent (RMS {rms:e} below the {gate:e} gate)")]
    Silent { rms: f64, gate: f64 },

    #[error("sample rate mismatch: {expected} Hz vs {found} Hz")]
    RateMismatch { expected: u32, found: u32 },

    #[error("coefficient count mismatch: {left} vs {right}")]
    CoefficientMismatch { left: usize, right: usize },

    #[error("unsupported audio encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("malformed WAV file {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),

    #[error("classifier model is not trained")]
    Untrained,

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

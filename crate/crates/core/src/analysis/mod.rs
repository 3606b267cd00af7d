//! Measures of attack quality: MFCCs and the cepstral distortion between an
//! original command and what a microphone recovered, plus parameter sweeps
//! over carrier frequency and modulation depth.

pub mod mcd;
pub mod mfcc;
pub mod sweep;

pub use mcd::{dtw, mcd, waveform_mcd};
pub use mfcc::{mfcc, MfccConfig, MfccMatrix};
pub use sweep::{parse_grid, prime_fc, sweep_carrier, sweep_depth, PrimeCarrier, SweepAxis, SweepPoint, SweepReport, ToneBaseband};

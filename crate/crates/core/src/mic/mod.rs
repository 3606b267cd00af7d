//! The victim side of the attack: propagation to the microphone, the
//! microphone's frequency-selective square-law transduction, and the
//! anti-alias filter and ADC that follow it.

pub mod channel;
pub mod harmonics;
pub mod microphone;

pub use channel::{apply_channel, ChannelModel, Scene, DBFS_AT_94_DB_SPL};
pub use harmonics::{harmonic_amplitudes, Harmonics};
pub use microphone::{capture, FrequencyResponse, MicProfile, MicrophoneModel};

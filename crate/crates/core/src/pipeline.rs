//! End-to-end paths from a voice command to what the victim's ADC delivers.

use crate::error::Result;
use crate::mic::{apply_channel, ChannelModel, MicrophoneModel};
use crate::modulation::{am_modulate, ModulationParams};
use crate::signal::{fir_lowpass, resample, Waveform, ULTRASONIC_RATE};

/// Noise streams derived from one user seed must not coincide.
fn substream(seed: u64, tag: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(tag)
}

/// Band-limits `voice` to `w` Hz (stopband from `w`, passband to 0.85 `w`).
/// Voices already narrower than `w` come back unchanged.
pub fn limit_bandwidth(voice: &Waveform, w: f64) -> Result<Waveform> {
    if w >= voice.nyquist() {
        return Ok(voice.clone());
    }
    fir_lowpass(voice, 0.85 * w, 0.15 * w)
}

/// Attack path: limit the voice to the declared bandwidth, modulate onto
/// the carrier at 192 kHz, propagate, capture.
pub fn inject(
    voice: &Waveform,
    params: &ModulationParams,
    channel: &ChannelModel,
    mic: &MicrophoneModel,
    seed: u64,
) -> Result<Waveform> {
    params.validate()?;
    let voice = limit_bandwidth(voice, params.bandwidth_hz)?;
    let tx = am_modulate(&voice, params, ULTRASONIC_RATE)?;
    let incident = apply_channel(&tx, channel, substream(seed, 1))?;
    mic.capture(&incident, substream(seed, 2))
}

/// Genuine path: the voice itself played at 192 kHz, propagated and
/// captured.
pub fn record(voice: &Waveform, channel: &ChannelModel, mic: &MicrophoneModel, seed: u64) -> Result<Waveform> {
    let tx = resample(voice, ULTRASONIC_RATE)?;
    let incident = apply_channel(&tx, channel, substream(seed, 1))?;
    mic.capture(&incident, substream(seed, 2))
}

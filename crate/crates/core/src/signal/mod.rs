//! Sampled waveforms and the DSP building blocks every other module sits on:
//! tone synthesis, WAV I/O, Kaiser-windowed FIR filtering, band-limited
//! resampling and amplitude-calibrated spectra.
//!
//! Samples are `f64` throughout with a nominal full scale of ±1.0.
//! Quantization only happens in [`wav::save_wav`] and in the ADC stage of the
//! microphone model.

mod fft;
pub mod filter;
pub mod resample;
pub mod spectrum;
pub mod wav;

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub use filter::{fir_lowpass, LOWPASS_ATTENUATION_DB};
pub use resample::resample;
pub use spectrum::{band_energy, spectrum, welch, Spectrum, Window};
pub use wav::{load_wav, save_wav, BitDepth, LoadedWav};

pub(crate) use fft::{power_spectrum, real_fft, zero_phase_gain};

/// Default working rate for anything carrying ultrasound.
pub const ULTRASONIC_RATE: u32 = 192_000;

/// Uniformly sampled, real-valued audio.
///
/// Always non-empty and finite; the constructors enforce it so downstream
/// operations never see NaN or an empty buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
    label: Option<String>,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Waveform {
            samples,
            sample_rate,
            label: None,
        })
    }

    /// Internal constructor for buffers produced by our own arithmetic.
    pub(crate) fn from_raw(samples: Vec<f64>, sample_rate: u32, label: Option<String>) -> Self {
        debug_assert!(!samples.is_empty());
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Waveform {
            samples,
            sample_rate,
            label,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate as f64 / 2.0
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| f64::max(m, s.abs()))
    }

    pub fn scaled(&self, gain: f64) -> Waveform {
        self.map(|s| s * gain)
    }

    /// Applies `f` to every sample, keeping rate and label.
    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Waveform {
        Waveform::from_raw(
            self.samples.iter().map(|&s| f(s)).collect(),
            self.sample_rate,
            self.label.clone(),
        )
    }

    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Waveform {
        Waveform::from_raw(samples, self.sample_rate, self.label.clone())
    }

    /// Copies the samples in `[start, end)` seconds.
    pub fn slice_seconds(&self, start: f64, end: f64) -> Result<Waveform> {
        if !(start >= 0.0 && start < end && end <= self.duration() + 0.5 / self.sample_rate as f64) {
            return Err(Error::invalid(format!(
                "span [{start}, {end}) s outside waveform of {} s",
                self.duration()
            )));
        }
        let rate = self.sample_rate as f64;
        let a = (start * rate).round() as usize;
        let b = ((end * rate).round() as usize).min(self.samples.len());
        if b <= a {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
        Ok(self.with_samples(self.samples[a..b].to_vec()))
    }

    /// Sample-wise sum; both waveforms must share a rate. The shorter one is
    /// treated as zero-padded.
    pub fn mix(&self, other: &Waveform) -> Result<Waveform> {
        if self.sample_rate != other.sample_rate {
            return Err(Error::RateMismatch {
                expected: self.sample_rate,
                found: other.sample_rate,
            });
        }
        let n = self.len().max(other.len());
        let get = |w: &Waveform, i: usize| w.samples.get(i).copied().unwrap_or(0.0);
        Ok(self.with_samples((0..n).map(|i| get(self, i) + get(other, i)).collect()))
    }
}

pub(crate) fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt()
}

pub(crate) fn db20(x: f64) -> f64 {
    20.0 * x.max(1e-300).log10()
}

pub(crate) fn db10(x: f64) -> f64 {
    10.0 * x.max(1e-300).log10()
}

/// A pure sinusoid with zero initial phase, `round(duration·rate)` samples long.
pub fn make_tone(freq: f64, amplitude: f64, duration: f64, rate: u32) -> Result<Waveform> {
    let nyquist = rate as f64 / 2.0;
    if rate == 0 {
        return Err(Error::invalid("sample rate must be positive"));
    }
    if !(freq > 0.0 && freq < nyquist) {
        return Err(Error::Aliasing { freq, nyquist });
    }
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        return Err(Error::invalid(format!("tone amplitude {amplitude} outside (0, 1]")));
    }
    let n = (duration * rate as f64).round();
    if !(n >= 1.0) {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let w = 2.0 * PI * freq / rate as f64;
    let samples = (0..n as usize).map(|i| amplitude * (w * i as f64).sin()).collect();
    Ok(Waveform::from_raw(samples, rate, Some(format!("tone {freq} Hz"))))
}

/// Sum of sinusoids `(freq, amplitude)` at a common rate; used for test
/// signals and the defense examples.
pub fn make_multitone(tones: &[(f64, f64)], duration: f64, rate: u32) -> Result<Waveform> {
    let mut acc: Option<Waveform> = None;
    for &(f, a) in tones {
        let t = make_tone(f, a.min(1.0), duration, rate)?;
        let t = if a > 1.0 { t.scaled(a) } else { t };
        acc = Some(match acc {
            None => t,
            Some(w) => w.mix(&t)?,
        });
    }
    acc.ok_or_else(|| Error::invalid("no tones given"))
}

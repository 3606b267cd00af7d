//! Square-law microphone and acquisition chain.
//!
//! `capture` runs, in order:
//!
//! 1. the diaphragm's magnitude response, as a zero-phase spectral gain;
//! 2. the transfer characteristic `s → A·s + B·s²`;
//! 3. the anti-alias lowpass at `lpf_cutoff`;
//! 4. resampling to `adc_rate`;
//! 5. rounding to `adc_bits`;
//! 6. additive acquisition noise at `noise_floor_dbfs`.
//!
//! For an AM tone `A_c(1 + m·cos ωt)·cos ω_c t` the quadratic term leaves
//! `B·A_c²·(m·cos ωt + (m²/4)·cos 2ωt)` below the carrier, so the second
//! harmonic sits at `m/4` of the first on a flat response.

use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::filter::LowpassDesign;
use crate::signal::{resample, Waveform, LOWPASS_ATTENUATION_DB};

/// Piecewise-linear magnitude response: `(hz, gain_db)` breakpoints,
/// interpolated linearly in dB and held constant beyond either end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrequencyResponse(Vec<(f64, f64)>);

impl FrequencyResponse {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        let r = FrequencyResponse(breakpoints);
        r.validate()?;
        Ok(r)
    }

    pub fn flat() -> Self {
        FrequencyResponse(vec![(20.0, 0.0), (48_000.0, 0.0)])
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::invalid("frequency response needs at least one breakpoint"));
        }
        if self.0.iter().any(|(f, g)| !f.is_finite() || !g.is_finite() || *f < 0.0) {
            return Err(Error::invalid("frequency response breakpoints must be finite, hz ≥ 0"));
        }
        if self.0.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("frequency response breakpoints must be strictly increasing in hz"));
        }
        Ok(())
    }

    pub fn max_freq(&self) -> f64 {
        self.0.last().map_or(0.0, |b| b.0)
    }

    pub fn is_flat(&self) -> bool {
        self.0.iter().all(|b| b.1 == 0.0)
    }

    pub fn gain_db(&self, f: f64) -> f64 {
        let bp = &self.0;
        if f <= bp[0].0 {
            return bp[0].1;
        }
        for w in bp.windows(2) {
            let ((f0, g0), (f1, g1)) = (w[0], w[1]);
            if f <= f1 {
                return g0 + (g1 - g0) * (f - f0) / (f1 - f0);
            }
        }
        bp[bp.len() - 1].1
    }

    pub fn gain(&self, f: f64) -> f64 {
        10f64.powf(self.gain_db(f) / 20.0)
    }
}

/// The built-in synthetic microphones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MicProfile {
    /// Unit response from 20 Hz to 48 kHz.
    Flat,
    /// Band-pass hump centred on 28 kHz.
    Selective,
    /// Rolls off steadily above 20 kHz.
    Weak,
}

impl MicProfile {
    pub const SELECTIVE_PEAK_HZ: f64 = 28_000.0;

    pub fn response(self) -> FrequencyResponse {
        FrequencyResponse(match self {
            MicProfile::Flat => return FrequencyResponse::flat(),
            MicProfile::Selective => vec![
                (20.0, 0.0),
                (18_000.0, 0.0),
                (22_000.0, -12.0),
                (Self::SELECTIVE_PEAK_HZ, 6.0),
                (34_000.0, -12.0),
                (48_000.0, -24.0),
            ],
            MicProfile::Weak => vec![(20.0, 0.0), (20_000.0, 0.0), (48_000.0, -40.0)],
        })
    }

    pub fn model(self) -> MicrophoneModel {
        MicrophoneModel {
            freq_response: self.response(),
            ..Default::default()
        }
    }
}

impl FromStr for MicProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flat" => Ok(MicProfile::Flat),
            "selective" => Ok(MicProfile::Selective),
            "weak" => Ok(MicProfile::Weak),
            other => Err(Error::invalid(format!("unknown mic profile '{other}' (flat, selective, weak)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MicrophoneModel {
    /// `A`, the linear gain.
    pub gain_linear: f64,
    /// `B`, the quadratic gain per full-scale unit. Zero is an ideal linear mic.
    pub gain_quadratic: f64,
    pub freq_response: FrequencyResponse,
    pub lpf_cutoff: f64,
    pub lpf_transition: f64,
    pub adc_rate: u32,
    pub adc_bits: u32,
    /// RMS level of acquisition noise; `None` for a noiseless ADC.
    pub noise_floor_dbfs: Option<f64>,
}

impl Default for MicrophoneModel {
    fn default() -> Self {
        MicrophoneModel {
            gain_linear: 1.0,
            gain_quadratic: 0.1,
            freq_response: FrequencyResponse::flat(),
            lpf_cutoff: 20_000.0,
            lpf_transition: 2_000.0,
            adc_rate: 44_100,
            adc_bits: 16,
            noise_floor_dbfs: Some(-90.0),
        }
    }
}

impl MicrophoneModel {
    pub fn linear(mut self) -> Self {
        self.gain_quadratic = 0.0;
        self
    }

    pub fn with_quadratic(mut self, b: f64) -> Self {
        self.gain_quadratic = b;
        self
    }

    pub fn with_response(mut self, response: FrequencyResponse) -> Self {
        self.freq_response = response;
        self
    }

    pub fn with_noise_floor(mut self, dbfs: Option<f64>) -> Self {
        self.noise_floor_dbfs = dbfs;
        self
    }

    /// Loads a model from TOML; absent keys take the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let m: MicrophoneModel = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("microphone model serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain_linear > 0.0 && self.gain_linear.is_finite()) {
            return Err(Error::invalid("linear gain A must be positive"));
        }
        if !(self.gain_quadratic >= 0.0 && self.gain_quadratic.is_finite()) {
            return Err(Error::invalid("quadratic gain B must be ≥ 0"));
        }
        self.freq_response.validate()?;
        if !(self.lpf_cutoff > 0.0 && self.lpf_cutoff <= self.adc_rate as f64 / 2.0) {
            return Err(Error::invalid(format!(
                "lpf cutoff {} Hz must lie in (0, adc_rate/2 = {}]",
                self.lpf_cutoff,
                self.adc_rate as f64 / 2.0
            )));
        }
        if !(self.lpf_transition > 0.0) {
            return Err(Error::invalid("lpf transition must be positive"));
        }
        if !(2..=32).contains(&self.adc_bits) {
            return Err(Error::invalid(format!("adc bits {} outside 2..=32", self.adc_bits)));
        }
        if self.noise_floor_dbfs.is_some_and(|n| !n.is_finite()) {
            return Err(Error::invalid("noise floor must be finite"));
        }
        Ok(())
    }

    fn check_incident_rate(&self, incident: &Waveform) -> Result<()> {
        let needed = 2.0 * self.freq_response.max_freq();
        if (incident.sample_rate() as f64) < needed {
            return Err(Error::invalid(format!(
                "incident rate {} Hz is below twice the highest response breakpoint ({needed} Hz)",
                incident.sample_rate()
            )));
        }
        Ok(())
    }

    /// Diaphragm response and square law only, at the incident rate. This is
    /// the wideband signal a hardware defense ahead of the ADC would see.
    pub fn transduce(&self, incident: &Waveform) -> Result<Waveform> {
        self.validate()?;
        self.check_incident_rate(incident)?;
        let rate = incident.sample_rate() as f64;
        let shaped = if self.freq_response.is_flat() {
            incident.samples().to_vec()
        } else {
            crate::signal::zero_phase_gain(incident.samples(), rate, |f| self.freq_response.gain(f))
        };
        let (a, b) = (self.gain_linear, self.gain_quadratic);
        Ok(incident.with_samples(shaped.into_iter().map(|s| a * s + b * s * s).collect()))
    }

    /// Anti-alias filter, ADC resampling, quantization and acquisition noise
    /// applied to an already transduced signal.
    pub fn digitize(&self, transduced: &Waveform, seed: u64) -> Result<Waveform> {
        let lpf = LowpassDesign::new(
            transduced.sample_rate(),
            self.lpf_cutoff,
            self.lpf_transition,
            LOWPASS_ATTENUATION_DB,
        )?;
        let filtered = transduced.with_samples(lpf.apply(transduced.samples()));
        let sampled = resample(&filtered, self.adc_rate)?;
        let q = 2f64.powi(self.adc_bits as i32 - 1);
        let top = (q - 1.0) / q;
        let mut out: Vec<f64> = sampled
            .samples()
            .iter()
            .map(|s| ((s * q).round() / q).clamp(-1.0, top))
            .collect();
        if let Some(dbfs) = self.noise_floor_dbfs {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, 10f64.powf(dbfs / 20.0)).map_err(|e| Error::invalid(e.to_string()))?;
            out.iter_mut()
                .for_each(|s| *s = (*s + noise.sample(&mut rng)).clamp(-1.0, 1.0));
        }
        Ok(sampled.with_samples(out))
    }

    pub fn capture(&self, incident: &Waveform, seed: u64) -> Result<Waveform> {
        self.digitize(&self.transduce(incident)?, seed)
    }
}

/// Runs `incident` through the full acquisition chain of `mic`. `seed` fixes
/// the acquisition noise.
pub fn capture(incident: &Waveform, mic: &MicrophoneModel, seed: u64) -> Result<Waveform> {
    mic.capture(incident, seed)
}

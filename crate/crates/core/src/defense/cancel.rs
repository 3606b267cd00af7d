//! Removing injected baseband ahead of the ADC.
//!
//! An AM carrier in the ultrasound band is located and coherently
//! down-converted. The square of the recovered envelope is the shape the
//! microphone nonlinearity leaks into the audible band, so a least-squares
//! multiple of it is subtracted from the audible part of the input.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{db20, real_fft, welch, zero_phase_gain, Waveform, Window};

/// Carriers below this are treated as audible content, not injection.
pub const DETECTION_LOW_HZ: f64 = 20_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CancelConfig {
    /// Carrier search band; `None` for the upper edge means Nyquist.
    pub band_lo_hz: f64,
    pub band_hi_hz: Option<f64>,
    /// Required carrier peak above the band's median level.
    pub prominence_db: f64,
    /// Peaks below this absolute level are never taken for a carrier.
    pub min_level_dbfs: f64,
    pub fft_size: usize,
    /// Upper edge of the audible band kept in the output.
    pub audible_hz: f64,
    /// Down-converted reference bandwidth; `None` picks the widest band
    /// that audible content cannot alias into (`f̂ − audible_hz`).
    pub baseband_hz: Option<f64>,
}

impl Default for CancelConfig {
    fn default() -> Self {
        CancelConfig {
            band_lo_hz: DETECTION_LOW_HZ,
            band_hi_hz: None,
            prominence_db: 10.0,
            min_level_dbfs: -100.0,
            fft_size: 8192,
            audible_hz: 20_000.0,
            baseband_hz: None,
        }
    }
}

impl CancelConfig {
    pub fn with_band(mut self, lo: f64, hi: f64) -> Self {
        self.band_lo_hz = lo;
        self.band_hi_hz = Some(hi);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierEstimate {
    pub freq_hz: f64,
    pub prominence_db: f64,
    pub level_dbfs: f64,
}

#[derive(Debug, Clone)]
pub struct Cancellation {
    pub output: Waveform,
    /// `None` when no carrier passed detection and the input came back as is.
    pub carrier: Option<CarrierEstimate>,
    /// Demodulator phase in radians.
    pub phase: f64,
    /// Least-squares scale applied to the squared envelope.
    pub alpha: f64,
}

fn smooth_lowpass(pass: f64, stop: f64) -> impl Fn(f64) -> f64 {
    move |f| {
        if f <= pass {
            1.0
        } else if f >= stop {
            0.0
        } else {
            0.5 + 0.5 * (PI * (f - pass) / (stop - pass)).cos()
        }
    }
}

/// The part of `samples` below `stop` Hz, with a 1.5 kHz raised-cosine edge.
fn audible_band(samples: &[f64], rate: f64, stop: f64) -> Vec<f64> {
    zero_phase_gain(samples, rate, smooth_lowpass(stop - 1500.0, stop))
}

/// Strongest peak in the search band, or its prominence if too weak.
pub fn detect_carrier(wave: &Waveform, cfg: &CancelConfig) -> Result<Option<CarrierEstimate>> {
    let nyquist = wave.nyquist();
    let hi = cfg.band_hi_hz.unwrap_or(nyquist).min(nyquist);
    if !(cfg.band_lo_hz >= 0.0 && cfg.band_lo_hz < hi) {
        return Err(Error::invalid(format!(
            "detection band [{}, {hi}] Hz is empty at {} Hz sampling",
            cfg.band_lo_hz,
            wave.sample_rate()
        )));
    }
    let spec = welch(wave, Window::Hann, cfg.fft_size.min(wave.len().next_power_of_two()))?;
    let (freqs, mags) = (spec.bin_freqs(), spec.magnitudes());
    let band: Vec<usize> = (0..mags.len())
        .filter(|&k| freqs[k] >= cfg.band_lo_hz && freqs[k] <= hi)
        .collect();
    if band.len() < 3 {
        return Ok(None);
    }
    let peak = band.iter().copied().fold(band[0], |b, k| if mags[k] > mags[b] { k } else { b });
    let level = db20(mags[peak]);
    let in_band: Vec<f64> = band.iter().map(|&k| mags[k]).collect();
    let prominence = level - db20(crate::signal::spectrum::median(&in_band));
    if !(prominence >= cfg.prominence_db) || level < cfg.min_level_dbfs {
        return Ok(None);
    }
    let freq = refine_peak(wave.samples(), wave.sample_rate() as f64, freqs[peak], spec.resolution());
    Ok(Some(CarrierEstimate {
        freq_hz: freq,
        prominence_db: prominence,
        level_dbfs: level,
    }))
}

/// Locates a spectral peak to well under the whole-record resolution: a
/// zero-padded FFT picks the main lobe, golden-section search on the
/// windowed DTFT magnitude finishes it.
fn refine_peak(x: &[f64], rate: f64, coarse: f64, radius: f64) -> f64 {
    let n = x.len();
    let w = Window::Hann.coefficients(n);
    let xw: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
    let nfft = (4 * n).next_power_of_two();
    let spec = real_fft(&xw, nfft);
    let df = rate / nfft as f64;
    let lo = ((coarse - radius) / df).floor().max(1.0) as usize;
    let hi = (((coarse + radius) / df).ceil() as usize).min(nfft / 2 - 1);
    let best = (lo..=hi).fold(lo, |b, k| if spec[k].norm_sqr() > spec[b].norm_sqr() { k } else { b });

    let dtft = |f: f64| {
        let step = Complex64::from_polar(1.0, -2.0 * PI * f / rate);
        let mut ph = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, v) in xw.iter().enumerate() {
            acc += ph * v;
            ph *= step;
            if i % 4096 == 4095 {
                ph /= ph.norm();
            }
        }
        acc.norm()
    };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((best as f64 - 1.0) * df, (best as f64 + 1.0) * df);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (dtft(c), dtft(d));
    for _ in 0..40 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = dtft(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = dtft(d);
        }
    }
    0.5 * (a + b)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cancels injected baseband in `wide`, a signal sampled ahead of the
/// anti-alias filter. With no carrier found the input is returned unchanged.
pub fn cancel_injection(wide: &Waveform, cfg: &CancelConfig) -> Result<Cancellation> {
    let rate = wide.sample_rate() as f64;
    if !(cfg.audible_hz > 1500.0 && cfg.audible_hz < wide.nyquist()) {
        return Err(Error::invalid(format!(
            "audible band edge {} Hz must lie in (1500, {}) Hz",
            cfg.audible_hz,
            wide.nyquist()
        )));
    }
    let Some(carrier) = detect_carrier(wide, cfg)? else {
        return Ok(Cancellation {
            output: wide.clone(),
            carrier: None,
            phase: 0.0,
            alpha: 0.0,
        });
    };
    let f = carrier.freq_hz;
    let stop = cfg.baseband_hz.unwrap_or(f - cfg.audible_hz);
    if !(stop > 100.0) {
        return Err(Error::invalid(format!(
            "carrier {f:.1} Hz leaves no room for a baseband reference below it"
        )));
    }
    let lpf = smooth_lowpass(0.8 * stop, stop);
    let x = wide.samples();
    let w = 2.0 * PI * f / rate;
    let (mut i_raw, mut q_raw) = (Vec::with_capacity(x.len()), Vec::with_capacity(x.len()));
    for (n, v) in x.iter().enumerate() {
        let (s, c) = (w * n as f64).sin_cos();
        i_raw.push(v * c);
        q_raw.push(v * s);
    }
    let i = zero_phase_gain(&i_raw, rate, &lpf);
    let q = zero_phase_gain(&q_raw, rate, &lpf);

    // demod(φ) = I cos φ − Q sin φ has the most energy here.
    let (ii, qq, iq) = (dot(&i, &i), dot(&q, &q), dot(&i, &q));
    let phase = 0.5 * (-2.0 * iq).atan2(ii - qq);
    let (sp, cp) = phase.sin_cos();
    let mut env: Vec<f64> = i.iter().zip(&q).map(|(a, b)| 2.0 * (a * cp - b * sp)).collect();
    if env.iter().sum::<f64>() < 0.0 {
        env.iter_mut().for_each(|e| *e = -*e);
    }
    let reference: Vec<f64> = env.iter().map(|e| e * e).collect();

    let audible = audible_band(x, rate, cfg.audible_hz);
    let n = x.len() as f64;
    let (am, rm) = (audible.iter().sum::<f64>() / n, reference.iter().sum::<f64>() / n);
    let rc: Vec<f64> = reference.iter().map(|r| r - rm).collect();
    let ac: Vec<f64> = audible.iter().map(|a| a - am).collect();
    let denom = dot(&rc, &rc);
    let alpha = if denom > 0.0 { dot(&ac, &rc) / denom } else { 0.0 };
    let output: Vec<f64> = audible.iter().zip(&reference).map(|(a, r)| a - alpha * r).collect();
    Ok(Cancellation {
        output: wide.with_samples(output),
        carrier: Some(carrier),
        phase,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mic::{harmonic_amplitudes, MicrophoneModel};
    use crate::modulation::{am_modulate, ModulationParams};
    use crate::signal::{band_energy, db10, make_tone, resample, ULTRASONIC_RATE};
    use crate::voice::bundled_command;

    fn attack(fm: f64, fc: f64) -> (Waveform, MicrophoneModel) {
        let tone = make_tone(fm, 0.5, 1.0, ULTRASONIC_RATE).unwrap();
        let p = ModulationParams::default().with_carrier(fc);
        let tx = am_modulate(&tone, &p, ULTRASONIC_RATE).unwrap();
        let mic = MicrophoneModel::default();
        (mic.transduce(&tx).unwrap(), mic)
    }

    fn tone_level(w: &Waveform, f: f64) -> f64 {
        let trimmed = w.slice_seconds(0.05, w.duration() - 0.05).unwrap();
        harmonic_amplitudes(&trimmed, f, 1).unwrap().amplitudes[0].1
    }

    #[test]
    fn finds_the_carrier_precisely() {
        let (wide, _) = attack(400.0, 25_000.0);
        let est = detect_carrier(&wide, &CancelConfig::default()).unwrap().unwrap();
        assert!((est.freq_hz - 25_000.0).abs() < 0.05, "{}", est.freq_hz);
        assert!(est.prominence_db > 40.0);
    }

    #[test]
    fn removes_a_demodulated_tone() {
        let (wide, _) = attack(400.0, 25_000.0);
        let before = tone_level(&wide.with_samples(audible_band(wide.samples(), 192e3, 20_000.0)), 400.0);
        let out = cancel_injection(&wide, &CancelConfig::default()).unwrap();
        let after = tone_level(&out.output, 400.0);
        assert!(db20(before / after) >= 20.0, "{} dB", db20(before / after));
        // B/(2A²) for a square-law input.
        assert!((out.alpha - 0.05).abs() < 0.005, "{}", out.alpha);
    }

    #[test]
    fn works_on_an_off_bin_carrier() {
        let (wide, _) = attack(650.0, 31_337.7);
        let out = cancel_injection(&wide, &CancelConfig::default()).unwrap();
        let before = tone_level(&wide.with_samples(audible_band(wide.samples(), 192e3, 20_000.0)), 650.0);
        assert!(db20(before / tone_level(&out.output, 650.0)) >= 20.0);
    }

    fn clean_speech() -> Waveform {
        let v = resample(&bundled_command().wave, ULTRASONIC_RATE).unwrap();
        MicrophoneModel::default().transduce(&v).unwrap()
    }

    #[test]
    fn clean_input_passes_through() {
        let clean = clean_speech();
        let once = cancel_injection(&clean, &CancelConfig::default()).unwrap();
        assert!(once.carrier.is_none());
        assert_eq!(once.output.samples(), clean.samples());
        let twice = cancel_injection(&once.output, &CancelConfig::default()).unwrap();
        assert_eq!(twice.output.samples(), once.output.samples());
    }

    #[test]
    fn speech_and_attack_together() {
        let clean = clean_speech();
        // Keep the speech's strongest content above 1.5 kHz so the bands are disjoint.
        let hp = |w: &Waveform| {
            let x = w.samples();
            let low = zero_phase_gain(x, 192e3, smooth_lowpass(1000.0, 1500.0));
            w.with_samples(x.iter().zip(&low).map(|(a, b)| a - b).collect())
        };
        let speech = hp(&resample(&bundled_command().wave, ULTRASONIC_RATE).unwrap());
        let tone = make_tone(400.0, 0.5, clean.duration(), ULTRASONIC_RATE).unwrap();
        let tx = am_modulate(&tone, &ModulationParams::default(), ULTRASONIC_RATE).unwrap();
        let mic = MicrophoneModel::default();
        let mixed = mic.transduce(&tx.mix(&speech).unwrap()).unwrap();
        let attack_only = mic.transduce(&tx).unwrap();
        let speech_only = mic.transduce(&speech).unwrap();

        let out = cancel_injection(&mixed, &CancelConfig::default()).unwrap().output;
        let band = |w: &Waveform, lo, hi| {
            let a = w.with_samples(audible_band(w.samples(), 192e3, 20_000.0));
            db10(band_energy(&a, lo, hi).unwrap())
        };
        let injected = band(&attack_only, 300.0, 900.0);
        let residual = band(&out, 300.0, 900.0);
        assert!(injected - residual >= 15.0, "{injected} -> {residual}");
        let genuine = band(&speech_only, 1500.0, 8000.0);
        let kept = band(&out, 1500.0, 8000.0);
        assert!((genuine - kept).abs() <= 2.0, "{genuine} vs {kept}");
    }

    #[test]
    fn rejects_an_empty_band() {
        let (wide, _) = attack(400.0, 25_000.0);
        let cfg = CancelConfig::default().with_band(97_000.0, 99_000.0);
        assert!(cancel_injection(&wide, &cfg).is_err());
    }
}

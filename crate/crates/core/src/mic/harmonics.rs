//! Harmonic levels of a captured tone.
//!
//! The analysis span is trimmed of filter edge effects and cut to a whole
//! number of periods of `f_m` at the capture rate, so every harmonic lands
//! exactly on a DFT bin and a single-bin correlation reads its amplitude
//! without leakage. Frequencies that never repeat on the sample grid fall
//! back to a Hann-weighted correlation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::spectrum::median;
use crate::signal::{real_fft, Waveform};

/// Discarded at each end before analysis, in seconds.
const EDGE_TRIM_S: f64 = 0.02;
/// Noise amplitudes in one bin are Rayleigh distributed, so the reading
/// exceeds `t·rms` with probability `exp(-t²)`.
const NOISE_FLOOR_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Harmonics {
    /// `(k, amplitude)` for `k = 1..`, stopping before the first harmonic at
    /// or above Nyquist.
    pub amplitudes: Vec<(usize, f64)>,
    /// Set when harmonics were dropped for lying above Nyquist.
    pub truncated: bool,
    /// RMS amplitude the same estimator reads on noise alone, measured on
    /// the bins between harmonics.
    pub noise_rms: f64,
}

impl Harmonics {
    /// Amplitude that noise alone exceeds with probability `e^-9`; a
    /// harmonic reading below it is indistinguishable from noise.
    pub fn noise_floor(&self) -> f64 {
        NOISE_FLOOR_FACTOR * self.noise_rms
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        self.amplitudes.iter().find(|(i, _)| *i == k).map(|(_, a)| *a)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Samples in one exact period of `f_m` on the grid of `rate`, if `f_m` is a
/// whole number of hertz.
fn exact_period(f_m: f64, rate: u32) -> Option<usize> {
    if f_m.fract() != 0.0 {
        return None;
    }
    let f = f_m as u64;
    Some((rate as u64 / gcd(rate as u64, f)) as usize)
}

fn correlate(x: &[f64], w: Option<&[f64]>, freq: f64, rate: f64) -> f64 {
    let step = 2.0 * PI * freq / rate;
    let (mut re, mut im, mut norm) = (0.0, 0.0, 0.0);
    for (n, &v) in x.iter().enumerate() {
        let wn = w.map_or(1.0, |w| w[n]);
        let ph = step * n as f64;
        re += wn * v * ph.cos();
        im -= wn * v * ph.sin();
        norm += wn;
    }
    2.0 * (re * re + im * im).sqrt() / norm
}

/// RMS single-bin amplitude of the noise, from the median power of the bins
/// at least `guard` bins away from every multiple of `spacing`. Median
/// power of a complex Gaussian bin is `ln 2` times its mean.
fn noise_rms(x: &[f64], w: Option<&[f64]>, spacing: f64, guard: usize) -> f64 {
    let n = x.len();
    let (weighted, norm): (Vec<f64>, f64) = match w {
        Some(w) => (x.iter().zip(w).map(|(a, b)| a * b).collect(), w.iter().sum()),
        None => (x.to_vec(), n as f64),
    };
    let spec = real_fft(&weighted, n);
    let powers: Vec<f64> = (1..n / 2)
        .filter(|&b| {
            let r = b as f64 / spacing;
            let off = (r - r.round()).abs() * spacing;
            off > guard as f64 + 0.5
        })
        .map(|b| (2.0 * spec[b].norm() / norm).powi(2))
        .collect();
    (median(&powers) / std::f64::consts::LN_2).sqrt()
}

/// Amplitudes of the first `n_harmonics` multiples of `f_m` in `captured`.
pub fn harmonic_amplitudes(captured: &Waveform, f_m: f64, n_harmonics: usize) -> Result<Harmonics> {
    let rate = captured.sample_rate();
    if !(f_m > 0.0 && f_m < captured.nyquist()) {
        return Err(Error::Aliasing {
            freq: f_m,
            nyquist: captured.nyquist(),
        });
    }
    let kept = (1..=n_harmonics).take_while(|&k| (k as f64) * f_m < captured.nyquist()).count();
    let truncated = kept < n_harmonics;
    if truncated {
        log::warn!(
            "harmonics above {} of {f_m} Hz lie beyond the {} Hz Nyquist limit; dropped",
            kept,
            captured.nyquist()
        );
    }
    let trim = (EDGE_TRIM_S * rate as f64).round() as usize;
    let x = captured.samples();
    let body = if x.len() > 2 * trim { &x[trim..x.len() - trim] } else { x };

    let (amplitudes, noise_rms) = match exact_period(f_m, rate).filter(|&p| p <= body.len()) {
        Some(p) => {
            let span = &body[..body.len() / p * p];
            let amps = (1..=kept)
                .map(|k| (k, correlate(span, None, k as f64 * f_m, rate as f64)))
                .collect();
            (amps, noise_rms(span, None, f_m * span.len() as f64 / rate as f64, 0))
        }
        None => {
            let min_len = (4.0 * rate as f64 / f_m).ceil() as usize;
            if body.len() < min_len {
                return Err(Error::TooShort {
                    needed: min_len + 2 * trim,
                    got: x.len(),
                });
            }
            let w = crate::signal::Window::Hann.coefficients(body.len());
            let amps = (1..=kept)
                .map(|k| (k, correlate(body, Some(&w), k as f64 * f_m, rate as f64)))
                .collect();
            (amps, noise_rms(body, Some(&w), f_m * body.len() as f64 / rate as f64, 4))
        }
    };
    Ok(Harmonics {
        amplitudes,
        truncated,
        noise_rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{db20, make_multitone, make_tone};

    #[test]
    fn reads_exact_amplitudes() {
        let w = make_multitone(&[(400.0, 0.3), (800.0, 0.05), (1200.0, 0.01)], 0.5, 44_100).unwrap();
        let h = harmonic_amplitudes(&w, 400.0, 3).unwrap();
        assert!((h.get(1).unwrap() - 0.3).abs() < 1e-9);
        assert!((h.get(2).unwrap() - 0.05).abs() < 1e-9);
        assert!((h.get(3).unwrap() - 0.01).abs() < 1e-9);
        assert!(!h.truncated);
    }

    #[test]
    fn pure_tone_has_no_harmonics() {
        let w = make_tone(400.0, 1.0, 0.5, 44_100).unwrap();
        let h = harmonic_amplitudes(&w, 400.0, 3).unwrap();
        assert!(db20(h.get(2).unwrap()) < -60.0);
        assert!(db20(h.get(3).unwrap()) < -60.0);
    }

    #[test]
    fn truncates_above_nyquist() {
        let w = make_tone(8000.0, 1.0, 0.2, 44_100).unwrap();
        let h = harmonic_amplitudes(&w, 8000.0, 3).unwrap();
        assert_eq!(h.amplitudes.len(), 2);
        assert!(h.truncated);
        assert_eq!(h.get(3), None);
    }

    #[test]
    fn noise_rms_matches_white_noise_level() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let n = Normal::new(0.0, 0.01).unwrap();
        let t = make_tone(400.0, 0.5, 1.0, 44_100).unwrap();
        let x: Vec<f64> = t.samples().iter().map(|s| s + n.sample(&mut rng)).collect();
        let h = harmonic_amplitudes(&Waveform::new(x, 44_100).unwrap(), 400.0, 2).unwrap();
        // Single-bin RMS amplitude of white noise is 2σ/√N.
        let span = (44_100 - 2 * 882) / 441 * 441;
        let expect = 2.0 * 0.01 / (span as f64).sqrt();
        assert!((h.noise_rms / expect - 1.0).abs() < 0.05, "{} vs {expect}", h.noise_rms);
        assert!(h.get(2).unwrap() < h.noise_floor());
    }

    #[test]
    fn fractional_frequency_uses_the_window() {
        let w = make_tone(401.3, 0.5, 0.5, 44_100).unwrap();
        let h = harmonic_amplitudes(&w, 401.3, 1).unwrap();
        assert!((db20(h.get(1).unwrap()) - db20(0.5)).abs() < 0.1);
    }
}

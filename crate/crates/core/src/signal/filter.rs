//! Kaiser-windowed sinc FIR design and zero-delay application.
//!
//! The Kaiser window is sized from the attenuation and transition width with
//! the usual closed-form estimates:
//!
//! ```text
//! beta = 0.1102 (A - 8.7)                              A > 50
//!      = 0.5842 (A - 21)^0.4 + 0.07886 (A - 21)        21 <= A <= 50
//!      = 0                                             A < 21
//! N    = (A - 8) / (2.285 · Δω) + 1
//! ```

use std::f64::consts::PI;

use super::fft::{inverse_real, real_fft};
use super::Waveform;
use crate::error::{Error, Result};

/// Design attenuation used by [`fir_lowpass`]; comfortably beyond the 60 dB
/// stopband it promises.
pub const LOWPASS_ATTENUATION_DB: f64 = 70.0;

/// Above this tap count convolution goes through the FFT.
const DIRECT_CONVOLUTION_MAX_TAPS: usize = 64;

/// Zeroth-order modified Bessel function of the first kind (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

pub fn kaiser_beta(attenuation_db: f64) -> f64 {
    let a = attenuation_db;
    if a > 50.0 {
        0.1102 * (a - 8.7)
    } else if a >= 21.0 {
        0.5842 * (a - 21.0).powf(0.4) + 0.07886 * (a - 21.0)
    } else {
        0.0
    }
}

/// Odd filter length for the given attenuation and transition width, the
/// latter in cycles per sample.
pub fn kaiser_length(attenuation_db: f64, transition: f64) -> usize {
    let dw = 2.0 * PI * transition;
    let n = ((attenuation_db - 8.0) / (2.285 * dw)).ceil() as usize + 1;
    n.max(3) | 1
}

/// Kaiser window value at offset `x` from the centre of a window of
/// half-width `half` (in samples). Zero outside.
pub(crate) fn kaiser_at(x: f64, half: f64, beta: f64, i0_beta: f64) -> f64 {
    let r = x / half;
    if r.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(beta * (1.0 - r * r).sqrt()) / i0_beta
}

pub fn kaiser_window(len: usize, beta: f64) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let half = (len - 1) as f64 / 2.0;
    let i0b = bessel_i0(beta);
    (0..len).map(|n| kaiser_at(n as f64 - half, half, beta, i0b)).collect()
}

/// Normalized sinc, `sin(πx)/(πx)`.
pub(crate) fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Windowed-sinc lowpass taps with cutoff in cycles per sample. Unit DC gain.
pub fn lowpass_taps(cutoff: f64, window: &[f64]) -> Vec<f64> {
    let half = (window.len() - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = window
        .iter()
        .enumerate()
        .map(|(n, w)| 2.0 * cutoff * sinc(2.0 * cutoff * (n as f64 - half)) * w)
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= dc);
    taps
}

/// A linear-phase lowpass designed from a passband edge and transition width.
#[derive(Debug, Clone)]
pub struct LowpassDesign {
    pub taps: Vec<f64>,
    pub cutoff_hz: f64,
    pub stop_hz: f64,
}

impl LowpassDesign {
    pub fn new(rate: u32, cutoff: f64, transition: f64, attenuation_db: f64) -> Result<Self> {
        let nyquist = rate as f64 / 2.0;
        if !(cutoff > 0.0 && cutoff < nyquist) {
            return Err(Error::Aliasing {
                freq: cutoff,
                nyquist,
            });
        }
        if !(transition > 0.0) {
            return Err(Error::invalid("transition width must be positive"));
        }
        let stop = (cutoff + transition).min(nyquist);
        let width = (stop - cutoff) / rate as f64;
        let len = kaiser_length(attenuation_db, width);
        let window = kaiser_window(len, kaiser_beta(attenuation_db));
        let taps = lowpass_taps((cutoff + stop) / 2.0 / rate as f64, &window);
        Ok(LowpassDesign {
            taps,
            cutoff_hz: cutoff,
            stop_hz: stop,
        })
    }

    /// Filters with the group delay removed, so output sample `i` lines up
    /// with input sample `i`.
    pub fn apply(&self, samples: &[f64]) -> Vec<f64> {
        convolve_centered(samples, &self.taps)
    }
}

/// Linear-phase lowpass: passband to `cutoff`, at least 60 dB down from
/// `cutoff + transition`, output aligned with the input.
pub fn fir_lowpass(wave: &Waveform, cutoff: f64, transition: f64) -> Result<Waveform> {
    let design = LowpassDesign::new(wave.sample_rate(), cutoff, transition, LOWPASS_ATTENUATION_DB)?;
    Ok(wave.with_samples(design.apply(wave.samples())))
}

/// Convolution of `x` with an odd-length `h`, trimmed to `x.len()` and shifted
/// by `(h.len()-1)/2` so a symmetric kernel introduces no delay.
pub(crate) fn convolve_centered(x: &[f64], h: &[f64]) -> Vec<f64> {
    let delay = (h.len() - 1) / 2;
    if h.len() <= DIRECT_CONVOLUTION_MAX_TAPS {
        return (0..x.len())
            .map(|i| {
                let mut acc = 0.0;
                for (j, hj) in h.iter().enumerate() {
                    let k = i + delay;
                    if k >= j && k - j < x.len() {
                        acc += hj * x[k - j];
                    }
                }
                acc
            })
            .collect();
    }
    let full = x.len() + h.len() - 1;
    let n = full.next_power_of_two();
    let xs = real_fft(x, n);
    let hs = real_fft(h, n);
    let prod = xs.iter().zip(&hs).map(|(a, b)| a * b).collect();
    let y = inverse_real(prod);
    y[delay..delay + x.len()].to_vec()
}

/// Removes content below `cutoff` with a zero-phase spectral mask (raised
/// cosine over one octave below the cutoff). Circular over the buffer.
pub(crate) fn spectral_highpass(samples: &[f64], rate: f64, cutoff: f64) -> Vec<f64> {
    super::fft::zero_phase_gain(samples, rate, |f| {
        if f >= cutoff {
            1.0
        } else if f <= cutoff / 2.0 {
            0.0
        } else {
            let t = (f - cutoff / 2.0) / (cutoff / 2.0);
            0.5 - 0.5 * (PI * t).cos()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{make_multitone, make_tone, spectrum, Window};
    use proptest::prelude::*;

    fn peak_db(w: &Waveform, f: f64) -> f64 {
        let s = spectrum(w, Window::Hann, 1 << 16).unwrap();
        crate::signal::db20(s.magnitude_near(f, 2))
    }

    #[test]
    fn bessel_matches_known_values() {
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((bessel_i0(5.0) - 27.239_871_823_604_44).abs() < 1e-10);
    }

    #[test]
    fn passband_tone_unchanged() {
        let t = make_tone(2000.0, 1.0, 0.5, 192_000).unwrap();
        let y = fir_lowpass(&t, 20_000.0, 2000.0).unwrap();
        assert!((peak_db(&y, 2000.0) - peak_db(&t, 2000.0)).abs() <= 0.5);
    }

    #[test]
    fn stopband_tone_attenuated_60db() {
        let t = make_tone(25_000.0, 1.0, 0.5, 192_000).unwrap();
        let y = fir_lowpass(&t, 20_000.0, 2000.0).unwrap();
        // Skip the edge transients: steady-state level only.
        let mid = y.slice_seconds(0.1, 0.4).unwrap();
        let before = peak_db(&t.slice_seconds(0.1, 0.4).unwrap(), 25_000.0);
        assert!(before - peak_db(&mid, 25_000.0) >= 60.0);
    }

    #[test]
    fn mixture_only_passband_survives() {
        let x = make_multitone(&[(2000.0, 0.5), (25_000.0, 0.5)], 0.5, 192_000).unwrap();
        let y = fir_lowpass(&x, 20_000.0, 2000.0).unwrap().slice_seconds(0.05, 0.45).unwrap();
        let s = spectrum(&y, Window::Hann, 1 << 16).unwrap();
        let peaks = s.peaks_above(-60.0);
        assert_eq!(peaks.len(), 1);
        assert!((s.bin_freqs()[peaks[0]] - 2000.0).abs() <= s.resolution());
    }

    #[test]
    fn output_is_aligned_with_input() {
        let t = make_tone(1000.0, 1.0, 0.1, 48_000).unwrap();
        let y = fir_lowpass(&t, 8000.0, 1000.0).unwrap();
        let mid = t.len() / 2;
        for i in mid..mid + 100 {
            assert!((y.samples()[i] - t.samples()[i]).abs() < 1e-3);
        }
    }

    #[test]
    fn cutoff_at_nyquist_is_rejected() {
        let t = make_tone(1000.0, 1.0, 0.1, 48_000).unwrap();
        assert!(matches!(fir_lowpass(&t, 24_000.0, 100.0), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn direct_and_fft_convolution_agree() {
        let x: Vec<f64> = (0..500).map(|i| ((i * 37) % 101) as f64 / 101.0 - 0.5).collect();
        let h: Vec<f64> = (0..65).map(|i| (i as f64 * 0.1).sin()).collect();
        let fast = convolve_centered(&x, &h);
        let delay = 32;
        for i in 0..x.len() {
            let mut acc = 0.0;
            for (j, hj) in h.iter().enumerate() {
                let k = i + delay;
                if k >= j && k - j < x.len() {
                    acc += hj * x[k - j];
                }
            }
            assert!((acc - fast[i]).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn lowpass_is_linear(
            xs in proptest::collection::vec(-1.0f64..1.0, 256..2048),
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
            seed in 0u64..1000,
        ) {
            let ys: Vec<f64> = xs.iter().enumerate()
                .map(|(i, _)| (((i as u64 * 7919 + seed) % 997) as f64 / 997.0) - 0.5)
                .collect();
            let x = Waveform::new(xs.clone(), 48_000).unwrap();
            let y = Waveform::new(ys.clone(), 48_000).unwrap();
            let combo = Waveform::new(xs.iter().zip(&ys).map(|(p, q)| a * p + b * q).collect(), 48_000).unwrap();
            let fx = fir_lowpass(&x, 6000.0, 1000.0).unwrap();
            let fy = fir_lowpass(&y, 6000.0, 1000.0).unwrap();
            let fc = fir_lowpass(&combo, 6000.0, 1000.0).unwrap();
            let scale = fc.peak().max(1e-3);
            for i in 0..xs.len() {
                let expect = a * fx.samples()[i] + b * fy.samples()[i];
                prop_assert!((fc.samples()[i] - expect).abs() <= 1e-9 * scale.max(1.0));
            }
        }
    }
}

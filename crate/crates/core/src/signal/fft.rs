use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::spectrum::Window;

/// Forward FFT of `samples` zero-padded (or truncated) to `n`.
pub(crate) fn real_fft(samples: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples
        .iter()
        .take(n)
        .map(|&s| Complex64::new(s, 0.0))
        .collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

/// Inverse FFT, normalized so that `ifft(fft(x)) == x`; returns the real part.
pub(crate) fn inverse_real(mut buf: Vec<Complex64>) -> Vec<f64> {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.into_iter().map(|c| c.re * scale).collect()
}

/// Applies a real, non-negative gain per frequency to `samples` without
/// changing phase. The transform is circular over the buffer length.
pub(crate) fn zero_phase_gain(samples: &[f64], rate: f64, gain: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = samples.len();
    let mut spec = real_fft(samples, n);
    for k in 0..=n / 2 {
        let g = gain(k as f64 * rate / n as f64);
        spec[k] *= g;
        if k != 0 && n - k != k {
            spec[n - k] *= g;
        }
    }
    inverse_real(spec)
}

/// One-sided power spectrum normalized so that the bins sum to (approximately)
/// the signal energy `Σ x²`.
pub(crate) struct PowerSpectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl PowerSpectrum {
    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }

    pub fn band(&self, lo: f64, hi: f64) -> f64 {
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Whole-signal windowed power spectrum, zero-padded to the next power of two.
pub(crate) fn power_spectrum(samples: &[f64], rate: f64, window: Window) -> PowerSpectrum {
    let len = samples.len();
    let n = len.next_power_of_two().max(2);
    let w = window.coefficients(len);
    let windowed: Vec<f64> = samples.iter().zip(&w).map(|(s, w)| s * w).collect();
    let mean_w2 = w.iter().map(|x| x * x).sum::<f64>() / len as f64;
    let spec = real_fft(&windowed, n);
    let half = n / 2;
    let norm = 1.0 / (n as f64 * mean_w2);
    let power = (0..=half)
        .map(|k| {
            let c = if k == 0 || k == half { 1.0 } else { 2.0 };
            c * spec[k].norm_sqr() * norm
        })
        .collect();
    let resolution = rate / n as f64;
    PowerSpectrum {
        freqs: (0..=half).map(|k| k as f64 * resolution).collect(),
        power,
    }
}

//! Amplitude-calibrated single-sided spectra.
//!
//! Magnitudes are scaled by the window's coherent gain so that a sinusoid of
//! amplitude `a` reads `a` at its (bin-aligned) peak. `enbw_bins` keeps the
//! equivalent noise bandwidth around so power sums can be converted back to
//! mean square.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::fft::{power_spectrum, real_fft};
use super::{db20, Waveform};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Hann,
    Rect,
}

impl Window {
    /// Periodic-free (symmetric) coefficients of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; n],
            Window::Hann if n <= 1 => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
                .collect(),
        }
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hann" => Ok(Window::Hann),
            "rect" | "rectangular" => Ok(Window::Rect),
            other => Err(Error::invalid(format!("unknown window '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bin_freqs: Vec<f64>,
    magnitudes: Vec<f64>,
    resolution: f64,
    enbw_bins: f64,
}

impl Spectrum {
    pub fn bin_freqs(&self) -> &[f64] {
        &self.bin_freqs
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// Hz per bin.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn enbw_bins(&self) -> f64 {
        self.enbw_bins
    }

    pub fn bin_of(&self, freq: f64) -> usize {
        ((freq / self.resolution).round() as usize).min(self.magnitudes.len() - 1)
    }

    /// Index of the largest magnitude (first one on ties).
    pub fn peak_bin(&self) -> usize {
        let mut best = 0;
        for (i, m) in self.magnitudes.iter().enumerate() {
            if *m > self.magnitudes[best] {
                best = i;
            }
        }
        best
    }

    /// Largest magnitude within `±radius` bins of `freq`.
    pub fn magnitude_near(&self, freq: f64, radius: usize) -> f64 {
        let c = self.bin_of(freq);
        let lo = c.saturating_sub(radius);
        let hi = (c + radius).min(self.magnitudes.len() - 1);
        self.magnitudes[lo..=hi].iter().copied().fold(0.0, f64::max)
    }

    /// Strict local maxima whose level exceeds `threshold_dbfs`.
    pub fn peaks_above(&self, threshold_dbfs: f64) -> Vec<usize> {
        let m = &self.magnitudes;
        (0..m.len())
            .filter(|&i| db20(m[i]) > threshold_dbfs)
            .filter(|&i| (i == 0 || m[i] > m[i - 1]) && (i + 1 == m.len() || m[i] > m[i + 1]))
            .collect()
    }

    /// Median bin magnitude; a robust noise-floor estimate.
    pub fn median_magnitude(&self) -> f64 {
        median(&self.magnitudes)
    }

    /// Mean square of the analysed signal recovered from the spectrum.
    pub fn mean_square(&self) -> f64 {
        let last = self.magnitudes.len() - 1;
        let sum: f64 = self
            .magnitudes
            .iter()
            .enumerate()
            .map(|(k, m)| if k == 0 || k == last { m * m } else { m * m / 2.0 })
            .sum();
        sum / self.enbw_bins
    }

    /// Writes `freq_hz,magnitude` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(b"freq_hz,magnitude\n")?;
        for (f, m) in self.bin_freqs.iter().zip(&self.magnitudes) {
            writeln!(out, "{f},{m}")?;
        }
        Ok(())
    }
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn check_fft_size(fft_size: usize) -> Result<()> {
    if fft_size < 2 || !fft_size.is_power_of_two() {
        return Err(Error::invalid(format!("fft size {fft_size} must be a power of two ≥ 2")));
    }
    Ok(())
}

fn calibrate(power_sum: Vec<f64>, n: usize, rate: f64, coherent: f64, enbw: f64) -> Spectrum {
    let half = n / 2;
    let magnitudes = power_sum
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            let c = if k == 0 || k == half { 1.0 } else { 2.0 };
            c * p.sqrt() / coherent
        })
        .collect();
    let resolution = rate / n as f64;
    Spectrum {
        bin_freqs: (0..=half).map(|k| k as f64 * resolution).collect(),
        magnitudes,
        resolution,
        enbw_bins: enbw,
    }
}

fn window_stats(w: &[f64], n: usize) -> (f64, f64) {
    let s1: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    (s1, n as f64 * s2 / (s1 * s1))
}

/// Single-sided magnitude spectrum of the first `fft_size` samples (zero
/// padded when the waveform is shorter).
pub fn spectrum(wave: &Waveform, window: Window, fft_size: usize) -> Result<Spectrum> {
    check_fft_size(fft_size)?;
    let len = wave.len().min(fft_size);
    let w = window.coefficients(len);
    let seg: Vec<f64> = wave.samples()[..len].iter().zip(&w).map(|(x, w)| x * w).collect();
    let spec = real_fft(&seg, fft_size);
    let (s1, enbw) = window_stats(&w, fft_size);
    let power = spec[..=fft_size / 2].iter().map(|c| c.norm_sqr()).collect();
    Ok(calibrate(power, fft_size, wave.sample_rate() as f64, s1, enbw))
}

/// Welch-averaged spectrum: 50 % overlapping segments, powers averaged, then
/// calibrated like [`spectrum`]. Falls back to a single zero-padded segment
/// for short inputs.
pub fn welch(wave: &Waveform, window: Window, fft_size: usize) -> Result<Spectrum> {
    check_fft_size(fft_size)?;
    if wave.len() <= fft_size {
        return spectrum(wave, window, fft_size);
    }
    let w = window.coefficients(fft_size);
    let hop = fft_size / 2;
    let mut acc = vec![0.0; fft_size / 2 + 1];
    let mut count = 0usize;
    let mut start = 0;
    while start + fft_size <= wave.len() {
        let seg: Vec<f64> = wave.samples()[start..start + fft_size]
            .iter()
            .zip(&w)
            .map(|(x, w)| x * w)
            .collect();
        let spec = real_fft(&seg, fft_size);
        for (a, c) in acc.iter_mut().zip(&spec) {
            *a += c.norm_sqr();
        }
        count += 1;
        start += hop;
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    let (s1, enbw) = window_stats(&w, fft_size);
    Ok(calibrate(acc, fft_size, wave.sample_rate() as f64, s1, enbw))
}

/// Energy (in units of `Σ x²`) of the bins whose centre lies in `[lo, hi]` Hz,
/// from a Hann-windowed whole-signal spectrum.
pub fn band_energy(wave: &Waveform, lo: f64, hi: f64) -> Result<f64> {
    let nyquist = wave.nyquist();
    if !(lo >= 0.0 && lo < hi && hi <= nyquist) {
        return Err(Error::invalid(format!(
            "band [{lo}, {hi}] Hz must satisfy 0 ≤ lo < hi ≤ {nyquist}"
        )));
    }
    let ps = power_spectrum(wave.samples(), wave.sample_rate() as f64, Window::Hann);
    Ok(ps.band(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{make_multitone, make_tone};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn rect_parseval_is_exact() {
        let x: Vec<f64> = (0..1024).map(|i| ((i * 13 % 17) as f64 - 8.0) / 9.0).collect();
        let w = Waveform::new(x.clone(), 8000).unwrap();
        let s = spectrum(&w, Window::Rect, 1024).unwrap();
        let ms = x.iter().map(|v| v * v).sum::<f64>() / 1024.0;
        assert!((s.mean_square() - ms).abs() / ms < 1e-9);
    }

    #[test]
    fn hann_parseval_within_one_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..1 << 16)
            .map(|i| 0.3 * (i as f64 * 0.05).sin() + 0.1 * { let v: f64 = StandardNormal.sample(&mut rng); v })
            .collect();
        let w = Waveform::new(x.clone(), 48_000).unwrap();
        let s = spectrum(&w, Window::Hann, 1 << 16).unwrap();
        let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((s.mean_square() - ms).abs() / ms < 0.01);
    }

    #[test]
    fn two_equal_tones_equal_peaks() {
        // Bin-aligned at 48 kHz / 2^14.
        let res = 48_000.0 / 16384.0;
        let (f1, f2) = (512.0 * res, 2048.0 * res);
        let x = make_multitone(&[(f1, 0.4), (f2, 0.4)], 16384.0 / 48_000.0, 48_000).unwrap();
        let s = spectrum(&x, Window::Hann, 16384).unwrap();
        let a = db20(s.magnitude_near(f1, 0));
        let b = db20(s.magnitude_near(f2, 0));
        assert!((a - b).abs() <= 0.2);
        assert!((a - db20(0.4)).abs() <= 0.2);
    }

    #[test]
    fn shift_invariance_of_periodic_input() {
        let t = make_tone(1000.0, 0.5, 0.5, 48_000).unwrap();
        let shifted = t.slice_seconds(0.01234, 0.5).unwrap();
        let a = spectrum(&t, Window::Hann, 8192).unwrap();
        let b = spectrum(&shifted, Window::Hann, 8192).unwrap();
        let pa = db20(a.magnitude_near(1000.0, 1));
        let pb = db20(b.magnitude_near(1000.0, 1));
        assert!((pa - pb).abs() <= 0.2);
    }

    #[test]
    fn white_noise_has_no_outlier_bins() {
        let n = 1 << 16;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..n).map(|_| 0.1 * { let v: f64 = StandardNormal.sample(&mut rng); v }).collect();
            let w = Waveform::new(x, 44_100).unwrap();
            let s = spectrum(&w, Window::Hann, n).unwrap();
            let mags = &s.magnitudes()[1..s.magnitudes().len() - 1];
            let mean = mags.iter().sum::<f64>() / mags.len() as f64;
            let max = mags.iter().copied().fold(0.0, f64::max);
            assert!(db20(max / mean) < 20.0, "seed {seed}");
        }
    }

    #[test]
    fn band_energy_cases() {
        let t = make_tone(700.0, 1.0, 1.0, 16_000).unwrap();
        let total = band_energy(&t, 0.0, 8000.0).unwrap();
        assert!(band_energy(&t, 500.0, 1000.0).unwrap() / total >= 0.99);
        let t2 = make_tone(2000.0, 1.0, 1.0, 16_000).unwrap();
        assert!(band_energy(&t2, 500.0, 1000.0).unwrap() / band_energy(&t2, 0.0, 8000.0).unwrap() <= 0.01);
        let mix = make_multitone(&[(700.0, 0.5), (2000.0, 0.5)], 1.0, 16_000).unwrap();
        let r = band_energy(&mix, 500.0, 1000.0).unwrap() / band_energy(&mix, 0.0, 8000.0).unwrap();
        assert!((r - 0.5).abs() <= 0.02, "{r}");
        // Energy is Σx², so the total tracks the time-domain sum.
        let sum_sq: f64 = mix.samples().iter().map(|x| x * x).sum();
        assert!((band_energy(&mix, 0.0, 8000.0).unwrap() / sum_sq - 1.0).abs() < 0.01);
    }

    #[test]
    fn band_energy_rejects_inverted_bounds() {
        let t = make_tone(700.0, 1.0, 0.1, 16_000).unwrap();
        assert!(band_energy(&t, 1000.0, 500.0).is_err());
        assert!(band_energy(&t, 0.0, 9000.0).is_err());
    }

    #[test]
    fn csv_export_format() {
        let t = make_tone(1000.0, 1.0, 0.01, 8000).unwrap();
        let s = spectrum(&t, Window::Hann, 8).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "freq_hz,magnitude");
        assert_eq!(lines.len(), 1 + 5);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn rejects_non_power_of_two() {
        let t = make_tone(1000.0, 1.0, 0.01, 8000).unwrap();
        assert!(spectrum(&t, Window::Hann, 100).is_err());
        assert!(spectrum(&t, Window::Hann, 1).is_err());
    }
}

//! Mel-frequency cepstral coefficients.
//!
//! Per frame: pre-emphasis, Hann window, power spectrum, triangular mel
//! filterbank, log, DCT-II. The mel scale is `2595·log10(1 + f/700)`.
//!
//! The DCT is scaled so the coefficients are the real cepstrum of the log
//! mel amplitude envelope: with `N` filters centred at `ω_j = π(j + ½)/N`,
//!
//! ```text
//! ln A(ω_j) = c_0 + 2 Σ_k c_k cos(k ω_j)
//! ```
//!
//! This is the scale on which [`mcd`](super::mcd()) reads in decibels.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{real_fft, Waveform, Window};

/// Filterbank energies are clamped here before the log so silent frames
/// stay finite.
const LOG_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfccConfig {
    pub n_coeffs: usize,
    pub n_mel_filters: usize,
    /// Seconds.
    pub frame_len: f64,
    /// Seconds.
    pub hop: f64,
    pub pre_emphasis: f64,
    pub fmin: f64,
    /// `None` means the Nyquist frequency of the input.
    pub fmax: Option<f64>,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            n_coeffs: 13,
            n_mel_filters: 26,
            frame_len: 0.025,
            hop: 0.010,
            pre_emphasis: 0.97,
            fmin: 0.0,
            fmax: None,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_coeffs == 0 || self.n_coeffs > self.n_mel_filters {
            return Err(Error::invalid(format!(
                "need 1 ≤ n_coeffs ({}) ≤ n_mel_filters ({})",
                self.n_coeffs, self.n_mel_filters
            )));
        }
        if !(self.hop > 0.0 && self.frame_len > self.hop) {
            return Err(Error::invalid("need frame_len > hop > 0"));
        }
        if !(0.0..1.0).contains(&self.pre_emphasis) {
            return Err(Error::invalid("pre-emphasis must lie in [0, 1)"));
        }
        if self.fmin < 0.0 || self.fmax.is_some_and(|f| f <= self.fmin) {
            return Err(Error::invalid("need 0 ≤ fmin < fmax"));
        }
        Ok(())
    }
}

/// Frames × coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccMatrix {
    rows: Vec<Vec<f64>>,
    n_coeffs: usize,
}

impl MfccMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_coeffs = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n_coeffs == 0 {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n_coeffs) {
            return Err(Error::CoefficientMismatch {
                left: n_coeffs,
                right: bad.len(),
            });
        }
        Ok(MfccMatrix { rows, n_coeffs })
    }

    pub fn n_frames(&self) -> usize {
        self.rows.len()
    }

    pub fn n_coeffs(&self) -> usize {
        self.n_coeffs
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    /// One row per frame, header `c0,c1,…`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record((0..self.n_coeffs).map(|i| format!("c{i}")))?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters evenly spaced in mel, `n_filters × n_bins` weights
/// evaluated at the bin centre frequencies.
fn mel_filterbank(n_filters: usize, n_fft: usize, rate: f64, fmin: f64, fmax: f64) -> Vec<Vec<f64>> {
    let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let edges: Vec<f64> = (0..n_filters + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_filters + 1) as f64))
        .collect();
    let n_bins = n_fft / 2 + 1;
    (0..n_filters)
        .map(|j| {
            let (l, c, r) = (edges[j], edges[j + 1], edges[j + 2]);
            (0..n_bins)
                .map(|b| {
                    let f = b as f64 * rate / n_fft as f64;
                    if f <= l || f >= r {
                        0.0
                    } else if f <= c {
                        (f - l) / (c - l)
                    } else {
                        (r - f) / (r - c)
                    }
                })
                .collect()
        })
        .collect()
}

/// DCT-II rows `k = 0..n_out` over `n_in` log-power inputs, scaled to give
/// cepstral coefficients of the log amplitude (hence the extra ½).
fn dct_basis(n_out: usize, n_in: usize) -> Vec<Vec<f64>> {
    (0..n_out)
        .map(|k| {
            let scale = 0.5 / n_in as f64;
            (0..n_in)
                .map(|n| scale * (PI * k as f64 * (n as f64 + 0.5) / n_in as f64).cos())
                .collect()
        })
        .collect()
}

pub fn mfcc(wave: &Waveform, cfg: &MfccConfig) -> Result<MfccMatrix> {
    cfg.validate()?;
    let rate = wave.sample_rate() as f64;
    let frame = (cfg.frame_len * rate).round() as usize;
    let hop = ((cfg.hop * rate).round() as usize).max(1);
    if wave.len() < frame || frame < 2 {
        return Err(Error::TooShort {
            needed: frame.max(2),
            got: wave.len(),
        });
    }
    let fmax = cfg.fmax.unwrap_or(rate / 2.0).min(rate / 2.0);
    if fmax <= cfg.fmin {
        return Err(Error::invalid(format!("fmax {fmax} Hz must exceed fmin {} Hz", cfg.fmin)));
    }
    let n_fft = frame.next_power_of_two();
    let bank = mel_filterbank(cfg.n_mel_filters, n_fft, rate, cfg.fmin, fmax);
    let dct = dct_basis(cfg.n_coeffs, cfg.n_mel_filters);
    let window = Window::Hann.coefficients(frame);
    let n_frames = (wave.len() - frame) / hop + 1;
    let x = wave.samples();

    let rows = (0..n_frames)
        .map(|t| {
            let seg = &x[t * hop..t * hop + frame];
            let emph: Vec<f64> = (0..frame)
                .map(|i| {
                    let prev = if i == 0 { 0.0 } else { seg[i - 1] };
                    (seg[i] - cfg.pre_emphasis * prev) * window[i]
                })
                .collect();
            let spec = real_fft(&emph, n_fft);
            let power: Vec<f64> = spec[..=n_fft / 2].iter().map(|c| c.norm_sqr() / n_fft as f64).collect();
            let log_mel: Vec<f64> = bank
                .iter()
                .map(|f| f.iter().zip(&power).map(|(a, b)| a * b).sum::<f64>().max(LOG_FLOOR).ln())
                .collect();
            dct.iter()
                .map(|basis| basis.iter().zip(&log_mel).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    Ok(MfccMatrix {
        rows,
        n_coeffs: cfg.n_coeffs,
    })
}

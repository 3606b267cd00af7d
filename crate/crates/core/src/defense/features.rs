//! The fifteen time and frequency domain features the detector works on.
//!
//! Everything is computed on the mean-removed signal. Spectral features use
//! the Hann-windowed power spectrum of the whole clip.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulation::SILENCE_GATE_RMS;
use crate::signal::spectrum::median;
use crate::signal::{db10, power_spectrum, Waveform, Window};

pub const MIN_DURATION_S: f64 = 0.2;
pub const MIN_RATE: u32 = 8_000;
pub const N_FEATURES: usize = 15;

const FRAME_S: f64 = 0.020;
const FRAME_HOP_S: f64 = 0.010;
const POWER_FLOOR: f64 = 1e-30;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "rms",
    "peak",
    "crest_factor",
    "zero_crossing_rate",
    "short_time_energy_variance",
    "spectral_centroid",
    "spectral_rolloff_95",
    "spectral_flatness",
    "band_energy_ratio_500_1000",
    "band_energy_ratio_1000_2000",
    "high_band_fraction_above_4k",
    "spectral_entropy",
    "dominant_peak_freq",
    "dominant_peak_prominence",
    "spectral_slope",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub rms: f64,
    pub peak: f64,
    pub crest_factor: f64,
    /// Fraction of adjacent sample pairs that change sign.
    pub zero_crossing_rate: f64,
    /// Variance of 20 ms frame energies in dB.
    pub short_time_energy_variance: f64,
    /// Hz.
    pub spectral_centroid: f64,
    /// Hz below which 95 % of the power lies.
    pub spectral_rolloff_95: f64,
    /// Geometric over arithmetic mean of the power spectrum, in (0, 1].
    pub spectral_flatness: f64,
    /// Energy in 500–1000 Hz over energy in 0–500 Hz.
    pub band_energy_ratio_500_1000: f64,
    /// Energy in 1000–2000 Hz over energy in 0–1000 Hz.
    pub band_energy_ratio_1000_2000: f64,
    pub high_band_fraction_above_4k: f64,
    /// Shannon entropy of the normalized power spectrum over its maximum.
    pub spectral_entropy: f64,
    /// Hz, excluding DC.
    pub dominant_peak_freq: f64,
    /// dB of the dominant peak over the median bin.
    pub dominant_peak_prominence: f64,
    /// Least-squares slope of the power spectrum, dB per kHz.
    pub spectral_slope: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; N_FEATURES] {
        [
            self.rms,
            self.peak,
            self.crest_factor,
            self.zero_crossing_rate,
            self.short_time_energy_variance,
            self.spectral_centroid,
            self.spectral_rolloff_95,
            self.spectral_flatness,
            self.band_energy_ratio_500_1000,
            self.band_energy_ratio_1000_2000,
            self.high_band_fraction_above_4k,
            self.spectral_entropy,
            self.dominant_peak_freq,
            self.dominant_peak_prominence,
            self.spectral_slope,
        ]
    }

    pub fn from_array(v: [f64; N_FEATURES]) -> Self {
        FeatureVector {
            rms: v[0],
            peak: v[1],
            crest_factor: v[2],
            zero_crossing_rate: v[3],
            short_time_energy_variance: v[4],
            spectral_centroid: v[5],
            spectral_rolloff_95: v[6],
            spectral_flatness: v[7],
            band_energy_ratio_500_1000: v[8],
            band_energy_ratio_1000_2000: v[9],
            high_band_fraction_above_4k: v[10],
            spectral_entropy: v[11],
            dominant_peak_freq: v[12],
            dominant_peak_prominence: v[13],
            spectral_slope: v[14],
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.to_array()[i])
    }
}

/// Writes `path,label,<feature names…>` rows.
pub fn write_features_csv<W: Write>(rows: &[(String, String, FeatureVector)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["path", "label"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    for (path, label, f) in rows {
        let mut rec = vec![path.clone(), label.clone()];
        rec.extend(f.to_array().iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn frame_energy_variance_db(x: &[f64], rate: f64) -> f64 {
    let frame = (FRAME_S * rate).round() as usize;
    let hop = (FRAME_HOP_S * rate).round() as usize;
    let energies: Vec<f64> = (0..=(x.len() - frame) / hop)
        .map(|t| {
            let seg = &x[t * hop..t * hop + frame];
            db10(seg.iter().map(|v| v * v).sum::<f64>() / frame as f64 + POWER_FLOOR)
        })
        .collect();
    let mean = energies.iter().sum::<f64>() / energies.len() as f64;
    energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / energies.len() as f64
}

pub fn extract_features(wave: &Waveform) -> Result<FeatureVector> {
    let rate = wave.sample_rate();
    if rate < MIN_RATE {
        return Err(Error::invalid(format!("sample rate {rate} Hz is below {MIN_RATE} Hz")));
    }
    let min_len = (MIN_DURATION_S * rate as f64).ceil() as usize;
    if wave.len() < min_len {
        return Err(Error::TooShort {
            needed: min_len,
            got: wave.len(),
        });
    }
    let mean = wave.samples().iter().sum::<f64>() / wave.len() as f64;
    let x: Vec<f64> = wave.samples().iter().map(|s| s - mean).collect();
    let rms = crate::signal::rms(&x);
    if rms < SILENCE_GATE_RMS {
        return Err(Error::Silent {
            rms,
            gate: SILENCE_GATE_RMS,
        });
    }
    let peak = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let crossings = x.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
    let zero_crossing_rate = crossings as f64 / (x.len() - 1) as f64;

    let ps = power_spectrum(&x, rate as f64, Window::Hann);
    // DC is skipped throughout: the mean was removed, what remains there is
    // window leakage.
    let (freqs, power) = (&ps.freqs[1..], &ps.power[1..]);
    let total: f64 = power.iter().sum::<f64>().max(POWER_FLOOR);
    let eps = 1e-12 * total;
    let centroid = freqs.iter().zip(power).map(|(f, p)| f * p).sum::<f64>() / total;
    let mut acc = 0.0;
    let mut rolloff = *freqs.last().unwrap();
    for (f, p) in freqs.iter().zip(power) {
        acc += p;
        if acc >= 0.95 * total {
            rolloff = *f;
            break;
        }
    }
    let mean_p = total / power.len() as f64;
    let log_mean = power.iter().map(|p| p.max(POWER_FLOOR).ln()).sum::<f64>() / power.len() as f64;
    let flatness = (log_mean.exp() / mean_p).min(1.0);
    let band = |lo: f64, hi: f64| -> f64 {
        freqs.iter().zip(power).filter(|(f, _)| **f >= lo && **f < hi).map(|(_, p)| p).sum()
    };
    let ratio_500_1000 = band(500.0, 1000.0) / (band(0.0, 500.0) + eps);
    let ratio_1000_2000 = band(1000.0, 2000.0) / (band(0.0, 1000.0) + eps);
    let high = band(4000.0, f64::INFINITY) / total;
    let entropy = -power
        .iter()
        .map(|p| p / total)
        .filter(|q| *q > 0.0)
        .map(|q| q * q.ln())
        .sum::<f64>()
        / (power.len() as f64).ln();
    let (k_peak, p_peak) = power
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &p)| if p > best.1 { (k, p) } else { best });
    let prominence = db10(p_peak.max(POWER_FLOOR)) - db10(median(power).max(POWER_FLOOR));
    let db: Vec<f64> = power.iter().map(|p| db10(p.max(POWER_FLOOR))).collect();
    let khz: Vec<f64> = freqs.iter().map(|f| f / 1000.0).collect();
    let (mx, my) = (
        khz.iter().sum::<f64>() / khz.len() as f64,
        db.iter().sum::<f64>() / db.len() as f64,
    );
    let sxy: f64 = khz.iter().zip(&db).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = khz.iter().map(|a| (a - mx).powi(2)).sum();

    let f = FeatureVector {
        rms,
        peak,
        crest_factor: peak / rms,
        zero_crossing_rate,
        short_time_energy_variance: frame_energy_variance_db(&x, rate as f64),
        spectral_centroid: centroid,
        spectral_rolloff_95: rolloff,
        spectral_flatness: flatness,
        band_energy_ratio_500_1000: ratio_500_1000,
        band_energy_ratio_1000_2000: ratio_1000_2000,
        high_band_fraction_above_4k: high,
        spectral_entropy: entropy,
        dominant_peak_freq: freqs[k_peak],
        dominant_peak_prominence: prominence,
        spectral_slope: sxy / sxx,
    };
    debug_assert!(f.to_array().iter().all(|v| v.is_finite()));
    Ok(f)
}

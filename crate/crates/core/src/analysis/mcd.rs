//! Mel-cepstral distortion between two MFCC sequences.
//!
//! Frames are aligned by dynamic time warping with steps (1,0), (0,1) and
//! (1,1) and a Euclidean local cost over coefficients `1..n` (`c0`, the
//! frame energy, is left out). The distortion is
//!
//! ```text
//! MCD = (10/ln 10) · mean over aligned pairs of sqrt(2 · Σ_i (c_i − c'_i)²)
//! ```

use crate::error::{Error, Result};

use super::{mfcc, MfccConfig, MfccMatrix};
use crate::signal::{resample, Waveform};

const MCD_SCALE: f64 = 10.0 / std::f64::consts::LN_10;

fn local_cost(a: &[f64], b: &[f64]) -> f64 {
    a[1..].iter().zip(&b[1..]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Cheapest warping path: total cost and number of aligned pairs. Equal
/// costs prefer the shorter path, which keeps the result symmetric.
pub fn dtw(reference: &MfccMatrix, test: &MfccMatrix) -> Result<(f64, usize)> {
    if reference.n_coeffs() != test.n_coeffs() {
        return Err(Error::CoefficientMismatch {
            left: reference.n_coeffs(),
            right: test.n_coeffs(),
        });
    }
    let (n, m) = (reference.n_frames(), test.n_frames());
    // Row-major (cost, length) with one row of history.
    let mut prev = vec![(f64::INFINITY, 0usize); m];
    let mut cur = vec![(f64::INFINITY, 0usize); m];
    let better = |a: (f64, usize), b: (f64, usize)| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a };
    for i in 0..n {
        for j in 0..m {
            let d = local_cost(reference.frame(i), test.frame(j));
            let best = if i == 0 && j == 0 {
                (0.0, 0)
            } else {
                let mut b = (f64::INFINITY, usize::MAX);
                if i > 0 {
                    b = better(b, prev[j]);
                }
                if j > 0 {
                    b = better(b, cur[j - 1]);
                }
                if i > 0 && j > 0 {
                    b = better(b, prev[j - 1]);
                }
                b
            };
            cur[j] = (best.0 + d, best.1 + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// Mel-cepstral distortion in dB.
pub fn mcd(reference: &MfccMatrix, test: &MfccMatrix) -> Result<f64> {
    let (cost, len) = dtw(reference, test)?;
    Ok(MCD_SCALE * std::f64::consts::SQRT_2 * cost / len as f64)
}

/// MCD between two recordings. `test` is first resampled to the reference
/// rate so both filterbanks cover the same band.
pub fn waveform_mcd(reference: &Waveform, test: &Waveform, cfg: &MfccConfig) -> Result<f64> {
    let test = if test.sample_rate() == reference.sample_rate() {
        test.clone()
    } else {
        resample(test, reference.sample_rate())?
    };
    mcd(&mfcc(reference, cfg)?, &mfcc(&test, cfg)?)
}

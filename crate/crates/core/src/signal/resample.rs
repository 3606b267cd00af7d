//! Rational band-limited resampling.
//!
//! The rate change `new/old` is reduced to `L/M`; conceptually the input is
//! zero-stuffed by `L`, lowpassed by a Kaiser-windowed sinc at the upsampled
//! rate and decimated by `M`. Only the taps that touch non-zero input are
//! evaluated, from a precomputed table when `L` is moderate and directly
//! otherwise.

use super::filter::{bessel_i0, kaiser_at, kaiser_beta, kaiser_length, sinc};
use super::Waveform;
use crate::error::{Error, Result};

const ATTENUATION_DB: f64 = 80.0;
/// Passband edge as a fraction of the lower of the two Nyquist rates.
const PASSBAND_FRACTION: f64 = 0.9;
const TABLE_MAX_UPSAMPLING: u64 = 4096;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

struct Kernel {
    half: i64,
    cutoff: f64,
    beta: f64,
    i0_beta: f64,
    table: Option<Vec<f64>>,
}

impl Kernel {
    fn new(old: u32, new: u32, up: u64) -> Kernel {
        let up_rate = old as f64 * up as f64;
        let min_nyq = old.min(new) as f64 / 2.0;
        let pass = PASSBAND_FRACTION * min_nyq;
        let len = kaiser_length(ATTENUATION_DB, (min_nyq - pass) / up_rate);
        let half = ((len - 1) / 2) as i64;
        let beta = kaiser_beta(ATTENUATION_DB);
        let mut k = Kernel {
            half,
            cutoff: (pass + min_nyq) / 2.0 / up_rate,
            beta,
            i0_beta: bessel_i0(beta),
            table: None,
        };
        if up <= TABLE_MAX_UPSAMPLING {
            k.table = Some((-half..=half).map(|d| k.eval(d)).collect());
        }
        k
    }

    fn eval(&self, d: i64) -> f64 {
        let x = d as f64;
        2.0 * self.cutoff * sinc(2.0 * self.cutoff * x) * kaiser_at(x, self.half as f64, self.beta, self.i0_beta)
    }

    #[inline]
    fn at(&self, d: i64) -> f64 {
        match &self.table {
            Some(t) => t[(d + self.half) as usize],
            None => self.eval(d),
        }
    }
}

/// Converts `wave` to `new_rate`. Output sample `j` sits at time `j/new_rate`,
/// aligned with the input; content above the new Nyquist rate is attenuated
/// by at least 60 dB.
pub fn resample(wave: &Waveform, new_rate: u32) -> Result<Waveform> {
    if new_rate == 0 {
        return Err(Error::invalid("target sample rate must be positive"));
    }
    let old = wave.sample_rate();
    if new_rate == old {
        return Ok(wave.clone());
    }
    let g = gcd(old as u64, new_rate as u64);
    let up = new_rate as u64 / g;
    let down = old as u64 / g;
    let kernel = Kernel::new(old, new_rate, up);

    let x = wave.samples();
    let n_in = x.len() as i64;
    let n_out = ((x.len() as u64 * up).div_ceil(down)).max(1) as usize;
    let l = up as i64;
    let gain = up as f64;
    let out: Vec<f64> = (0..n_out as i64)
        .map(|j| {
            let t = j * down as i64;
            let k_lo = (t - kernel.half).div_euclid(l) + i64::from((t - kernel.half).rem_euclid(l) != 0);
            let k_hi = (t + kernel.half).div_euclid(l);
            let mut acc = 0.0;
            for k in k_lo.max(0)..=k_hi.min(n_in - 1) {
                acc += x[k as usize] * kernel.at(t - k * l);
            }
            acc * gain
        })
        .collect();
    Ok(Waveform::from_raw(out, new_rate, wave.label().map(str::to_owned)))
}

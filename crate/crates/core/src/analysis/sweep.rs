//! Carrier-frequency and depth sweeps over the modulate → capture chain,
//! reading the first three harmonics of a tone baseband at each point.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mic::{harmonic_amplitudes, MicrophoneModel};
use crate::modulation::{check_inaudibility, condition_baseband, modulate_conditioned, ModulationParams};
use crate::signal::{make_tone, Waveform, ULTRASONIC_RATE};

/// Margin over the noise floor a first harmonic needs to count as feasible.
pub const FEASIBLE_MARGIN_DB: f64 = 10.0;
/// Maxima closer than this are ties, resolved toward the lower carrier.
pub const PRIME_TIE_DB: f64 = 0.01;

/// A tone baseband sampled at the transmitter rate.
#[derive(Debug, Clone)]
pub struct ToneBaseband {
    pub freq: f64,
    pub wave: Waveform,
}

impl ToneBaseband {
    pub fn new(freq: f64, duration: f64, rate: u32) -> Result<Self> {
        Ok(ToneBaseband {
            freq,
            wave: make_tone(freq, 1.0, duration, rate)?,
        })
    }
}

impl Default for ToneBaseband {
    /// 400 Hz for 0.5 s at 192 kHz. After edge trimming the 44.1 kHz capture
    /// holds exactly 46 periods.
    fn default() -> Self {
        ToneBaseband::new(400.0, 0.5, ULTRASONIC_RATE).expect("default tone is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Carrier,
    Depth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub noise_floor: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimeCarrier {
    pub hz: f64,
    /// No point had a dominant first harmonic; this is the plain maximum.
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: SweepAxis,
    /// Sorted by `value`.
    pub points: Vec<SweepPoint>,
    /// Grid values left out because they violate the inaudibility rule.
    pub skipped: Vec<f64>,
    pub prime_fc: Option<PrimeCarrier>,
}

impl SweepReport {
    pub fn feasible_set(&self) -> Vec<f64> {
        self.points.iter().filter(|p| p.feasible).map(|p| p.value).collect()
    }

    /// `axis_value,h1,h2,h3,feasible` rows; carrier sweeps end with a
    /// `prime_fc,<hz>,,,<degraded>` footer (`<hz>` empty when absent).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(["axis_value", "h1", "h2", "h3", "feasible"])?;
        for p in &self.points {
            w.write_record([
                p.value.to_string(),
                p.h1.to_string(),
                p.h2.to_string(),
                p.h3.to_string(),
                p.feasible.to_string(),
            ])?;
        }
        if self.axis == SweepAxis::Carrier {
            let (hz, degraded) = match self.prime_fc {
                Some(p) => (p.hz.to_string(), p.degraded.to_string()),
                None => (String::new(), String::new()),
            };
            w.write_record(["prime_fc", &hz, "", "", &degraded])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses `start:stop:step` into an inclusive grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::invalid(format!("grid '{spec}': {e}")))?;
    let [start, stop, step] = parts[..] else {
        return Err(Error::invalid(format!("grid '{spec}' must be start:stop:step")));
    };
    if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
        return Err(Error::invalid(format!("grid '{spec}' needs step > 0 and stop ≥ start")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn measure(x: &Waveform, tone: f64, params: &ModulationParams, mic: &MicrophoneModel, seed: u64, value: f64) -> Result<SweepPoint> {
    let captured = mic.capture(&modulate_conditioned(x, params), seed)?;
    let h = harmonic_amplitudes(&captured, tone, 3)?;
    let (h1, h2, h3) = (h.get(1).unwrap_or(0.0), h.get(2).unwrap_or(0.0), h.get(3).unwrap_or(0.0));
    let floor = h.noise_floor();
    Ok(SweepPoint {
        value,
        h1,
        h2,
        h3,
        noise_floor: floor,
        feasible: h1 > h2.max(h3) && h1 > floor * 10f64.powf(FEASIBLE_MARGIN_DB / 20.0),
    })
}

fn sorted_points(mut points: Vec<SweepPoint>) -> Vec<SweepPoint> {
    points.sort_by(|a, b| a.value.total_cmp(&b.value));
    points
}

/// Sweeps the carrier over `fc_grid`, keeping everything else from
/// `template`. Carriers that would put the lower sideband in the audible
/// range are skipped. `seed` fixes the acquisition noise at every point.
pub fn sweep_carrier(
    baseband: &ToneBaseband,
    mic: &MicrophoneModel,
    fc_grid: &[f64],
    template: &ModulationParams,
    seed: u64,
) -> Result<SweepReport> {
    if fc_grid.is_empty() {
        return Err(Error::invalid("carrier grid is empty"));
    }
    let rate = baseband.wave.sample_rate();
    let base = ModulationParams {
        bandwidth_hz: baseband.freq,
        ..*template
    };
    let (usable, skipped): (Vec<f64>, Vec<f64>) = fc_grid
        .iter()
        .partition(|&&fc| check_inaudibility(&base.with_carrier(fc)).ok);
    for &fc in &usable {
        let p = base.with_carrier(fc);
        p.validate()?;
        if !(rate as f64 > p.min_output_rate()) {
            return Err(Error::SamplingRate {
                required: p.min_output_rate(),
                rate,
            });
        }
    }
    let x = condition_baseband(&baseband.wave, rate)?;
    let points = usable
        .par_iter()
        .map(|&fc| measure(&x, baseband.freq, &base.with_carrier(fc), mic, seed, fc))
        .collect::<Result<Vec<_>>>()?;
    let mut skipped = skipped;
    skipped.sort_by(f64::total_cmp);
    let mut report = SweepReport {
        axis: SweepAxis::Carrier,
        points: sorted_points(points),
        skipped,
        prime_fc: None,
    };
    report.prime_fc = prime_fc(&report);
    Ok(report)
}

/// Sweeps the modulation depth at the carrier of `template`.
pub fn sweep_depth(
    baseband: &ToneBaseband,
    mic: &MicrophoneModel,
    depth_grid: &[f64],
    template: &ModulationParams,
    seed: u64,
) -> Result<SweepReport> {
    if depth_grid.is_empty() {
        return Err(Error::invalid("depth grid is empty"));
    }
    let rate = baseband.wave.sample_rate();
    let base = ModulationParams {
        bandwidth_hz: baseband.freq,
        ..*template
    };
    for &m in depth_grid {
        base.with_depth(m).validate()?;
    }
    if !(rate as f64 > base.min_output_rate()) {
        return Err(Error::SamplingRate {
            required: base.min_output_rate(),
            rate,
        });
    }
    let x = condition_baseband(&baseband.wave, rate)?;
    let points = depth_grid
        .par_iter()
        .map(|&m| measure(&x, baseband.freq, &base.with_depth(m), mic, seed, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        axis: SweepAxis::Depth,
        points: sorted_points(points),
        skipped: Vec::new(),
        prime_fc: None,
    })
}

/// Carrier with the strongest first harmonic among points where it beats
/// both the 2nd and 3rd harmonics. Falls back to the overall strongest,
/// flagged `degraded`, when no point qualifies.
pub fn prime_fc(report: &SweepReport) -> Option<PrimeCarrier> {
    if report.axis != SweepAxis::Carrier || report.points.is_empty() {
        return None;
    }
    let clean: Vec<&SweepPoint> = report.points.iter().filter(|p| p.h1 > p.h2 && p.h1 > p.h3).collect();
    let (pool, degraded): (Vec<&SweepPoint>, bool) = if clean.is_empty() {
        (report.points.iter().collect(), true)
    } else {
        (clean, false)
    };
    let best = pool.iter().map(|p| p.h1).fold(f64::NEG_INFINITY, f64::max);
    let tie = best * 10f64.powf(-PRIME_TIE_DB / 20.0);
    pool.iter()
        .filter(|p| p.h1 >= tie)
        .map(|p| p.value)
        .min_by(f64::total_cmp)
        .map(|hz| PrimeCarrier { hz, degraded })
}

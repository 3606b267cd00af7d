//! Amplitude modulation onto an ultrasonic carrier, the audibility and
//! sampling constraints that go with it, and segment concatenation for
//! assembling commands out of labelled recordings.
//!
//! The modulated signal is
//!
//! ```text
//! s(t) = A_c · (1 + m · x(t)) · cos(2π f_c t)
//! ```
//!
//! where `x` is the baseband after DC removal and peak normalization, `m` the
//! modulation depth (peak change of the envelope relative to `A_c`) and `A_c`
//! the carrier amplitude. With a tone baseband the spectrum holds the carrier
//! at `A_c` and two sidebands at `f_c ± f_m` of `A_c·m/2` each.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::filter::spectral_highpass;
use crate::signal::{load_wav, power_spectrum, resample, Waveform, Window};

/// Lowest frequency considered inaudible.
pub const AUDIBLE_LIMIT_HZ: f64 = 20_000.0;
/// DC-blocking corner applied to every baseband before modulation.
pub const DC_BLOCK_HZ: f64 = 20.0;
/// Inputs quieter than this RMS are treated as silence.
pub const SILENCE_GATE_RMS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulationParams {
    /// Carrier frequency `f_c` in Hz.
    pub carrier_hz: f64,
    /// Modulation depth `m = M/A_c`, in `[0, 1]`.
    pub depth: f64,
    /// Carrier amplitude `A_c` in full-scale units.
    pub carrier_amplitude: f64,
    /// Baseband bandwidth `w` in Hz, measured or declared.
    pub bandwidth_hz: f64,
    /// Enforce `f_c − w > 20 kHz` when modulating.
    pub inaudible: bool,
}

impl Default for ModulationParams {
    fn default() -> Self {
        ModulationParams {
            carrier_hz: 25_000.0,
            depth: 1.0,
            carrier_amplitude: 0.5,
            bandwidth_hz: 4_000.0,
            inaudible: false,
        }
    }
}

impl ModulationParams {
    pub fn new(carrier_hz: f64, depth: f64, carrier_amplitude: f64, bandwidth_hz: f64) -> Result<Self> {
        let p = ModulationParams {
            carrier_hz,
            depth,
            carrier_amplitude,
            bandwidth_hz,
            inaudible: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn inaudible(mut self, on: bool) -> Self {
        self.inaudible = on;
        self
    }

    pub fn with_depth(mut self, depth: f64) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_carrier(mut self, carrier_hz: f64) -> Self {
        self.carrier_hz = carrier_hz;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(Error::invalid(format!("carrier {} Hz must be positive", self.carrier_hz)));
        }
        if !(0.0..=1.0).contains(&self.depth) {
            return Err(Error::invalid(format!("depth {} outside [0, 1]", self.depth)));
        }
        if !(self.carrier_amplitude > 0.0 && self.carrier_amplitude <= 1.0) {
            return Err(Error::invalid(format!(
                "carrier amplitude {} outside (0, 1]",
                self.carrier_amplitude
            )));
        }
        if self.carrier_amplitude * (1.0 + self.depth) > 1.0 + 1e-12 {
            return Err(Error::invalid(format!(
                "A_c·(1+m) = {} would clip; keep it ≤ 1",
                self.carrier_amplitude * (1.0 + self.depth)
            )));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz >= 0.0) {
            return Err(Error::invalid("baseband bandwidth must be ≥ 0"));
        }
        Ok(())
    }

    /// Minimum transmitter rate, exclusive: `2(f_c + w)`.
    pub fn min_output_rate(&self) -> f64 {
        2.0 * (self.carrier_hz + self.bandwidth_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InaudibilityReport {
    pub ok: bool,
    /// `f_c − w`, the lower edge of the lower sideband.
    pub lowest_freq: f64,
}

/// `ok` iff `f_c − w > 20 kHz`; the boundary itself counts as audible.
pub fn check_inaudibility(params: &ModulationParams) -> InaudibilityReport {
    let lowest_freq = params.carrier_hz - params.bandwidth_hz;
    InaudibilityReport {
        ok: lowest_freq > AUDIBLE_LIMIT_HZ,
        lowest_freq,
    }
}

fn check_rate(params: &ModulationParams, out_rate: u32) -> Result<()> {
    let required = params.min_output_rate();
    if !(out_rate as f64 > required) {
        return Err(Error::SamplingRate {
            required,
            rate: out_rate,
        });
    }
    Ok(())
}

/// Prepares a baseband for modulation: DC removal, resampling to the
/// transmitter rate and peak normalization to 1.
pub fn condition_baseband(baseband: &Waveform, out_rate: u32) -> Result<Waveform> {
    let rms = baseband.rms();
    if rms < SILENCE_GATE_RMS {
        return Err(Error::Silent {
            rms,
            gate: SILENCE_GATE_RMS,
        });
    }
    let blocked = spectral_highpass(baseband.samples(), baseband.sample_rate() as f64, DC_BLOCK_HZ);
    let x = resample(&baseband.with_samples(blocked), out_rate)?;
    let peak = x.peak();
    if peak < SILENCE_GATE_RMS {
        return Err(Error::Silent {
            rms: x.rms(),
            gate: SILENCE_GATE_RMS,
        });
    }
    Ok(x.scaled(1.0 / peak))
}

/// AM-modulates `baseband` onto the carrier described by `params`, producing
/// a waveform at `out_rate`.
pub fn am_modulate(baseband: &Waveform, params: &ModulationParams, out_rate: u32) -> Result<Waveform> {
    params.validate()?;
    check_rate(params, out_rate)?;
    if params.inaudible {
        let report = check_inaudibility(params);
        if !report.ok {
            return Err(Error::Audible {
                carrier: params.carrier_hz,
                bandwidth: params.bandwidth_hz,
                lowest: report.lowest_freq,
            });
        }
    }
    let x = condition_baseband(baseband, out_rate)?;
    Ok(modulate_conditioned(&x, params))
}

/// Modulation step alone, for a baseband already at the output rate and
/// normalized to unit peak.
pub(crate) fn modulate_conditioned(x: &Waveform, params: &ModulationParams) -> Waveform {
    let w = 2.0 * PI * params.carrier_hz / x.sample_rate() as f64;
    let (a, m) = (params.carrier_amplitude, params.depth);
    let samples = x
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &v)| (a * (1.0 + m * v) * (w * n as f64).cos()).clamp(-1.0, 1.0))
        .collect();
    let label = format!(
        "am fc={} m={} of {}",
        params.carrier_hz,
        params.depth,
        x.label().unwrap_or("baseband")
    );
    Waveform::from_raw(samples, x.sample_rate(), Some(label))
}

/// Smallest frequency below which `energy_fraction` of the spectral energy
/// lies (Hann-windowed whole-signal spectrum, mean removed).
pub fn estimate_bandwidth(voice: &Waveform, energy_fraction: f64) -> Result<f64> {
    if !(energy_fraction > 0.0 && energy_fraction <= 1.0) {
        return Err(Error::invalid(format!("energy fraction {energy_fraction} outside (0, 1]")));
    }
    let mean = voice.samples().iter().sum::<f64>() / voice.len() as f64;
    let centred: Vec<f64> = voice.samples().iter().map(|s| s - mean).collect();
    let rms = crate::signal::rms(&centred);
    if rms < SILENCE_GATE_RMS {
        return Err(Error::Silent {
            rms,
            gate: SILENCE_GATE_RMS,
        });
    }
    let ps = power_spectrum(&centred, voice.sample_rate() as f64, Window::Hann);
    let target = energy_fraction * ps.total();
    let mut acc = 0.0;
    for (f, p) in ps.freqs.iter().zip(&ps.power) {
        acc += p;
        if acc >= target {
            return Ok(*f);
        }
    }
    Ok(*ps.freqs.last().unwrap())
}

/// A labelled span of a recording.
#[derive(Debug, Clone)]
pub struct Segment {
    source: Arc<Waveform>,
    start: f64,
    end: f64,
    label: String,
}

impl Segment {
    pub fn new(source: Arc<Waveform>, start: f64, end: f64, label: impl Into<String>) -> Result<Self> {
        if !(start >= 0.0 && start < end && end <= source.duration() + 1e-9) {
            return Err(Error::invalid(format!(
                "segment [{start}, {end}) s outside source of {} s",
                source.duration()
            )));
        }
        Ok(Segment {
            source,
            start,
            end,
            label: label.into(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn sample_rate(&self) -> u32 {
        self.source.sample_rate()
    }

    pub fn excise(&self) -> Result<Waveform> {
        Ok(self.source.slice_seconds(self.start, self.end)?.with_label(self.label.clone()))
    }
}

/// Splices segments in order with an equal-power crossfade of `crossfade`
/// seconds between neighbours. Output length is the sum of the spans minus
/// one crossfade per joint.
pub fn concatenate_segments(segments: &[Segment], crossfade: f64) -> Result<Waveform> {
    let first = segments.first().ok_or_else(|| Error::invalid("no segments to concatenate"))?;
    let rate = first.sample_rate();
    if !(crossfade >= 0.0) {
        return Err(Error::invalid("crossfade must be ≥ 0"));
    }
    let n_cf = (crossfade * rate as f64).round() as usize;
    let mut pieces = Vec::with_capacity(segments.len());
    for s in segments {
        if s.sample_rate() != rate {
            return Err(Error::RateMismatch {
                expected: rate,
                found: s.sample_rate(),
            });
        }
        let w = s.excise()?;
        if segments.len() > 1 && w.len() <= n_cf {
            return Err(Error::invalid(format!(
                "crossfade {crossfade} s is not shorter than segment '{}' ({} s)",
                s.label,
                w.duration()
            )));
        }
        pieces.push(w.into_samples());
    }
    let mut out = pieces[0].clone();
    for next in &pieces[1..] {
        let base = out.len() - n_cf;
        for i in 0..n_cf {
            let theta = 0.5 * PI * (i as f64 + 0.5) / n_cf as f64;
            out[base + i] = out[base + i] * theta.cos() + next[i] * theta.sin();
        }
        out.extend_from_slice(&next[n_cf..]);
    }
    let label = segments.iter().map(|s| s.label.as_str()).collect::<Vec<_>>().join("+");
    Ok(Waveform::from_raw(out, rate, Some(label)))
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    path: String,
    start_s: f64,
    end_s: f64,
    label: String,
}

/// Reads a `path,start_s,end_s,label` manifest. Relative paths resolve
/// against the manifest's directory; each audio file is loaded once.
pub fn load_segment_manifest(path: impl AsRef<Path>) -> Result<Vec<Segment>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut cache: HashMap<String, Arc<Waveform>> = HashMap::new();
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let row: ManifestRow = row?;
        let src = match cache.get(&row.path) {
            Some(w) => w.clone(),
            None => {
                let w = Arc::new(load_wav(base.join(&row.path))?.wave);
                cache.insert(row.path.clone(), w.clone());
                w
            }
        };
        out.push(Segment::new(src, row.start_s, row.end_s, row.label)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{db20, make_multitone, make_tone, spectrum};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn params(fc: f64, depth: f64) -> ModulationParams {
        ModulationParams::new(fc, depth, 0.5, 2000.0).unwrap()
    }

    // 128 kHz with 2^16-point frames puts every multiple of 1.953125 Hz on a bin.
    const ALIGNED_RATE: u32 = 128_000;

    #[test]
    fn tone_gives_carrier_and_two_sidebands() {
        let bb = make_tone(2000.0, 1.0, 0.512, ALIGNED_RATE).unwrap();
        let s = am_modulate(&bb, &params(20_000.0, 1.0), ALIGNED_RATE).unwrap();
        let sp = spectrum(&s, Window::Hann, 1 << 16).unwrap();
        let peaks: Vec<f64> = sp.peaks_above(-60.0).iter().map(|&i| sp.bin_freqs()[i]).collect();
        assert_eq!(peaks, vec![18_000.0, 20_000.0, 22_000.0]);
    }

    #[test]
    fn half_depth_sidebands_are_quarter_carrier() {
        let bb = make_tone(2000.0, 1.0, 0.512, ALIGNED_RATE).unwrap();
        let p = params(20_000.0, 0.5);
        let s = am_modulate(&bb, &p, ALIGNED_RATE).unwrap();
        let sp = spectrum(&s, Window::Hann, 1 << 16).unwrap();
        let expect = db20(p.carrier_amplitude * 0.25);
        for f in [18_000.0, 22_000.0] {
            assert!((db20(sp.magnitude_near(f, 0)) - expect).abs() <= 0.2);
        }
        assert!((db20(sp.magnitude_near(20_000.0, 0)) - db20(0.5)).abs() <= 0.2);
        // Envelope swings 50 % around the unmodulated level.
        let peak = s.peak();
        assert!((peak - 0.75).abs() < 1e-3, "{peak}");
    }

    #[test]
    fn zero_depth_is_a_pure_carrier() {
        let bb = make_tone(2000.0, 1.0, 0.512, ALIGNED_RATE).unwrap();
        let s = am_modulate(&bb, &params(20_000.0, 0.0), ALIGNED_RATE).unwrap();
        let sp = spectrum(&s, Window::Hann, 1 << 16).unwrap();
        let peaks = sp.peaks_above(-60.0);
        assert_eq!(peaks.len(), 1);
        assert_eq!(sp.bin_freqs()[peaks[0]], 20_000.0);
    }

    #[test]
    fn never_exceeds_full_scale() {
        let bb = make_multitone(&[(300.0, 0.6), (1100.0, 0.4)], 0.2, 16_000).unwrap();
        let p = ModulationParams::new(30_000.0, 1.0, 0.5, 2000.0).unwrap();
        assert!(am_modulate(&bb, &p, 192_000).unwrap().peak() <= 1.0);
    }

    #[test]
    fn rate_must_exceed_twice_top_frequency() {
        let bb = make_tone(1000.0, 1.0, 0.05, 16_000).unwrap();
        let p = ModulationParams::new(40_000.0, 1.0, 0.5, 8000.0).unwrap();
        assert!(matches!(am_modulate(&bb, &p, 96_000), Err(Error::SamplingRate { .. })));
        assert!(am_modulate(&bb, &p, 96_001).is_ok());
    }

    #[test]
    fn inaudible_flag_enforces_the_20khz_rule() {
        let bb = make_tone(1000.0, 1.0, 0.05, 16_000).unwrap();
        let p = ModulationParams::new(24_000.0, 1.0, 0.5, 6000.0).unwrap().inaudible(true);
        let err = am_modulate(&bb, &p, 192_000).unwrap_err();
        assert!(err.to_string().contains("f_c−w must exceed 20000 Hz"));
    }

    #[test]
    fn inaudibility_boundaries() {
        let r = check_inaudibility(&ModulationParams::new(26_000.0, 1.0, 0.5, 6000.0).unwrap());
        assert!(!r.ok);
        let r = check_inaudibility(&ModulationParams::new(26_500.0, 1.0, 0.5, 6000.0).unwrap());
        assert!(r.ok);
        assert_eq!(r.lowest_freq, 20_500.0);
        let r = check_inaudibility(&ModulationParams::new(23_000.0, 1.0, 0.5, 3000.0).unwrap());
        assert!(!r.ok);
        assert_eq!(r.lowest_freq, 20_000.0);
    }

    #[test]
    fn params_reject_clipping_combinations() {
        assert!(ModulationParams::new(25_000.0, 1.0, 0.6, 0.0).is_err());
        assert!(ModulationParams::new(25_000.0, 1.2, 0.3, 0.0).is_err());
        assert!(ModulationParams::new(25_000.0, 0.5, 0.6, 0.0).is_ok());
    }

    proptest! {
        #[test]
        fn inaudibility_is_monotone_in_carrier(fc in 1_000.0f64..60_000.0, dfc in 0.0f64..10_000.0, w in 0.0f64..10_000.0) {
            let lo = ModulationParams { carrier_hz: fc, bandwidth_hz: w, ..Default::default() };
            let hi = ModulationParams { carrier_hz: fc + dfc, ..lo };
            prop_assert!(!check_inaudibility(&lo).ok || check_inaudibility(&hi).ok);
        }
    }

    #[test]
    fn synchronous_detection_recovers_the_baseband() {
        // Round-trip oracle: multiply by the carrier and lowpass.
        let bb = make_multitone(&[(350.0, 0.5), (900.0, 0.3), (2100.0, 0.2)], 0.25, 48_000).unwrap();
        let p = ModulationParams::new(28_000.0, 0.8, 0.5, 2100.0).unwrap();
        let s = am_modulate(&bb, &p, 192_000).unwrap();
        let w = 2.0 * PI * p.carrier_hz / 192_000.0;
        let mixed: Vec<f64> = s.samples().iter().enumerate().map(|(n, v)| 2.0 * v * (w * n as f64).cos()).collect();
        let env = crate::signal::fir_lowpass(&s.with_samples(mixed), 5000.0, 2000.0).unwrap();
        let reference = condition_baseband(&bb, 192_000).unwrap();
        let trim = 4800..env.len() - 4800;
        let a: Vec<f64> = env.samples()[trim.clone()].to_vec();
        let b: Vec<f64> = reference.samples()[trim].to_vec();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ma, mb) = (mean(&a), mean(&b));
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        let corr = cov / (va * vb).sqrt();
        assert!(corr >= 0.999, "{corr}");
    }

    #[test]
    fn bandwidth_of_a_pure_tone() {
        let t = make_tone(2000.0, 1.0, 1.0, 16_000).unwrap();
        let res = 16_000.0 / 16384.0;
        let w = estimate_bandwidth(&t, 0.99).unwrap();
        assert!((2000.0..=2000.0 + res).contains(&w), "{w}");
    }

    #[test]
    fn bandwidth_of_a_tone_pair() {
        // Energies 0.9 and 0.1: amplitudes √0.9·√2 and √0.1·√2 would do, but only
        // the ratio matters for the cumulative fraction.
        let t = make_multitone(&[(1000.0, 0.9f64.sqrt() * 0.7), (5000.0, 0.1f64.sqrt() * 0.7)], 1.0, 16_000).unwrap();
        let w = estimate_bandwidth(&t, 0.99).unwrap();
        assert!((w - 5000.0).abs() <= 2.0 * 16_000.0 / 16384.0, "{w}");
        // At 0.85 the 1 kHz tone alone suffices.
        let w85 = estimate_bandwidth(&t, 0.85).unwrap();
        assert!((w85 - 1000.0).abs() <= 2.0, "{w85}");
    }

    #[test]
    fn bandwidth_of_white_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..44_100).map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            0.2 * v
        }).collect();
        let w = estimate_bandwidth(&Waveform::new(x, 44_100).unwrap(), 0.99).unwrap();
        let expect = 0.99 * 22_050.0;
        assert!((w - expect).abs() / expect <= 0.02, "{w}");
    }

    #[test]
    fn bandwidth_rejects_silence() {
        let w = Waveform::new(vec![0.0; 1000], 16_000).unwrap();
        assert!(matches!(estimate_bandwidth(&w, 0.99), Err(Error::Silent { .. })));
    }

    fn noise_source(seconds: f64, rate: u32, seed: u64) -> Arc<Waveform> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = (seconds * rate as f64) as usize;
        // Lowpassed noise, so adjacent samples are smooth like speech.
        let raw: Vec<f64> = (0..n).map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            0.1 * v
        }).collect();
        let w = Waveform::new(raw, rate).unwrap();
        Arc::new(crate::signal::fir_lowpass(&w, 1000.0, 500.0).unwrap())
    }

    #[test]
    fn two_segments_duration() {
        let src = noise_source(1.0, 16_000, 1);
        let he = Segment::new(src.clone(), 0.1, 0.4, "he").unwrap();
        let cake = Segment::new(src, 0.5, 0.7, "(c)a(ke)").unwrap();
        let out = concatenate_segments(&[he, cake], 0.02).unwrap();
        assert_eq!(out.len(), (0.48f64 * 16_000.0).round() as usize);
        assert_eq!(out.label(), Some("he+(c)a(ke)"));
    }

    #[test]
    fn single_segment_is_the_excised_span() {
        let src = noise_source(1.0, 16_000, 2);
        let s = Segment::new(src.clone(), 0.25, 0.5, "x").unwrap();
        let out = concatenate_segments(&[s], 0.05).unwrap();
        assert_eq!(out.samples(), &src.samples()[4000..8000]);
    }

    #[test]
    fn three_segments_keep_level_through_crossfades() {
        let rate = 16_000;
        let segs: Vec<Segment> = (0..3)
            .map(|i| Segment::new(noise_source(1.0, rate, 10 + i), 0.0, 1.0, format!("s{i}")).unwrap())
            .collect();
        let out = concatenate_segments(&segs, 0.05).unwrap();
        assert_eq!(out.len(), (2.9 * rate as f64).round() as usize);
        let win = 800; // 50 ms
        let r = |a: usize| crate::signal::rms(&out.samples()[a..a + win]);
        for joint in [16_000 - 800, 2 * 16_000 - 1600] {
            let fade = db20(r(joint));
            let before = db20(r(joint - win));
            let after = db20(r(joint + win));
            assert!((fade - before).abs() <= 3.0 && (fade - after).abs() <= 3.0);
        }
        let jumps = out.samples().windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(jumps <= 0.1, "{jumps}");
    }

    #[test]
    fn concatenation_errors() {
        let a = Segment::new(noise_source(0.5, 16_000, 3), 0.0, 0.1, "a").unwrap();
        let b = Segment::new(noise_source(0.5, 8_000, 4), 0.0, 0.1, "b").unwrap();
        assert!(matches!(concatenate_segments(&[a.clone(), b], 0.01), Err(Error::RateMismatch { .. })));
        assert!(concatenate_segments(&[a.clone(), a.clone()], 0.2).is_err());
        assert!(concatenate_segments(&[], 0.01).is_err());
        assert!(Segment::new(noise_source(0.5, 16_000, 5), 0.3, 0.2, "bad").is_err());
    }

    #[test]
    fn manifest_loads_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let src = noise_source(0.5, 16_000, 6);
        crate::signal::save_wav(&src, dir.path().join("v.wav"), crate::signal::BitDepth::Float32).unwrap();
        std::fs::write(
            dir.path().join("m.csv"),
            "path,start_s,end_s,label\nv.wav,0.0,0.2,he\nv.wav,0.25,0.45,cake\n",
        )
        .unwrap();
        let segs = load_segment_manifest(dir.path().join("m.csv")).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[1].label(), "cake");
        let out = concatenate_segments(&segs, 0.01).unwrap();
        assert_eq!(out.len(), 3200 + 3200 - 160);
    }
}

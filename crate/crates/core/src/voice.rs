//! Seeded formant synthesis of short voice commands.
//!
//! Voiced sounds are a band-limited glottal pulse train (falling spectral
//! tilt, jittered pitch following a declining contour) through three cascaded
//! two-pole formant resonators. Fricatives are shaped noise bursts. Every
//! syllable gets a smooth attack and release, and the utterance sits on a
//! faint room-noise floor so silent stretches are not digitally zero.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::signal::{fir_lowpass, Waveform};

pub const VOICE_RATE: u32 = 16_000;
const ROOM_NOISE_RMS: f64 = 3e-4;
const PEAK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vowel {
    A,
    E,
    I,
    O,
    U,
}

impl Vowel {
    pub const ALL: [Vowel; 5] = [Vowel::A, Vowel::E, Vowel::I, Vowel::O, Vowel::U];

    /// First three formant frequencies of an adult male speaker, Hz.
    pub fn formants(self) -> [f64; 3] {
        match self {
            Vowel::A => [730.0, 1090.0, 2440.0],
            Vowel::E => [530.0, 1840.0, 2480.0],
            Vowel::I => [270.0, 2290.0, 3010.0],
            Vowel::O => [570.0, 840.0, 2410.0],
            Vowel::U => [300.0, 870.0, 2240.0],
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Vowel::A => "a",
            Vowel::E => "e",
            Vowel::I => "i",
            Vowel::O => "o",
            Vowel::U => "u",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fricative {
    S,
    Sh,
    F,
    H,
}

impl Fricative {
    pub const ALL: [Fricative; 4] = [Fricative::S, Fricative::Sh, Fricative::F, Fricative::H];

    /// Noise band and relative level.
    fn band(self) -> (f64, f64, f64) {
        match self {
            Fricative::S => (4000.0, 7500.0, 0.35),
            Fricative::Sh => (2000.0, 5000.0, 0.4),
            Fricative::F => (1000.0, 7500.0, 0.15),
            Fricative::H => (500.0, 4000.0, 0.12),
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Fricative::S => "s",
            Fricative::Sh => "sh",
            Fricative::F => "f",
            Fricative::H => "h",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Syllable {
    pub onset: Option<Fricative>,
    pub vowel: Vowel,
    /// Vowel duration, seconds.
    pub duration: f64,
}

impl Syllable {
    pub const fn new(onset: Option<Fricative>, vowel: Vowel, duration: f64) -> Self {
        Syllable { onset, vowel, duration }
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.onset.map_or("", Fricative::symbol), self.vowel.symbol())
    }
}

/// "hey, sa-fe, o-pen sho-p": the command shipped for demos and tests.
pub const BUNDLED_COMMAND: &[Syllable] = &[
    Syllable::new(Some(Fricative::H), Vowel::E, 0.22),
    Syllable::new(Some(Fricative::S), Vowel::A, 0.18),
    Syllable::new(Some(Fricative::F), Vowel::E, 0.16),
    Syllable::new(None, Vowel::O, 0.20),
    Syllable::new(None, Vowel::E, 0.14),
    Syllable::new(Some(Fricative::Sh), Vowel::O, 0.24),
    Syllable::new(None, Vowel::U, 0.18),
];

#[derive(Debug, Clone)]
pub struct Utterance {
    pub wave: Waveform,
    /// `(start_s, end_s, label)` per syllable.
    pub segments: Vec<(f64, f64, String)>,
}

/// Per-speaker parameters drawn from the seed.
#[derive(Debug, Clone, Copy)]
struct Speaker {
    f0: f64,
    formant_scale: f64,
    tilt: f64,
    jitter: f64,
}

impl Speaker {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Speaker {
            f0: rng.random_range(95.0..210.0),
            formant_scale: rng.random_range(0.92..1.12),
            tilt: rng.random_range(0.8..1.3),
            jitter: rng.random_range(0.002..0.01),
        }
    }
}

struct Resonator {
    b0: f64,
    a1: f64,
    a2: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bandwidth: f64, rate: f64) -> Self {
        let r = (-PI * bandwidth / rate).exp();
        let a1 = 2.0 * r * (2.0 * PI * freq / rate).cos();
        let a2 = -r * r;
        // Unit gain at DC.
        Resonator {
            b0: 1.0 - a1 - a2,
            a1,
            a2,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn envelope(n: usize, ramp: usize) -> impl Fn(usize) -> f64 {
    let ramp = ramp.min(n / 2).max(1);
    move |i| {
        let edge = i.min(n - 1 - i);
        if edge >= ramp {
            1.0
        } else {
            0.5 - 0.5 * (PI * edge as f64 / ramp as f64).cos()
        }
    }
}

fn voiced(vowel: Vowel, n: usize, start_f0: f64, spk: &Speaker, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let rate = VOICE_RATE as f64;
    let mut phase = 0.0;
    let mut f0 = start_f0;
    let mut source = Vec::with_capacity(n);
    for i in 0..n {
        // Slow fall through the syllable plus cycle-level jitter.
        let target = start_f0 * (1.0 - 0.12 * i as f64 / n as f64);
        f0 += 0.01 * (target - f0);
        let jit: f64 = StandardNormal.sample(rng);
        phase += 2.0 * PI * f0 * (1.0 + spk.jitter * jit) / rate;
        let kmax = ((rate / 2.0 - 200.0) / f0).floor() as usize;
        let s: f64 = (1..=kmax).map(|k| (k as f64 * phase).sin() / (k as f64).powf(spk.tilt)).sum();
        source.push(s);
    }
    let bandwidths = [70.0, 100.0, 140.0];
    let mut out = source;
    for (f, b) in vowel.formants().iter().zip(bandwidths) {
        let mut r = Resonator::new(f * spk.formant_scale, b, rate);
        out.iter_mut().for_each(|v| *v = r.step(*v));
    }
    let norm = out.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
    let env = envelope(n, (0.03 * rate) as usize);
    out.iter().enumerate().map(|(i, v)| v / norm * env(i)).collect()
}

fn fricative(kind: Fricative, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let (lo, hi, level) = kind.band();
    let raw: Vec<f64> = (0..n + 512)
        .map(|_| {
            let v: f64 = StandardNormal.sample(rng);
            v
        })
        .collect();
    let w = Waveform::new(raw, VOICE_RATE)?;
    let upper = fir_lowpass(&w, hi, 400.0)?;
    let lower = fir_lowpass(&w, lo, 400.0)?;
    let band: Vec<f64> = upper.samples().iter().zip(lower.samples()).map(|(a, b)| a - b).skip(256).take(n).collect();
    let rms = crate::signal::rms(&band).max(1e-12);
    let env = envelope(n, (0.02 * VOICE_RATE as f64) as usize);
    Ok(band.iter().enumerate().map(|(i, v)| level * v / (3.0 * rms) * env(i)).collect())
}

/// Renders `syllables` for a speaker drawn from `seed`. Durations vary by
/// ±15 % with the seed; the result is peak-normalized to 0.5.
pub fn synthesize(syllables: &[Syllable], seed: u64) -> Result<Utterance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spk = Speaker::draw(&mut rng);
    let rate = VOICE_RATE as f64;
    let lead = (0.08 * rate) as usize;
    let mut out = vec![0.0; lead];
    let mut segments = Vec::new();
    for (idx, syl) in syllables.iter().enumerate() {
        let start = out.len();
        if let Some(f) = syl.onset {
            let n = (rng.random_range(0.06..0.1) * rate) as usize;
            out.extend(fricative(f, n, &mut rng)?);
        }
        let n = (syl.duration * rng.random_range(0.85..1.15) * rate) as usize;
        // Pitch resets a little lower on each syllable.
        let f0 = spk.f0 * (1.0 - 0.03 * idx as f64) * rng.random_range(0.95..1.05);
        let amp = rng.random_range(0.7..1.0);
        out.extend(voiced(syl.vowel, n, f0, &spk, &mut rng).into_iter().map(|v| amp * v));
        segments.push((start as f64 / rate, out.len() as f64 / rate, syl.label()));
        let gap = (rng.random_range(0.03..0.07) * rate) as usize;
        out.extend(std::iter::repeat_n(0.0, gap));
    }
    out.extend(std::iter::repeat_n(0.0, lead));
    let peak = out.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
    let samples = out
        .iter()
        .map(|v| {
            let n: f64 = StandardNormal.sample(&mut rng);
            PEAK * v / peak + ROOM_NOISE_RMS * n
        })
        .collect();
    Ok(Utterance {
        wave: Waveform::new(samples, VOICE_RATE)?.with_label("synthetic voice"),
        segments,
    })
}

/// A random command of 3–7 syllables in a random voice.
pub fn random_command(seed: u64) -> Result<Utterance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe);
    let n = rng.random_range(3..=7);
    let syllables: Vec<Syllable> = (0..n)
        .map(|_| {
            let onset = if rng.random_bool(0.5) {
                Some(Fricative::ALL[rng.random_range(0..Fricative::ALL.len())])
            } else {
                None
            };
            Syllable::new(onset, Vowel::ALL[rng.random_range(0..Vowel::ALL.len())], rng.random_range(0.12..0.26))
        })
        .collect();
    synthesize(&syllables, seed)
}

/// The bundled command in the default voice.
pub fn bundled_command() -> Utterance {
    synthesize(BUNDLED_COMMAND, 0).expect("bundled command renders")
}

//! RIFF/WAVE import and export: 16-bit PCM or 32-bit IEEE float.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::Waveform;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Pcm16,
    Float32,
}

#[derive(Debug, Clone)]
pub struct LoadedWav {
    pub wave: Waveform,
    /// Conversions applied while loading, e.g. channel extraction.
    pub warnings: Vec<String>,
}

fn wav_err(path: &Path, source: hound::Error) -> Error {
    match source {
        hound::Error::IoError(e) => Error::Io(e),
        source => Error::Wav {
            path: path.to_owned(),
            source,
        },
    }
}

/// Reads a WAV file. Multichannel input keeps only the first channel and
/// records a warning.
pub fn load_wav(path: impl AsRef<Path>) -> Result<LoadedWav> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path).map_err(|e| wav_err(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(path, e))?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(path, e))?,
        (fmt, bits) => {
            return Err(Error::UnsupportedEncoding(format!(
                "{bits}-bit {fmt:?} in {}; expected 16-bit PCM or 32-bit float",
                path.display()
            )))
        }
    };
    let mut warnings = Vec::new();
    let samples: Vec<f64> = if channels > 1 {
        let msg = format!("{}: {channels} channels, using the first", path.display());
        log::warn!("{msg}");
        warnings.push(msg);
        interleaved.into_iter().step_by(channels).collect()
    } else {
        interleaved
    };
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::UnsupportedEncoding(format!(
            "{} contains non-finite float samples",
            path.display()
        )));
    }
    let label = path.file_name().map(|n| n.to_string_lossy().into_owned());
    let mut wave = Waveform::new(samples, spec.sample_rate)?;
    if let Some(l) = label {
        wave = wave.with_label(l);
    }
    Ok(LoadedWav { wave, warnings })
}

/// Writes a mono WAV file. 16-bit export rounds to the nearest step and
/// clips to the representable range.
pub fn save_wav(wave: &Waveform, path: impl AsRef<Path>, bit_depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let (bits, format) = match bit_depth {
        BitDepth::Pcm16 => (16, SampleFormat::Int),
        BitDepth::Float32 => (32, SampleFormat::Float),
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate(),
        bits_per_sample: bits,
        sample_format: format,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| wav_err(path, e))?;
    for &s in wave.samples() {
        let r = match bit_depth {
            BitDepth::Pcm16 => writer.write_sample((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16),
            BitDepth::Float32 => writer.write_sample(s as f32),
        };
        r.map_err(|e| wav_err(path, e))?;
    }
    writer.finalize().map_err(|e| wav_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stereo_takes_first_channel() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("st.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        for i in 0..10i16 {
            w.write_sample(i * 100).unwrap();
            w.write_sample(-1000i16).unwrap();
        }
        w.finalize().unwrap();
        let l = load_wav(&p).unwrap();
        assert_eq!(l.wave.len(), 10);
        assert_eq!(l.wave.samples()[3], 300.0 / 32768.0);
        assert_eq!(l.warnings.len(), 1);
    }

    #[test]
    fn non_wav_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        std::fs::write(&p, b"this is not a riff file at all").unwrap();
        assert!(matches!(load_wav(&p), Err(Error::Wav { .. })));
    }

    #[test]
    fn truncated_header_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.wav");
        std::fs::write(&p, b"RIFF\x24\x00\x00\x00WAVEfmt ").unwrap();
        assert!(load_wav(&p).is_err());
    }

    #[test]
    fn unsupported_bit_depth() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u8.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 8,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        w.write_sample(3i8).unwrap();
        w.finalize().unwrap();
        assert!(matches!(load_wav(&p), Err(Error::UnsupportedEncoding(_))));
    }

    #[test]
    fn float_round_trip_is_f32_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.wav");
        let w = Waveform::new(vec![0.1, -0.25, 0.999], 192_000).unwrap();
        save_wav(&w, &p, BitDepth::Float32).unwrap();
        let back = load_wav(&p).unwrap().wave;
        assert_eq!(back.sample_rate(), 192_000);
        for (a, b) in w.samples().iter().zip(back.samples()) {
            assert_eq!(*a as f32 as f64, *b);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn pcm16_round_trip_within_quantization(xs in proptest::collection::vec(-1.0f64..=1.0, 1..400)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("q.wav");
            let w = Waveform::new(xs, 44_100).unwrap();
            save_wav(&w, &p, BitDepth::Pcm16).unwrap();
            let back = load_wav(&p).unwrap().wave;
            prop_assert_eq!(back.len(), w.len());
            for (a, b) in w.samples().iter().zip(back.samples()) {
                prop_assert!((a - b).abs() <= 2f64.powi(-15));
            }
        }
    }
}

//! Labelled clips for training and evaluating the detector.
//!
//! Genuine clips are voices played through the air and captured by a
//! linear microphone; attack clips are the same voices modulated onto a
//! carrier and recovered by the square-law microphone. Both pass through the
//! same channel and ADC so only the capture mechanism differs. Clip `i` of
//! each class shares one speaker, so every voice appears once per class.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifier::Label;
use crate::error::{Error, Result};
use crate::mic::{ChannelModel, MicrophoneModel};
use crate::modulation::ModulationParams;
use crate::pipeline::{inject, record};
use crate::signal::{save_wav, BitDepth, Waveform};
use crate::voice::{random_command, synthesize, BUNDLED_COMMAND};

/// What each voice says.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Script {
    /// The bundled command, spoken by a different speaker per clip.
    Bundled,
    /// A random syllable string per clip.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub script: Script,
    pub genuine: usize,
    pub attack: usize,
    pub seed: u64,
    pub params: ModulationParams,
    pub channel: ChannelModel,
    pub mic: MicrophoneModel,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            script: Script::Bundled,
            genuine: 50,
            attack: 50,
            seed: 0,
            params: ModulationParams::default(),
            channel: ChannelModel::default(),
            mic: MicrophoneModel::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Clip {
    pub label: Label,
    pub index: usize,
    pub wave: Waveform,
}

fn voice_seed(base: u64, index: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(index as u64)
}

/// Channel and ADC noise never repeat between clips.
fn noise_seed(voice: u64, label: Label) -> u64 {
    match label {
        Label::Genuine => voice.wrapping_mul(2),
        Label::Attack => voice.wrapping_mul(2).wrapping_add(1),
    }
}

/// Generates every clip; the order is all genuine clips, then all attacks.
pub fn generate_corpus(cfg: &CorpusConfig) -> Result<Vec<Clip>> {
    cfg.params.validate()?;
    cfg.channel.validate()?;
    cfg.mic.validate()?;
    let linear = cfg.mic.clone().linear();
    let jobs: Vec<(Label, usize)> = (0..cfg.genuine)
        .map(|i| (Label::Genuine, i))
        .chain((0..cfg.attack).map(|i| (Label::Attack, i)))
        .collect();
    jobs.par_iter()
        .map(|&(label, index)| {
            let vs = voice_seed(cfg.seed, index);
            let voice = match cfg.script {
                Script::Bundled => synthesize(BUNDLED_COMMAND, vs)?,
                Script::Random => random_command(vs)?,
            }
            .wave;
            let seed = noise_seed(vs, label);
            let wave = match label {
                Label::Genuine => record(&voice, &cfg.channel, &linear, seed)?,
                Label::Attack => inject(&voice, &cfg.params, &cfg.channel, &cfg.mic, seed)?,
            };
            Ok(Clip { label, index, wave })
        })
        .collect()
}

/// Writes `<label>_<index>.wav` files and a `manifest.csv` (`path,label`)
/// into `dir`; returns the manifest path.
pub fn write_corpus(clips: &[Clip], dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let manifest = dir.join("manifest.csv");
    let mut w = csv::Writer::from_path(&manifest)?;
    w.write_record(["path", "label"])?;
    for c in clips {
        let name = format!("{}_{:03}.wav", c.label.as_str(), c.index);
        save_wav(&c.wave, dir.join(&name), BitDepth::Float32)?;
        w.write_record([name.as_str(), c.label.as_str()])?;
    }
    w.flush()?;
    Ok(manifest)
}

/// Reads a `path,label` manifest; relative paths resolve against its folder.
pub fn read_manifest(path: &Path) -> Result<Vec<(PathBuf, Label)>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).ne(["path", "label"]) {
        return Err(Error::Config(format!(
            "{}: manifest header must be 'path,label'",
            path.display()
        )));
    }
    rdr.records()
        .enumerate()
        .map(|(line, rec)| {
            let rec = rec?;
            let p = PathBuf::from(rec[0].trim());
            let label = rec[1].parse().map_err(|e| {
                Error::Config(format!("{} row {}: {e}", path.display(), line + 2))
            })?;
            Ok((if p.is_absolute() { p } else { base.join(p) }, label))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defense::features::extract_features;
    use crate::signal::load_wav;

    fn small() -> CorpusConfig {
        CorpusConfig {
            genuine: 2,
            attack: 2,
            ..Default::default()
        }
    }

    #[test]
    fn corpus_is_seeded() {
        let a = generate_corpus(&small()).unwrap();
        let b = generate_corpus(&small()).unwrap();
        assert_eq!(a.len(), 4);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.wave.samples(), y.wave.samples());
        }
        assert_eq!(a[0].label, Label::Genuine);
        assert_eq!(a[3].label, Label::Attack);
        assert_ne!(a[0].wave.samples(), a[1].wave.samples());
        let r = generate_corpus(&CorpusConfig { script: Script::Random, ..small() }).unwrap();
        assert_ne!(r[0].wave.samples(), a[0].wave.samples());
        for c in &a {
            assert_eq!(c.wave.sample_rate(), 44_100);
            extract_features(&c.wave).unwrap();
        }
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let clips = generate_corpus(&small()).unwrap();
        let manifest = write_corpus(&clips, dir.path()).unwrap();
        let rows = read_manifest(&manifest).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[2].1, Label::Attack);
        let back = load_wav(&rows[0].0).unwrap();
        assert_eq!(back.wave.len(), clips[0].wave.len());
    }

    #[test]
    fn bad_manifest_rows_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "path,label\na.wav,maybe\n").unwrap();
        let err = read_manifest(&p).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        std::fs::write(&p, "file,class\n").unwrap();
        assert!(read_manifest(&p).is_err());
    }
}

//! Experiment configuration: a TOML file whose every value can be
//! overridden from the command line.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use ultrainject::analysis::MfccConfig;
use ultrainject::defense::{CancelConfig, TrainConfig};
use ultrainject::mic::{ChannelModel, MicProfile, MicrophoneModel};
use ultrainject::modulation::ModulationParams;

/// Either a built-in profile name, a path to a microphone TOML file, or an
/// inline `[mic]` table.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MicSetting {
    Named(String),
    Inline(MicrophoneModel),
}

impl Default for MicSetting {
    fn default() -> Self {
        MicSetting::Named("flat".into())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub fc_grid: String,
    pub depth_grid: String,
    pub tone_hz: f64,
    pub tone_duration_s: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            fc_grid: "20000:48000:500".into(),
            depth_grid: "0.1:1.0:0.1".into(),
            tone_hz: 400.0,
            tone_duration_s: 0.5,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub lambda: f64,
    pub iterations: usize,
    pub exclude: Vec<String>,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSettings {
            lambda: t.lambda,
            iterations: t.iterations,
            exclude: t.exclude,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub modulation: ModulationParams,
    pub mic: MicSetting,
    pub channel: ChannelModel,
    pub mfcc: MfccConfig,
    pub sweep: SweepSettings,
    pub cancel: CancelConfig,
    pub train: TrainSettings,
    /// Directory relative paths in the file resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve_mic()?;
        Ok(cfg)
    }

    /// Turns a mic file reference into an inline model now, so a bad path
    /// fails before any work starts.
    fn resolve_mic(&mut self) -> Result<()> {
        if let MicSetting::Named(name) = &self.mic {
            if name.parse::<MicProfile>().is_err() {
                let path = self.base_dir.join(name);
                self.mic = MicSetting::Inline(load_mic_file(&path)?);
            }
        }
        Ok(())
    }

    pub fn microphone(&self) -> Result<MicrophoneModel> {
        let mic = match &self.mic {
            MicSetting::Named(name) => name.parse::<MicProfile>()?.model(),
            MicSetting::Inline(m) => m.clone(),
        };
        mic.validate()?;
        Ok(mic)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lambda: self.train.lambda,
            iterations: self.train.iterations,
            seed: self.seed,
            exclude: self.train.exclude.clone(),
        }
    }
}

pub fn load_mic_file(path: &Path) -> Result<MicrophoneModel> {
    if !path.is_file() {
        bail!("mic '{}' is neither a profile (flat, selective, weak) nor a readable file", path.display());
    }
    MicrophoneModel::load(path).with_context(|| format!("loading mic model {}", path.display()))
}

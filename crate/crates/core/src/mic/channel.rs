//! Free-field propagation from the transmitter to the diaphragm plus ambient
//! scene noise.
//!
//! Sound pressure levels map to digital levels through a single calibration
//! point: a 94 dB SPL signal at the diaphragm is an incident RMS level of
//! −30 dBFS. Every dB of SPL is one dB of digital level from there.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Waveform;

/// Digital RMS level in dBFS of a 94 dB SPL signal.
pub const DBFS_AT_94_DB_SPL: f64 = -30.0;

pub fn spl_to_dbfs(spl_db: f64) -> f64 {
    spl_db - 94.0 + DBFS_AT_94_DB_SPL
}

pub fn dbfs_to_spl(dbfs: f64) -> f64 {
    dbfs + 94.0 - DBFS_AT_94_DB_SPL
}

/// Ambient noise scenes at the midpoints of their typical SPL ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scene {
    Office,
    Cafe,
    Street,
}

impl Scene {
    pub const ALL: [Scene; 3] = [Scene::Office, Scene::Cafe, Scene::Street];

    pub fn noise_spl_db(self) -> f64 {
        match self {
            Scene::Office => 60.0,
            Scene::Cafe => 70.0,
            Scene::Street => 80.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scene::Office => "office",
            Scene::Cafe => "cafe",
            Scene::Street => "street",
        }
    }
}

impl FromStr for Scene {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "office" => Ok(Scene::Office),
            "cafe" => Ok(Scene::Cafe),
            "street" => Ok(Scene::Street),
            other => Err(Error::invalid(format!("unknown scene '{other}' (office, cafe, street)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelModel {
    /// Source level at `ref_distance_m`. `None` takes the input waveform as
    /// already calibrated at the reference distance.
    pub source_spl_db: Option<f64>,
    pub ref_distance_m: f64,
    pub distance_m: f64,
    pub scene_noise_spl_db: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            source_spl_db: None,
            ref_distance_m: 0.1,
            distance_m: 0.1,
            scene_noise_spl_db: Scene::Office.noise_spl_db(),
        }
    }
}

impl ChannelModel {
    pub fn scene(scene: Scene) -> Self {
        ChannelModel {
            scene_noise_spl_db: scene.noise_spl_db(),
            ..Default::default()
        }
    }

    pub fn with_distance(mut self, distance_m: f64) -> Self {
        self.distance_m = distance_m;
        self
    }

    pub fn with_noise_dbfs(mut self, dbfs: f64) -> Self {
        self.scene_noise_spl_db = dbfs_to_spl(dbfs);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ref_distance_m > 0.0 && self.distance_m > 0.0) {
            return Err(Error::invalid("channel distances must be positive"));
        }
        if !self.scene_noise_spl_db.is_finite() || self.source_spl_db.is_some_and(|s| !s.is_finite()) {
            return Err(Error::invalid("channel SPLs must be finite"));
        }
        Ok(())
    }

    /// Amplitude change from the reference distance, in dB (negative when
    /// farther away).
    pub fn path_gain_db(&self) -> f64 {
        -20.0 * (self.distance_m / self.ref_distance_m).log10()
    }

    pub fn noise_rms(&self) -> f64 {
        10f64.powf(spl_to_dbfs(self.scene_noise_spl_db) / 20.0)
    }
}

/// Propagates `wave` over the channel: optional level calibration, inverse
/// distance attenuation, then white Gaussian scene noise drawn from `seed`.
pub fn apply_channel(wave: &Waveform, channel: &ChannelModel, seed: u64) -> Result<Waveform> {
    channel.validate()?;
    let mut gain = 10f64.powf(channel.path_gain_db() / 20.0);
    if let Some(spl) = channel.source_spl_db {
        let rms = wave.rms();
        if rms == 0.0 {
            return Err(Error::Silent { rms, gate: 0.0 });
        }
        gain *= 10f64.powf(spl_to_dbfs(spl) / 20.0) / rms;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, channel.noise_rms()).map_err(|e| Error::invalid(e.to_string()))?;
    let samples = wave
        .samples()
        .iter()
        .map(|&s| gain * s + noise.sample(&mut rng))
        .collect();
    Ok(wave.with_samples(samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{db20, make_tone};

    #[test]
    fn reference_distance_with_negligible_noise_is_transparent() {
        let t = make_tone(1000.0, 0.5, 0.2, 48_000).unwrap();
        let ch = ChannelModel::default().with_noise_dbfs(-120.0);
        let out = apply_channel(&t, &ch, 0).unwrap();
        assert!((db20(out.rms()) - db20(t.rms())).abs() <= 0.1);
    }

    #[test]
    fn doubling_distance_costs_six_db() {
        let t = make_tone(1000.0, 0.5, 0.2, 48_000).unwrap();
        let ch = ChannelModel::default().with_noise_dbfs(-200.0).with_distance(0.2);
        let out = apply_channel(&t, &ch, 0).unwrap();
        let delta = db20(out.rms()) - db20(t.rms());
        assert!((delta + 20.0 * 2f64.log10()).abs() < 1e-3, "{delta}");
    }

    #[test]
    fn street_is_twenty_db_noisier_than_office() {
        let silence = Waveform::new(vec![0.0; 96_000], 48_000).unwrap();
        let e = |s: Scene| {
            let w = apply_channel(&silence, &ChannelModel::scene(s), 3).unwrap();
            w.samples().iter().map(|x| x * x).sum::<f64>()
        };
        let ratio = 10.0 * (e(Scene::Street) / e(Scene::Office)).log10();
        assert!((ratio - 20.0).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn source_spl_sets_the_level() {
        let t = make_tone(1000.0, 0.5, 0.2, 48_000).unwrap();
        let ch = ChannelModel {
            source_spl_db: Some(94.0),
            scene_noise_spl_db: -100.0,
            ..Default::default()
        };
        let out = apply_channel(&t, &ch, 0).unwrap();
        assert!((db20(out.rms()) - DBFS_AT_94_DB_SPL).abs() < 1e-3);
    }

    #[test]
    fn same_seed_same_noise() {
        let t = make_tone(1000.0, 0.5, 0.05, 48_000).unwrap();
        let ch = ChannelModel::scene(Scene::Cafe);
        assert_eq!(apply_channel(&t, &ch, 9).unwrap(), apply_channel(&t, &ch, 9).unwrap());
        assert_ne!(apply_channel(&t, &ch, 9).unwrap(), apply_channel(&t, &ch, 10).unwrap());
    }

    #[test]
    fn rejects_bad_distances() {
        let t = make_tone(1000.0, 0.5, 0.05, 48_000).unwrap();
        assert!(apply_channel(&t, &ChannelModel::default().with_distance(0.0), 0).is_err());
        assert_eq!("Street".parse::<Scene>().unwrap(), Scene::Street);
    }
}

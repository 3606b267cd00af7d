//! Linear maximum-margin detector.
//!
//! Features are z-normalized with training statistics; constant features are
//! dropped. Training minimizes the regularized hinge loss
//!
//! ```text
//! J(w, b) = λ/2 · |w|² + 1/n · Σ max(0, 1 − y_i (w·z_i + b))
//! ```
//!
//! with genuine = +1 and attack = −1, by full-batch sub-gradient steps. A step
//! is only taken if it does not increase `J`; otherwise the step size is
//! halved and retried, so the objective never goes up.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, FEATURE_NAMES, N_FEATURES};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "ultrainject-linear-margin";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Genuine,
    Attack,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Genuine => "genuine",
            Label::Attack => "attack",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "genuine" | "recorded" => Ok(Label::Genuine),
            "attack" | "recovered" => Ok(Label::Attack),
            other => Err(Error::invalid(format!("unknown label '{other}' (genuine, attack)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Feature names left out of the model entirely.
    pub exclude: Vec<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 1e-3,
            iterations: 2000,
            seed: 0,
            exclude: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub format: String,
    pub version: u32,
    pub feature_names: Vec<String>,
    /// One per feature; zero for dropped ones.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub mean: Vec<f64>,
    /// One for dropped features, so normalization stays defined.
    pub stdev: Vec<f64>,
    /// Features excluded by request or for being constant in training.
    pub dropped: Vec<String>,
    pub trained: bool,
    pub training_accuracy: f64,
    /// `J` after each iteration.
    #[serde(skip)]
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: Label,
    /// Signed distance-like margin; positive is genuine.
    pub score: f64,
}

impl ClassifierModel {
    /// A model with no weights; classifying with it is an error.
    pub fn untrained() -> Self {
        ClassifierModel {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            weights: vec![0.0; N_FEATURES],
            bias: 0.0,
            mean: vec![0.0; N_FEATURES],
            stdev: vec![1.0; N_FEATURES],
            dropped: Vec::new(),
            trained: false,
            training_accuracy: 0.0,
            objective_history: Vec::new(),
        }
    }

    pub fn score(&self, f: &FeatureVector) -> Result<f64> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        let x = f.to_array();
        Ok(self.bias
            + (0..N_FEATURES)
                .map(|i| self.weights[i] * (x[i] - self.mean[i]) / self.stdev[i])
                .sum::<f64>())
    }

    /// An equivalent model acting on raw features (zero mean, unit stdev).
    pub fn to_raw_space(&self) -> ClassifierModel {
        let weights: Vec<f64> = (0..N_FEATURES).map(|i| self.weights[i] / self.stdev[i]).collect();
        let bias = self.bias - (0..N_FEATURES).map(|i| weights[i] * self.mean[i]).sum::<f64>();
        ClassifierModel {
            weights,
            bias,
            mean: vec![0.0; N_FEATURES],
            stdev: vec![1.0; N_FEATURES],
            ..self.clone()
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("model serializes")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let m: ClassifierModel = toml::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if m.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!("format '{}' is not {MODEL_FORMAT}", m.format)));
        }
        if m.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {}", m.version)));
        }
        if m.feature_names.iter().map(String::as_str).ne(FEATURE_NAMES) {
            return Err(Error::ModelFormat("feature list does not match this build".into()));
        }
        if [m.weights.len(), m.mean.len(), m.stdev.len()] != [N_FEATURES; 3] {
            return Err(Error::ModelFormat(format!("expected {N_FEATURES} weights and statistics")));
        }
        if m.stdev.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::ModelFormat("normalization stdevs must be positive".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Labels `features`. A score of exactly zero counts as an attack.
pub fn classify(model: &ClassifierModel, features: &FeatureVector) -> Result<Classification> {
    let score = model.score(features)?;
    let label = if score > 0.0 { Label::Genuine } else { Label::Attack };
    Ok(Classification { label, score })
}

struct Problem {
    z: Vec<Vec<f64>>,
    y: Vec<f64>,
    lambda: f64,
}

impl Problem {
    fn objective(&self, w: &[f64], b: f64) -> f64 {
        let n = self.z.len() as f64;
        let reg = 0.5 * self.lambda * w.iter().map(|v| v * v).sum::<f64>();
        let hinge: f64 = self
            .z
            .iter()
            .zip(&self.y)
            .map(|(z, y)| (1.0 - y * (dot(w, z) + b)).max(0.0))
            .sum();
        reg + hinge / n
    }

    fn subgradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let n = self.z.len() as f64;
        let mut gw: Vec<f64> = w.iter().map(|v| self.lambda * v).collect();
        let mut gb = 0.0;
        for (z, y) in self.z.iter().zip(&self.y) {
            if y * (dot(w, z) + b) < 1.0 {
                gw.iter_mut().zip(z).for_each(|(g, zi)| *g -= y * zi / n);
                gb -= y / n;
            }
        }
        (gw, gb)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Trains on genuine (`positives`) and attack (`negatives`) examples.
pub fn train_classifier(
    positives: &[FeatureVector],
    negatives: &[FeatureVector],
    cfg: &TrainConfig,
) -> Result<ClassifierModel> {
    if positives.len() < 2 || negatives.len() < 2 {
        return Err(Error::DegenerateTraining(format!(
            "need at least 2 samples per class, got {} genuine and {} attack",
            positives.len(),
            negatives.len()
        )));
    }
    if let Some(bad) = cfg.exclude.iter().find(|e| !FEATURE_NAMES.contains(&e.as_str())) {
        return Err(Error::invalid(format!("unknown feature '{bad}'")));
    }
    let same = |a: &[FeatureVector], b: &[FeatureVector]| a.iter().all(|x| b.contains(x));
    if same(positives, negatives) && same(negatives, positives) {
        return Err(Error::DegenerateTraining(
            "both classes contain exactly the same feature vectors".into(),
        ));
    }
    let rows: Vec<([f64; N_FEATURES], f64)> = positives
        .iter()
        .map(|f| (f.to_array(), 1.0))
        .chain(negatives.iter().map(|f| (f.to_array(), -1.0)))
        .collect();

    let mut model = ClassifierModel::untrained();
    let mut active = Vec::new();
    for (i, name) in FEATURE_NAMES.iter().enumerate() {
        let (mean, std) = mean_std(rows.iter().map(|r| r.0[i]));
        let scale = mean.abs().max(1.0);
        if cfg.exclude.iter().any(|e| e == name) || !(std > 1e-12 * scale) {
            model.dropped.push(name.to_string());
        } else {
            model.mean[i] = mean;
            model.stdev[i] = std;
            active.push(i);
        }
    }
    if active.is_empty() {
        return Err(Error::DegenerateTraining(format!(
            "every feature is constant or excluded: {}",
            model.dropped.join(", ")
        )));
    }
    let problem = Problem {
        z: rows
            .iter()
            .map(|(x, _)| active.iter().map(|&i| (x[i] - model.mean[i]) / model.stdev[i]).collect())
            .collect(),
        y: rows.iter().map(|r| r.1).collect(),
        lambda: cfg.lambda,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = Normal::new(0.0, 0.01).expect("valid normal");
    let mut w: Vec<f64> = active.iter().map(|_| init.sample(&mut rng)).collect();
    let mut b = 0.0;
    let mut j = problem.objective(&w, b);
    let mut step = 1.0;
    let mut history = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        let (gw, gb) = problem.subgradient(&w, b);
        let mut accepted = false;
        for _ in 0..40 {
            let cw: Vec<f64> = w.iter().zip(&gw).map(|(a, g)| a - step * g).collect();
            let cb = b - step * gb;
            let cj = problem.objective(&cw, cb);
            if cj <= j {
                (w, b, j) = (cw, cb, cj);
                accepted = true;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        history.push(j);
        if !accepted {
            step = 1.0;
        }
    }

    for (k, &i) in active.iter().enumerate() {
        model.weights[i] = w[k];
    }
    model.bias = b;
    model.trained = true;
    model.objective_history = history;
    let correct = positives
        .iter()
        .map(|f| (f, Label::Genuine))
        .chain(negatives.iter().map(|f| (f, Label::Attack)))
        .filter(|(f, l)| classify(&model, f).map(|c| c.label == *l).unwrap_or(false))
        .count();
    model.training_accuracy = correct as f64 / rows.len() as f64;
    Ok(model)
}

/// Accuracy of the best single-feature threshold rule on a labelled set,
/// the baseline a linear model should at least match.
pub fn best_stump_accuracy(positives: &[FeatureVector], negatives: &[FeatureVector]) -> f64 {
    let data: Vec<([f64; N_FEATURES], f64)> = positives
        .iter()
        .map(|f| (f.to_array(), 1.0))
        .chain(negatives.iter().map(|f| (f.to_array(), -1.0)))
        .collect();
    let n = data.len() as f64;
    let mut best: f64 = 0.0;
    for i in 0..N_FEATURES {
        let mut cuts: Vec<f64> = data.iter().map(|d| d.0[i]).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut thresholds = vec![cuts[0] - 1.0];
        thresholds.extend(cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        thresholds.push(cuts[cuts.len() - 1] + 1.0);
        for t in thresholds {
            let above = data.iter().filter(|d| (d.0[i] > t) == (d.1 > 0.0)).count() as f64 / n;
            best = best.max(above).max(1.0 - above);
        }
    }
    best
}

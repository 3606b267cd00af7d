//! Countermeasures: telling recovered audio from genuine recordings, and
//! stripping injected baseband before it reaches the ADC.

pub mod cancel;
pub mod classifier;
pub mod corpus;
pub mod features;

pub use cancel::{cancel_injection, detect_carrier, CancelConfig, Cancellation, CarrierEstimate};
pub use classifier::{
    best_stump_accuracy, classify, train_classifier, Classification, ClassifierModel, Label, TrainConfig,
};
pub use corpus::{generate_corpus, read_manifest, write_corpus, Clip, CorpusConfig, Script};
pub use features::{extract_features, write_features_csv, FeatureVector, FEATURE_NAMES, N_FEATURES};

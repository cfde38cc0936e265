//! Accuracy- and size-aware dynamic weighting for classifier ensembles.
//!
//! The engine works on recorded prediction traces: per-epoch accuracies,
//! parameter counts and softmax outputs of each base model, stored as a
//! [`dataio::TraceBundle`]. From those it derives per-model ensemble weights
//! ([`weighting`]), fuses the models' softmax outputs ([`inference`]), and
//! evaluates the result ([`metrics`], [`bench`]). [`synth`] produces seeded
//! synthetic bundles with controllable learning curves and error
//! correlation.

pub mod bench;
pub mod dataio;
mod error;
pub mod inference;
pub mod metrics;
pub mod synth;
mod types;
pub mod weighting;

pub use error::{Error, Result};
pub use types::{
    count_parameters, validate_profile, validate_profiles, AccuracySource, AccuracyTrace, EnsembleState, EpochSnapshot,
    LabelVector, ModelProfile, PredictionMatrix, SizeMode, WeightingConfig, ROW_SUM_TOLERANCE,
};

//! Time-varying semi-parametric Hawkes processes (TV-SPHP).
//!
//! The crate covers the whole modelling pipeline for self-exciting event
//! streams with exogenous covariates:
//!
//! * [`model`]: intensity, impact function and compensator for the four model kinds;
//! * [`likelihood`]: negative log-likelihood, analytic gradient, regularized objective;
//! * [`learner`]: ADMM fitting with an L1 penalty, basis selection, γ cross-validation;
//! * [`simulator`]: Ogata thinning, expected-count prediction, synthetic datasets;
//! * [`ingestion`]: raw tracker exports to processed sequences;
//! * [`evaluation`]: MAE, test log-likelihood, binary accuracy and benchmark reports.
//!
//! Time is measured in hours throughout and rates in events per hour.

pub mod error;
pub mod evaluation;
pub mod format;
pub mod ingestion;
pub mod learner;
pub mod likelihood;
pub mod model;
mod parallel;
pub mod seeds;
pub mod simulator;

pub use error::{Error, Result};
pub use likelihood::{Dataset, SequenceEntry};
pub use model::{
    BasisSet, EventSequence, FeatureTrack, HawkesModel, ModelKind, ModelParams, StaticFeatures,
    TrackVector,
};

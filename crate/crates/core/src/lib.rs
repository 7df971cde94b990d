//! Binary classification from positive samples equipped with confidence.
//!
//! Given only positive patterns `x_i` and their confidences
//! `r_i = p(y = +1 | x_i)`, the classification risk can be rewritten as a
//! positive-class expectation,
//!
//! ```text
//! R(g) = π₊ E₊[ ℓ(g(x)) + (1 − r(x))/r(x) · ℓ(−g(x)) ],
//! ```
//!
//! so a classifier can be trained by minimizing the empirical version of the
//! bracket. This crate provides that objective ([`risk::pconf_risk`]) for
//! linear-in-parameter models, the naive confidence-weighted and supervised
//! objectives as baselines, a regression baseline, the associated
//! generalization bounds, a seeded two-Gaussian generator, and a harness that
//! runs the synthetic comparison studies.

pub mod data;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod loss;
pub mod model;
pub mod optim;
pub mod risk;
pub mod theory;

pub use error::{Error, Result};
pub use loss::LossKind;
pub use model::{Basis, LinearModel, Margin, PenaltyMatrix, Regularizer, StoredModel, ThresholdedModel};
pub use optim::{minimize, ridge_regression_fit, Algorithm, OptimizerConfig, TrainReport};
pub use risk::{LabeledSample, ObjectiveKind, PconfSample, RiskObjective, TrainingData};

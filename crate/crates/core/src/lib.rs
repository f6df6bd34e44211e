//! Bias-corrected quality estimation from sparse, selection-biased binary
//! feedback.
//!
//! Production feedback streams are selection-biased: who responds depends on
//! how satisfied they were, so the raw positive-feedback rate is a badly
//! biased estimate of true quality. This crate recovers calibrated aggregate
//! and per-cluster quality estimates from per-cluster sufficient statistics
//! `(n, m, y)` — interactions, feedback events, positive feedback — via:
//!
//! * classical baselines (naive mean, inverse-probability weighting),
//! * five Bayesian model variants over a two-stage binomial observation
//!   model, fit with a built-in No-U-Turn sampler,
//! * prevalence-weighted posterior synthesis with credible intervals,
//!   per-cluster flags, and a variance decomposition,
//! * PSIS-LOO model comparison and posterior predictive checks,
//! * a ground-truth simulator for validation, and
//! * an online drift monitor for the time between full refits.

pub mod drift;
pub mod estimators;
pub mod evaluation;
pub mod experiment;
pub mod io;
pub mod math;
pub mod models;
pub mod nuts;
pub mod simulate;
pub mod synthesis;
pub mod types;

pub use estimators::{abs_error, ipw_estimate, naive_mean, wilson_interval, EstimateResult};
pub use models::{build_model, ModelInstance, ModelVariant, PriorConfig};
pub use nuts::{run_chains, ConvergenceReport, PosteriorDraws, SamplerConfig};
pub use types::{
    aggregate_from_interactions, prevalence, validate_dataset, ClusterStats, Dataset,
    InteractionRecord, RunConfig,
};

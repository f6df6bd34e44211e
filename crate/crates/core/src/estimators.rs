//! Classical point estimators and frequentist utilities: naive feedback mean,
//! inverse-probability weighting, ground-truth references, and the Wilson
//! score interval.

use serde::{Deserialize, Serialize};

use crate::math::normal_quantile;
use crate::simulate::SyntheticPopulation;
use crate::types::Dataset;

#[derive(Debug, thiserror::Error)]
pub enum EstimatorError {
    #[error("no feedback: every cluster has m = 0")]
    NoFeedback,
    #[error("ground truth unavailable")]
    MissingTruth,
    #[error("trials must be >= 1")]
    NoTrials,
    #[error("successes {successes} exceed trials {trials}")]
    TooManySuccesses { successes: u64, trials: u64 },
    #[error("confidence level must lie in (0,1), got {0}")]
    BadLevel(f64),
}

/// A point estimate with its method tag and any clusters the estimator
/// had to drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub value: f64,
    pub method: String,
    pub excluded_clusters: Vec<String>,
}

/// Naive feedback mean Σ y_c / Σ m_c.
pub fn naive_mean(dataset: &Dataset) -> Result<EstimateResult, EstimatorError> {
    let m = dataset.total_feedback;
    if m == 0 {
        return Err(EstimatorError::NoFeedback);
    }
    Ok(EstimateResult {
        value: dataset.total_positive() as f64 / m as f64,
        method: "naive".into(),
        excluded_clusters: vec![],
    })
}

/// Inverse-probability-weighted estimate Σ n_c·(y_c/m_c) / Σ n_c with the
/// response propensity estimated as m_c/n_c.
///
/// Clusters without feedback leave the propensity undefined; they are
/// excluded from both numerator and denominator and reported.
pub fn ipw_estimate(dataset: &Dataset) -> Result<EstimateResult, EstimatorError> {
    let mut numer = 0.0;
    let mut denom = 0.0;
    let mut excluded = Vec::new();
    for c in dataset.clusters() {
        if c.m == 0 {
            excluded.push(c.cluster_id.clone());
            continue;
        }
        numer += c.n as f64 * c.y as f64 / c.m as f64;
        denom += c.n as f64;
    }
    if denom == 0.0 {
        return Err(EstimatorError::NoFeedback);
    }
    Ok(EstimateResult { value: numer / denom, method: "ipw".into(), excluded_clusters: excluded })
}

/// Prevalence-weighted true mean quality of a synthetic population.
pub fn oracle_truth(pop: &SyntheticPopulation) -> f64 {
    pop.aggregate_q_star
}

/// Prevalence-weighted mean over realized latent labels: Σ (n_c/N)·(k_c/n_c)
/// where k_c counts the realized positives.
pub fn oracle_truth_realized(
    sizes: &[u64],
    latent_positives: &[u64],
) -> Result<f64, EstimatorError> {
    if sizes.is_empty() || sizes.len() != latent_positives.len() {
        return Err(EstimatorError::MissingTruth);
    }
    let total: u64 = sizes.iter().sum();
    Ok(latent_positives.iter().map(|&k| k as f64).sum::<f64>() / total as f64)
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(
    successes: u64,
    trials: u64,
    level: f64,
) -> Result<(f64, f64), EstimatorError> {
    if trials == 0 {
        return Err(EstimatorError::NoTrials);
    }
    if successes > trials {
        return Err(EstimatorError::TooManySuccesses { successes, trials });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(EstimatorError::BadLevel(level));
    }
    let z = normal_quantile(1.0 - (1.0 - level) / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

/// Absolute error |estimate − truth|.
pub fn abs_error(estimate: f64, truth: f64) -> f64 {
    (estimate - truth).abs()
}

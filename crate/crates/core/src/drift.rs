//! Online drift monitoring between full refits: prevalence shift via
//! Jensen-Shannon divergence, per-cluster quality drift via exact
//! beta-binomial Bayes factors, a noise-fraction emergence signal, and
//! conjugate posterior updates for the quiet periods.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::math::ln_beta;
use crate::types::ClusterStats;

#[derive(Debug, thiserror::Error)]
pub enum DriftError {
    #[error("probability vectors must be nonnegative")]
    NegativeEntry,
    #[error("probability vector sums to {0}, expected 1")]
    NotNormalized(f64),
    #[error("vectors have mismatched lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two batches, got {0}")]
    TooFewBatches(usize),
    #[error("beta prior parameters must be positive, got ({0}, {1})")]
    BadPrior(f64, f64),
    #[error("window has y={y} > m={m}")]
    BadWindow { m: u64, y: u64 },
}

/// Per-cluster counts for one monitoring window, plus the upstream
/// clusterer's noise fraction for that window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchSummary {
    pub index: u64,
    pub clusters: Vec<ClusterStats>,
    pub noise_fraction: f64,
}

impl BatchSummary {
    pub fn new(index: u64, clusters: Vec<ClusterStats>, noise_fraction: f64) -> Self {
        Self { index, clusters, noise_fraction }
    }

    fn prevalence_map(&self) -> BTreeMap<&str, f64> {
        let total: u64 = self.clusters.iter().map(|c| c.n).sum();
        self.clusters
            .iter()
            .map(|c| (c.cluster_id.as_str(), c.n as f64 / total.max(1) as f64))
            .collect()
    }
}

/// Monitoring thresholds. `noise_run` consecutive strict increases in noise
/// fraction totaling more than `noise_rise` fire the emergence signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftThresholds {
    pub jsd: f64,
    pub bayes_factor: f64,
    pub noise_run: usize,
    pub noise_rise: f64,
    pub bf_prior: (f64, f64),
}

impl Default for DriftThresholds {
    fn default() -> Self {
        Self { jsd: 0.05, bayes_factor: 10.0, noise_run: 3, noise_rise: 0.05, bf_prior: (1.0, 1.0) }
    }
}

/// Recommended action after a monitoring step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftAction {
    None,
    Recluster,
    /// Reserved for operator workflows that refit without re-clustering;
    /// the monitor itself escalates cluster alerts, not full refits.
    Refit,
    ClusterAlert,
}

/// One triggered signal with its measured value and threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "signal", rename_all = "snake_case")]
pub enum DriftSignal {
    PrevalenceShift { jsd: f64, threshold: f64 },
    NoiseClimb { rise: f64, threshold: f64, run: usize },
    QualityShift { cluster_id: String, bayes_factor: f64, threshold: f64 },
}

/// Decision for the newest batch: action, triggering signals, and measured
/// values for every signal whether it fired or not.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftDecision {
    pub action: DriftAction,
    pub triggered: Vec<DriftSignal>,
    pub measured_jsd: f64,
    pub measured_noise_rise: f64,
    pub bayes_factors: Vec<(String, f64)>,
}

/// Jensen-Shannon divergence in nats between two probability vectors over
/// the same support; bounded by ln 2.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64, DriftError> {
    if p.len() != q.len() {
        return Err(DriftError::LengthMismatch(p.len(), q.len()));
    }
    if p.iter().chain(q.iter()).any(|&v| v < 0.0) {
        return Err(DriftError::NegativeEntry);
    }
    for total in [p.iter().sum::<f64>(), q.iter().sum::<f64>()] {
        if (total - 1.0).abs() > 1e-9 {
            return Err(DriftError::NotNormalized(total));
        }
    }
    let kl_to_mid = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| {
                if x == 0.0 {
                    0.0
                } else {
                    let mid = 0.5 * (x + y);
                    x * (x / mid).ln()
                }
            })
            .sum()
    };
    Ok(0.5 * kl_to_mid(p, q) + 0.5 * kl_to_mid(q, p))
}

/// Jensen-Shannon divergence between the prevalence vectors of two batches,
/// on the union of their cluster ids (missing clusters enter at zero).
pub fn prevalence_jsd(current: &BatchSummary, reference: &BatchSummary) -> f64 {
    let cur = current.prevalence_map();
    let refm = reference.prevalence_map();
    let mut ids: Vec<&str> = cur.keys().chain(refm.keys()).copied().collect();
    ids.sort_unstable();
    ids.dedup();
    let p: Vec<f64> = ids.iter().map(|id| *cur.get(id).unwrap_or(&0.0)).collect();
    let q: Vec<f64> = ids.iter().map(|id| *refm.get(id).unwrap_or(&0.0)).collect();
    js_divergence(&p, &q).expect("prevalence vectors are valid by construction")
}

/// Log marginal likelihood of one window's counts under a Beta(a0, b0) prior,
/// binomial coefficient included.
fn ln_marginal(m: u64, y: u64, a0: f64, b0: f64) -> Result<f64, DriftError> {
    if y > m {
        return Err(DriftError::BadWindow { m, y });
    }
    if !(a0 > 0.0 && b0 > 0.0) {
        return Err(DriftError::BadPrior(a0, b0));
    }
    Ok(crate::math::ln_choose(m, y) + ln_beta(a0 + y as f64, b0 + (m - y) as f64)
        - ln_beta(a0, b0))
}

/// Bayes factor comparing a split-quality model (independent q per window)
/// against a shared-quality model, from exact beta-binomial marginal
/// likelihoods. Values above 1 favor drift.
pub fn bayes_factor_split(
    window_a: (u64, u64),
    window_b: (u64, u64),
    prior: (f64, f64),
) -> Result<f64, DriftError> {
    let (a0, b0) = prior;
    let split = ln_marginal(window_a.0, window_a.1, a0, b0)?
        + ln_marginal(window_b.0, window_b.1, a0, b0)?;
    // Under the shared model the windows pool, and the coefficients are the
    // same per-window products, so they cancel in the ratio.
    let shared = crate::math::ln_choose(window_a.0, window_a.1)
        + crate::math::ln_choose(window_b.0, window_b.1)
        + ln_beta(a0 + (window_a.1 + window_b.1) as f64, b0 + (window_a.0 - window_a.1 + window_b.0 - window_b.1) as f64)
        - ln_beta(a0, b0);
    Ok((split - shared).exp())
}

/// Exact conjugate update of a Beta(a, b) posterior with a batch of m
/// feedback events, y of them positive.
pub fn conjugate_update(posterior: (f64, f64), batch: (u64, u64)) -> (f64, f64) {
    let (a, b) = posterior;
    let (m, y) = batch;
    debug_assert!(y <= m);
    (a + y as f64, b + (m - y) as f64)
}

/// Evaluate drift signals for the newest batch in a history.
///
/// Re-clustering fires on prevalence shift (JSD above threshold) or a
/// sustained noise climb; per-cluster quality shifts raise a cluster alert.
pub fn drift_decision(
    history: &[BatchSummary],
    thresholds: &DriftThresholds,
) -> Result<DriftDecision, DriftError> {
    if history.len() < 2 {
        return Err(DriftError::TooFewBatches(history.len()));
    }
    let current = &history[history.len() - 1];
    let reference = &history[history.len() - 2];
    let mut triggered = Vec::new();

    let jsd = prevalence_jsd(current, reference);
    if jsd > thresholds.jsd {
        triggered.push(DriftSignal::PrevalenceShift { jsd, threshold: thresholds.jsd });
    }

    // Sustained noise climb: `noise_run` consecutive strict increases whose
    // total rise exceeds the threshold.
    let noise: Vec<f64> = history.iter().map(|b| b.noise_fraction).collect();
    let mut noise_rise = 0.0;
    if noise.len() >= thresholds.noise_run + 1 {
        let tail = &noise[noise.len() - thresholds.noise_run - 1..];
        if tail.windows(2).all(|w| w[1] > w[0]) {
            noise_rise = tail[tail.len() - 1] - tail[0];
            if noise_rise > thresholds.noise_rise {
                triggered.push(DriftSignal::NoiseClimb {
                    rise: noise_rise,
                    threshold: thresholds.noise_rise,
                    run: thresholds.noise_run,
                });
            }
        }
    }

    let ref_map: BTreeMap<&str, &ClusterStats> =
        reference.clusters.iter().map(|c| (c.cluster_id.as_str(), c)).collect();
    let mut bayes_factors = Vec::new();
    for cluster in &current.clusters {
        let (m_ref, y_ref) = ref_map
            .get(cluster.cluster_id.as_str())
            .map(|c| (c.m, c.y))
            .unwrap_or((0, 0));
        let bf =
            bayes_factor_split((m_ref, y_ref), (cluster.m, cluster.y), thresholds.bf_prior)?;
        if bf > thresholds.bayes_factor {
            triggered.push(DriftSignal::QualityShift {
                cluster_id: cluster.cluster_id.clone(),
                bayes_factor: bf,
                threshold: thresholds.bayes_factor,
            });
        }
        bayes_factors.push((cluster.cluster_id.clone(), bf));
    }

    let recluster = triggered.iter().any(|s| {
        matches!(s, DriftSignal::PrevalenceShift { .. } | DriftSignal::NoiseClimb { .. })
    });
    let alert = triggered.iter().any(|s| matches!(s, DriftSignal::QualityShift { .. }));
    let action = if recluster {
        DriftAction::Recluster
    } else if alert {
        DriftAction::ClusterAlert
    } else {
        DriftAction::None
    };
    Ok(DriftDecision { action, triggered, measured_jsd: jsd, measured_noise_rise: noise_rise, bayes_factors })
}

/// Stateful monitor: holds the batch history and per-cluster conjugate
/// posteriors between full refits. One writer; reads see snapshots.
#[derive(Debug, Clone)]
pub struct DriftMonitor {
    thresholds: DriftThresholds,
    history: Vec<BatchSummary>,
    posteriors: BTreeMap<String, (f64, f64)>,
    prior: (f64, f64),
}

impl DriftMonitor {
    pub fn new(thresholds: DriftThresholds, prior: (f64, f64)) -> Self {
        Self { thresholds, history: Vec::new(), posteriors: BTreeMap::new(), prior }
    }

    /// Ingest a batch: update conjugate posteriors and evaluate signals.
    /// Returns `None` for the first batch (no reference window yet).
    pub fn push_batch(&mut self, batch: BatchSummary) -> Result<Option<DriftDecision>, DriftError> {
        for c in &batch.clusters {
            let entry = self.posteriors.entry(c.cluster_id.clone()).or_insert(self.prior);
            *entry = conjugate_update(*entry, (c.m, c.y));
        }
        self.history.push(batch);
        if self.history.len() < 2 {
            return Ok(None);
        }
        drift_decision(&self.history, &self.thresholds).map(Some)
    }

    pub fn posterior(&self, cluster_id: &str) -> Option<(f64, f64)> {
        self.posteriors.get(cluster_id).copied()
    }

    pub fn history(&self) -> &[BatchSummary] {
        &self.history
    }
}

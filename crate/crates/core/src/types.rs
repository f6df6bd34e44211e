//! Core data model: per-cluster sufficient statistics, validated datasets,
//! raw interaction records, and run configuration.
//!
//! Every model and estimator in this crate consumes a [`Dataset`]: an ordered
//! list of per-cluster counts `(n, m, y)` where `n` counts interactions,
//! `m` counts feedback events, and `y` counts positive feedback events.
//! Cluster order in the dataset is the canonical parameter order everywhere
//! downstream (models, draws, reports).

use serde::{Deserialize, Serialize};

use crate::models::{ModelVariant, PriorConfig};

/// Errors raised while validating or assembling datasets.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("empty dataset: at least one cluster is required")]
    Empty,
    #[error("cluster {cluster_id}: y={y} exceeds m={m}")]
    PositiveExceedsFeedback { cluster_id: String, y: u64, m: u64 },
    #[error("cluster {cluster_id}: m={m} exceeds n={n}")]
    FeedbackExceedsInteractions { cluster_id: String, m: u64, n: u64 },
    #[error("cluster {cluster_id}: n=0 clusters carry no prevalence weight and are rejected")]
    EmptyCluster { cluster_id: String },
    #[error("duplicate cluster_id {cluster_id}")]
    DuplicateClusterId { cluster_id: String },
    #[error("interaction {interaction_id}: f=1 requires r=1")]
    PolarityWithoutFeedback { interaction_id: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("config error: {0}")]
    Config(#[from] serde_json::Error),
}

/// Per-cluster sufficient statistics `(n, m, y)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub cluster_id: String,
    /// Interactions observed in the cluster.
    pub n: u64,
    /// Feedback events among those interactions.
    pub m: u64,
    /// Positive feedback events among the feedback.
    pub y: u64,
}

impl ClusterStats {
    pub fn new(cluster_id: impl Into<String>, n: u64, m: u64, y: u64) -> Self {
        Self { cluster_id: cluster_id.into(), n, m, y }
    }
}

/// A validated collection of clusters with recomputed totals.
///
/// Immutable after construction; `N` and `M` are always recomputed from the
/// cluster list rather than trusted from input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    clusters: Vec<ClusterStats>,
    /// Total interactions Σ n_c.
    pub total_interactions: u64,
    /// Total feedback events Σ m_c.
    pub total_feedback: u64,
}

impl Dataset {
    pub fn clusters(&self) -> &[ClusterStats] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Total positive feedback Σ y_c.
    pub fn total_positive(&self) -> u64 {
        self.clusters.iter().map(|c| c.y).sum()
    }
}

/// One raw interaction with its feedback indicators.
///
/// `feedback` mirrors "did the user respond at all"; `positive` is the
/// polarity and is meaningful only when `feedback` is set. `true_label`
/// carries ground truth on synthetic or anchor data and is absent in
/// production streams.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub interaction_id: String,
    pub cluster_id: String,
    pub feedback: bool,
    pub positive: bool,
    pub true_label: Option<bool>,
}

impl InteractionRecord {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.positive && !self.feedback {
            return Err(DataError::PolarityWithoutFeedback {
                interaction_id: self.interaction_id.clone(),
            });
        }
        Ok(())
    }
}

/// Validate raw per-cluster stats and assemble a [`Dataset`].
///
/// Rejects `y > m`, `m > n`, `n = 0`, duplicate cluster ids, and empty input;
/// cluster order is preserved.
pub fn validate_dataset(raw: Vec<ClusterStats>) -> Result<Dataset, DataError> {
    if raw.is_empty() {
        return Err(DataError::Empty);
    }
    let mut seen = std::collections::HashSet::new();
    for c in &raw {
        if c.y > c.m {
            return Err(DataError::PositiveExceedsFeedback {
                cluster_id: c.cluster_id.clone(),
                y: c.y,
                m: c.m,
            });
        }
        if c.m > c.n {
            return Err(DataError::FeedbackExceedsInteractions {
                cluster_id: c.cluster_id.clone(),
                m: c.m,
                n: c.n,
            });
        }
        if c.n == 0 {
            return Err(DataError::EmptyCluster { cluster_id: c.cluster_id.clone() });
        }
        if !seen.insert(c.cluster_id.clone()) {
            return Err(DataError::DuplicateClusterId { cluster_id: c.cluster_id.clone() });
        }
    }
    let total_interactions = raw.iter().map(|c| c.n).sum();
    let total_feedback = raw.iter().map(|c| c.m).sum();
    Ok(Dataset { clusters: raw, total_interactions, total_feedback })
}

/// Aggregate raw interaction records into per-cluster sufficient statistics.
///
/// Per cluster: n = record count, m = feedback count, y = positive-feedback
/// count. Clusters appear in order of first occurrence.
pub fn aggregate_from_interactions(records: &[InteractionRecord]) -> Result<Dataset, DataError> {
    if records.is_empty() {
        return Err(DataError::Empty);
    }
    let mut order: Vec<String> = Vec::new();
    let mut counts: std::collections::HashMap<String, (u64, u64, u64)> =
        std::collections::HashMap::new();
    for rec in records {
        rec.validate()?;
        let entry = counts.entry(rec.cluster_id.clone()).or_insert_with(|| {
            order.push(rec.cluster_id.clone());
            (0, 0, 0)
        });
        entry.0 += 1;
        if rec.feedback {
            entry.1 += 1;
            if rec.positive {
                entry.2 += 1;
            }
        }
    }
    let stats = order
        .into_iter()
        .map(|id| {
            let (n, m, y) = counts[&id];
            ClusterStats { cluster_id: id, n, m, y }
        })
        .collect();
    validate_dataset(stats)
}

/// Empirical cluster prevalence π̂_c = n_c / N.
///
/// The result is a probability vector: entries are positive and sum to one.
pub fn prevalence(dataset: &Dataset) -> Vec<f64> {
    let total = dataset.total_interactions as f64;
    dataset.clusters().iter().map(|c| c.n as f64 / total).collect()
}

/// Full configuration for one model fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelVariant,
    #[serde(default = "default_chains")]
    pub chains: u32,
    #[serde(default = "default_draws")]
    pub draws: u32,
    #[serde(default = "default_tune")]
    pub tune: u32,
    /// Defaults to the per-variant target when absent.
    #[serde(default)]
    pub target_accept: Option<f64>,
    #[serde(default = "default_max_tree_depth")]
    pub max_tree_depth: u32,
    pub seed: u64,
    #[serde(default)]
    pub priors: PriorConfig,
}

fn default_chains() -> u32 {
    4
}
fn default_draws() -> u32 {
    2000
}
fn default_tune() -> u32 {
    2000
}
fn default_max_tree_depth() -> u32 {
    10
}

impl RunConfig {
    /// Per-variant defaults: 4 chains, 2000 draws after 2000 tuning steps,
    /// with the variant's default acceptance target.
    pub fn for_variant(model: ModelVariant, seed: u64) -> Self {
        Self {
            model,
            chains: default_chains(),
            draws: default_draws(),
            tune: default_tune(),
            target_accept: None,
            max_tree_depth: default_max_tree_depth(),
            seed,
            priors: PriorConfig::default(),
        }
    }

    /// The acceptance target actually in force (explicit override or the
    /// variant default).
    pub fn effective_target_accept(&self) -> f64 {
        self.target_accept.unwrap_or_else(|| self.model.default_target_accept())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.chains == 0 {
            return Err("chains must be >= 1".into());
        }
        if self.draws == 0 || self.tune == 0 {
            return Err("draws and tune must be >= 1".into());
        }
        let ta = self.effective_target_accept();
        if !(ta > 0.0 && ta < 1.0) {
            return Err(format!("target_accept must lie strictly in (0,1), got {ta}"));
        }
        if self.max_tree_depth == 0 {
            return Err("max_tree_depth must be >= 1".into());
        }
        self.priors.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(id: &str, n: u64, m: u64, y: u64) -> ClusterStats {
        ClusterStats::new(id, n, m, y)
    }

    #[test]
    fn validate_recomputes_totals() {
        let ds = validate_dataset(vec![stats("c1", 10, 4, 2)]).unwrap();
        assert_eq!(ds.total_interactions, 10);
        assert_eq!(ds.total_feedback, 4);
        assert_eq!(ds.total_positive(), 2);
    }

    #[test]
    fn validate_rejects_y_over_m() {
        let err = validate_dataset(vec![stats("c1", 10, 4, 5)]).unwrap_err();
        assert!(matches!(err, DataError::PositiveExceedsFeedback { .. }), "{err}");
        assert!(err.to_string().contains("c1"));
    }

    #[test]
    fn validate_rejects_m_over_n() {
        let err = validate_dataset(vec![stats("c1", 3, 4, 1)]).unwrap_err();
        assert!(matches!(err, DataError::FeedbackExceedsInteractions { .. }));
    }

    #[test]
    fn validate_rejects_duplicates_and_empty() {
        let err =
            validate_dataset(vec![stats("c1", 10, 1, 0), stats("c1", 5, 1, 1)]).unwrap_err();
        assert!(matches!(err, DataError::DuplicateClusterId { .. }));
        assert!(matches!(validate_dataset(vec![]).unwrap_err(), DataError::Empty));
        let err = validate_dataset(vec![stats("c0", 0, 0, 0)]).unwrap_err();
        assert!(matches!(err, DataError::EmptyCluster { .. }));
    }

    fn record(id: &str, cluster: &str, feedback: bool, positive: bool) -> InteractionRecord {
        InteractionRecord {
            interaction_id: id.into(),
            cluster_id: cluster.into(),
            feedback,
            positive,
            true_label: None,
        }
    }

    #[test]
    fn aggregate_counts_per_cluster() {
        let records = vec![
            record("i1", "c1", true, true),
            record("i2", "c1", true, false),
            record("i3", "c1", false, false),
        ];
        let ds = aggregate_from_interactions(&records).unwrap();
        assert_eq!(ds.clusters()[0], stats("c1", 3, 2, 1));
    }

    #[test]
    fn aggregate_rejects_polarity_without_feedback() {
        let err = aggregate_from_interactions(&[record("i1", "c1", false, true)]).unwrap_err();
        assert!(matches!(err, DataError::PolarityWithoutFeedback { .. }));
    }

    #[test]
    fn aggregate_handles_all_silent_clusters() {
        let records = vec![record("i1", "a", false, false), record("i2", "b", false, false)];
        let ds = aggregate_from_interactions(&records).unwrap();
        for c in ds.clusters() {
            assert!(c.n > 0);
            assert_eq!(c.m, 0);
            assert_eq!(c.y, 0);
        }
    }

    #[test]
    fn aggregate_rejects_empty() {
        assert!(matches!(aggregate_from_interactions(&[]).unwrap_err(), DataError::Empty));
    }

    #[test]
    fn prevalence_is_probability_vector() {
        let ds =
            validate_dataset(vec![stats("a", 10, 0, 0), stats("b", 30, 0, 0)]).unwrap();
        let pi = prevalence(&ds);
        assert_eq!(pi, vec![0.25, 0.75]);

        let ds = validate_dataset(vec![
            stats("a", 1, 0, 0),
            stats("b", 1, 0, 0),
            stats("c", 2, 0, 0),
        ])
        .unwrap();
        assert_eq!(prevalence(&ds), vec![0.25, 0.25, 0.5]);

        let single = validate_dataset(vec![stats("solo", 7, 2, 1)]).unwrap();
        assert_eq!(prevalence(&single), vec![1.0]);
    }

    #[test]
    fn run_config_rejects_unknown_keys() {
        let json = r#"{"model":"basic","seed":1,"bogus":3}"#;
        assert!(serde_json::from_str::<RunConfig>(json).is_err());
    }

    #[test]
    fn run_config_validates_ranges() {
        let mut cfg = RunConfig::for_variant(ModelVariant::Basic, 7);
        assert!(cfg.validate().is_ok());
        cfg.target_accept = Some(1.0);
        assert!(cfg.validate().is_err());
        cfg.target_accept = Some(0.9);
        cfg.draws = 0;
        assert!(cfg.validate().is_err());
    }
}

//! Posterior synthesis: prevalence-weighted aggregate quality, credible
//! intervals, per-cluster flags, and a variance decomposition of the
//! aggregate posterior.

use serde::{Deserialize, Serialize};

use crate::math::{mean, quantile_sorted, sample_variance};

#[derive(Debug, thiserror::Error)]
pub enum SynthesisError {
    #[error("prevalence vector must sum to 1, got {0}")]
    BadPrevalence(f64),
    #[error("draw matrix has {got} clusters, prevalence has {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("need at least {need} draws, got {got}")]
    TooFewDraws { need: usize, got: usize },
    #[error("credible level must lie in (0,1), got {0}")]
    BadLevel(f64),
}

/// Posterior summary of one scalar quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
}

impl PosteriorSummary {
    pub fn from_draws(draws: &[f64], level: f64) -> Result<Self, SynthesisError> {
        let (lo, hi) = credible_interval(draws, level)?;
        let mut sorted = draws.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN draw"));
        Ok(Self {
            mean: mean(draws),
            sd: sample_variance(draws).sqrt(),
            median: quantile_sorted(&sorted, 0.5),
            ci_low: lo,
            ci_high: hi,
            level,
        })
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

/// Per-cluster quality summary with its prevalence weight and flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster_id: String,
    pub prevalence: f64,
    pub quality: PosteriorSummary,
    pub flagged: bool,
}

/// Variance decomposition of the aggregate posterior: `within` is the
/// prevalence-squared-weighted sum of per-cluster marginal variances, and
/// `residual` is the covariance remainder (`total − within`, possibly
/// negative).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceDecomposition {
    pub total: f64,
    pub within: f64,
    pub residual: f64,
    /// Prevalence-weighted variance of per-cluster posterior means: a
    /// descriptive cross-cluster heterogeneity number, not a component of
    /// `total`.
    pub heterogeneity: f64,
}

/// Full synthesis output for one fitted model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualitySummary {
    pub aggregate: PosteriorSummary,
    pub clusters: Vec<ClusterSummary>,
    pub flagged_clusters: Vec<String>,
    pub variance: VarianceDecomposition,
    pub q_target: f64,
    pub max_ci_width: f64,
}

/// Default flag threshold on the posterior mean quality.
pub const DEFAULT_Q_TARGET: f64 = 0.7;
/// Default maximum credible-interval width for a flag to count as confident.
pub const DEFAULT_MAX_CI_WIDTH: f64 = 0.1;

/// Per-draw prevalence-weighted aggregate: one aggregate draw per posterior
/// draw of the per-cluster qualities.
pub fn aggregate_posterior(
    q_draws: &[Vec<f64>],
    prevalence: &[f64],
) -> Result<Vec<f64>, SynthesisError> {
    let total: f64 = prevalence.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(SynthesisError::BadPrevalence(total));
    }
    q_draws
        .iter()
        .map(|row| {
            if row.len() != prevalence.len() {
                return Err(SynthesisError::DimensionMismatch {
                    got: row.len(),
                    want: prevalence.len(),
                });
            }
            Ok(row.iter().zip(prevalence).map(|(q, p)| q * p).sum())
        })
        .collect()
}

/// Equal-tailed credible interval with linear quantile interpolation.
pub fn credible_interval(draws: &[f64], level: f64) -> Result<(f64, f64), SynthesisError> {
    if draws.len() < 100 {
        return Err(SynthesisError::TooFewDraws { need: 100, got: draws.len() });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(SynthesisError::BadLevel(level));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN draw"));
    let tail = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail)))
}

/// Flag clusters whose posterior mean quality sits confidently below target:
/// mean < `q_target` and CI width < `max_ci_width`.
pub fn flag_clusters(
    summaries: &[ClusterSummary],
    q_target: f64,
    max_ci_width: f64,
) -> Vec<String> {
    summaries
        .iter()
        .filter(|c| c.quality.mean < q_target && c.quality.ci_width() < max_ci_width)
        .map(|c| c.cluster_id.clone())
        .collect()
}

/// Decompose the variance of the aggregate posterior.
pub fn variance_decomposition(
    q_draws: &[Vec<f64>],
    prevalence: &[f64],
) -> Result<VarianceDecomposition, SynthesisError> {
    let aggregate = aggregate_posterior(q_draws, prevalence)?;
    let total = sample_variance(&aggregate);
    let c = prevalence.len();
    let mut within = 0.0;
    let mut cluster_means = Vec::with_capacity(c);
    for j in 0..c {
        let col: Vec<f64> = q_draws.iter().map(|row| row[j]).collect();
        within += prevalence[j] * prevalence[j] * sample_variance(&col);
        cluster_means.push(mean(&col));
    }
    let weighted_mean: f64 = cluster_means.iter().zip(prevalence).map(|(m, p)| m * p).sum();
    let heterogeneity: f64 = cluster_means
        .iter()
        .zip(prevalence)
        .map(|(m, p)| p * (m - weighted_mean) * (m - weighted_mean))
        .sum();
    Ok(VarianceDecomposition { total, within, residual: total - within, heterogeneity })
}

/// Build the full quality summary from pooled per-cluster quality draws.
pub fn summarize_quality(
    cluster_ids: &[String],
    q_draws: &[Vec<f64>],
    prevalence: &[f64],
    level: f64,
    q_target: f64,
    max_ci_width: f64,
) -> Result<QualitySummary, SynthesisError> {
    if cluster_ids.len() != prevalence.len() {
        return Err(SynthesisError::DimensionMismatch {
            got: cluster_ids.len(),
            want: prevalence.len(),
        });
    }
    let aggregate_draws = aggregate_posterior(q_draws, prevalence)?;
    let aggregate = PosteriorSummary::from_draws(&aggregate_draws, level)?;
    let mut clusters = Vec::with_capacity(cluster_ids.len());
    for (j, id) in cluster_ids.iter().enumerate() {
        let col: Vec<f64> = q_draws.iter().map(|row| row[j]).collect();
        let quality = PosteriorSummary::from_draws(&col, level)?;
        let flagged = quality.mean < q_target && quality.ci_width() < max_ci_width;
        clusters.push(ClusterSummary {
            cluster_id: id.clone(),
            prevalence: prevalence[j],
            quality,
            flagged,
        });
    }
    let flagged_clusters = flag_clusters(&clusters, q_target, max_ci_width);
    let variance = variance_decomposition(q_draws, prevalence)?;
    Ok(QualitySummary { aggregate, clusters, flagged_clusters, variance, q_target, max_ci_width })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn aggregate_is_prevalence_weighted_per_draw() {
        let draws = vec![vec![0.4, 0.8]];
        let agg = aggregate_posterior(&draws, &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(agg[0], 0.6, epsilon = 1e-15);

        // Single cluster passes draws through.
        let draws = vec![vec![0.3], vec![0.7]];
        assert_eq!(aggregate_posterior(&draws, &[1.0]).unwrap(), vec![0.3, 0.7]);

        // Constant rows give a constant aggregate.
        let draws = vec![vec![0.2, 0.6]; 5];
        let agg = aggregate_posterior(&draws, &[0.25, 0.75]).unwrap();
        assert!(agg.iter().all(|&v| (v - 0.5).abs() < 1e-15));

        assert!(aggregate_posterior(&[vec![0.5]], &[0.6, 0.6]).is_err());
    }

    #[test]
    fn aggregate_commutes_with_permutation() {
        let draws = vec![vec![0.1, 0.5, 0.9], vec![0.2, 0.4, 0.6]];
        let pi = [0.2, 0.3, 0.5];
        let a = aggregate_posterior(&draws, &pi).unwrap();
        let permuted: Vec<Vec<f64>> =
            draws.iter().map(|r| vec![r[2], r[0], r[1]]).collect();
        let pi_p = [pi[2], pi[0], pi[1]];
        let b = aggregate_posterior(&permuted, &pi_p).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn credible_interval_on_uniform_grid() {
        let draws: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).collect();
        let (lo, hi) = credible_interval(&draws, 0.9).unwrap();
        assert!((lo - 0.05).abs() < 2e-3, "lo {lo}");
        assert!((hi - 0.95).abs() < 2e-3, "hi {hi}");

        let constant = vec![0.42; 200];
        let (lo, hi) = credible_interval(&constant, 0.95).unwrap();
        assert_eq!((lo, hi), (0.42, 0.42));

        assert!(credible_interval(&[0.1; 50], 0.95).is_err());
        assert!(credible_interval(&constant, 1.5).is_err());
    }

    #[test]
    fn credible_interval_matches_normal_quantiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (lo, hi) = credible_interval(&draws, 0.95).unwrap();
        assert!((lo + 1.96).abs() < 0.1, "lo {lo}");
        assert!((hi - 1.96).abs() < 0.1, "hi {hi}");
    }

    fn summary(mean: f64, lo: f64, hi: f64) -> ClusterSummary {
        ClusterSummary {
            cluster_id: format!("c-{mean}"),
            prevalence: 0.5,
            quality: PosteriorSummary {
                mean,
                sd: 0.0,
                median: mean,
                ci_low: lo,
                ci_high: hi,
                level: 0.95,
            },
            flagged: false,
        }
    }

    #[test]
    fn flags_require_low_mean_and_narrow_interval() {
        let clusters =
            vec![summary(0.6, 0.57, 0.63), summary(0.9, 0.88, 0.92), summary(0.6, 0.45, 0.75)];
        let flagged = flag_clusters(&clusters, 0.7, 0.1);
        assert_eq!(flagged, vec!["c-0.6".to_string()]);
    }

    #[test]
    fn flagging_is_monotone_in_target() {
        let clusters = vec![
            summary(0.5, 0.48, 0.52),
            summary(0.65, 0.62, 0.68),
            summary(0.72, 0.70, 0.74),
        ];
        let mut last = 0;
        for target in [0.4, 0.6, 0.7, 0.8, 0.95] {
            let count = flag_clusters(&clusters, target, 0.1).len();
            assert!(count >= last, "raising the target must never unflag");
            last = count;
        }
    }

    #[test]
    fn decomposition_sums_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws: Vec<Vec<f64>> =
            (0..500).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let pi = [0.2, 0.3, 0.5];
        let d = variance_decomposition(&draws, &pi).unwrap();
        assert_abs_diff_eq!(d.within + d.residual, d.total, epsilon = 1e-12);
    }

    #[test]
    fn independent_clusters_have_negligible_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = 20_000;
        let draws: Vec<Vec<f64>> = (0..s)
            .map(|_| {
                (0..2)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        0.5 + 0.1 * z
                    })
                    .collect()
            })
            .collect();
        let d = variance_decomposition(&draws, &[0.5, 0.5]).unwrap();
        // Residual is a covariance estimate with MC standard error about
        // 2*pi1*pi2*var/sqrt(S).
        let se = 2.0 * 0.25 * 0.01 / (s as f64).sqrt();
        assert!(d.residual.abs() < 5.0 * se, "residual {} vs se {se}", d.residual);
    }

    #[test]
    fn perfectly_correlated_clusters_have_positive_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws: Vec<Vec<f64>> = (0..5000)
            .map(|_| {
                let z: f64 = 0.5 + 0.1 * rng.random::<f64>();
                vec![z, z]
            })
            .collect();
        let d = variance_decomposition(&draws, &[0.5, 0.5]).unwrap();
        // For two identical draws with equal weights: total = var,
        // within = 0.5 var, residual = 2*pi1*pi2*var = 0.5 var > 0.
        assert!(d.residual > 0.0);
        assert_abs_diff_eq!(d.residual, d.within, epsilon = 1e-12);
    }

    #[test]
    fn aggregate_draws_stay_within_cluster_envelope() {
        let draws = vec![vec![0.2, 0.9], vec![0.4, 0.5]];
        let agg = aggregate_posterior(&draws, &[0.3, 0.7]).unwrap();
        for (row, a) in draws.iter().zip(&agg) {
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo <= *a && *a <= hi);
        }
    }
}

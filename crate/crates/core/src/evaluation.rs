//! Model evaluation: PSIS-LOO cross-validation over per-cluster joint
//! likelihoods, model comparison with stacking or pseudo-BMA weights, and
//! posterior predictive checks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math::{log_sum_exp, mean, quantile, sample_variance};
use crate::models::ModelInstance;
use crate::nuts::PosteriorDraws;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("need at least {need} draws, got {got}")]
    TooFewDraws { need: usize, got: usize },
    #[error("need at least 2 clusters, got {0}")]
    TooFewClusters(usize),
    #[error("non-finite log-likelihood at draw {draw}, cluster {cluster}")]
    NonFiniteLoglik { draw: usize, cluster: usize },
    #[error("models disagree on cluster count: {0} vs {1}")]
    ClusterCountMismatch(usize, usize),
    #[error("need at least 2 models to compare, got {0}")]
    TooFewModels(usize),
}

/// Pareto-k threshold above which an importance fit is considered unreliable.
pub const PARETO_K_WARN: f64 = 0.7;

/// PSIS-LOO result for one model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LooResult {
    pub elpd_loo: f64,
    pub se_elpd: f64,
    pub p_loo: f64,
    /// Per-cluster leave-one-out expected log predictive density.
    pub pointwise_elpd: Vec<f64>,
    /// Per-cluster generalized-Pareto shape diagnostics.
    pub pareto_k: Vec<f64>,
    pub n_draws: usize,
}

impl LooResult {
    pub fn cluster_count(&self) -> usize {
        self.pointwise_elpd.len()
    }

    /// Indices of clusters whose importance fit is unreliable (k > 0.7).
    pub fn high_k_clusters(&self) -> Vec<usize> {
        self.pareto_k
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > PARETO_K_WARN)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Pareto-smoothed importance-sampling LOO over a pointwise log-likelihood
/// matrix shaped `[draw][cluster]`.
pub fn psis_loo(loglik: &[Vec<f64>]) -> Result<LooResult, EvalError> {
    let s = loglik.len();
    if s < 100 {
        return Err(EvalError::TooFewDraws { need: 100, got: s });
    }
    let c = loglik[0].len();
    if c < 2 {
        return Err(EvalError::TooFewClusters(c));
    }
    for (d, row) in loglik.iter().enumerate() {
        debug_assert_eq!(row.len(), c);
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(EvalError::NonFiniteLoglik { draw: d, cluster: j });
        }
    }

    let mut pointwise = Vec::with_capacity(c);
    let mut pareto_k = Vec::with_capacity(c);
    for cluster in 0..c {
        let ll: Vec<f64> = loglik.iter().map(|row| row[cluster]).collect();
        // Importance ratios 1/p(y_c | theta) in log space.
        let log_ratios: Vec<f64> = ll.iter().map(|v| -v).collect();
        let (log_weights, khat) = pareto_smooth(&log_ratios);
        let num: Vec<f64> = log_weights.iter().zip(&ll).map(|(w, l)| w + l).collect();
        let elpd = log_sum_exp(&num) - log_sum_exp(&log_weights);
        pointwise.push(elpd);
        pareto_k.push(khat);
    }

    let lpd: Vec<f64> = (0..c)
        .map(|cluster| {
            let ll: Vec<f64> = loglik.iter().map(|row| row[cluster]).collect();
            log_sum_exp(&ll) - (s as f64).ln()
        })
        .collect();
    let p_loo = lpd.iter().zip(&pointwise).map(|(l, e)| l - e).sum();
    let elpd_loo = pointwise.iter().sum();
    let se_elpd = (c as f64 * sample_variance(&pointwise)).sqrt();
    Ok(LooResult { elpd_loo, se_elpd, p_loo, pointwise_elpd: pointwise, pareto_k, n_draws: s })
}

/// Smooth the upper tail of the importance ratios with a generalized-Pareto
/// fit; returns stabilized log-weights (shifted by the raw maximum) and the
/// fitted shape.
fn pareto_smooth(log_ratios: &[f64]) -> (Vec<f64>, f64) {
    let s = log_ratios.len();
    let max_lr = log_ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = log_ratios.iter().map(|v| v - max_lr).collect();

    let tail_len = (0.2 * s as f64).min(3.0 * (s as f64).sqrt()).ceil() as usize;
    if tail_len < 5 || tail_len >= s {
        return (shifted, -99.0);
    }
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| shifted[a].partial_cmp(&shifted[b]).expect("finite ratios"));
    let tail_start = s - tail_len;
    let cutoff = shifted[order[tail_start - 1]].exp();
    let exceedances: Vec<f64> =
        (0..tail_len).map(|j| shifted[order[tail_start + j]].exp() - cutoff).collect();
    if exceedances.last().copied().unwrap_or(0.0) <= 1e-290 {
        // Flat tail: nothing to smooth, shape is effectively minus infinity.
        return (shifted, -99.0);
    }
    let (khat, sigma) = gpd_fit(&exceedances);
    let mut smoothed = shifted;
    if sigma > 0.0 && khat.is_finite() {
        for j in 0..tail_len {
            let p = (j as f64 + 0.5) / tail_len as f64;
            let q = cutoff + gpd_quantile(p, khat, sigma);
            // Truncate at the raw maximum (1.0 in the shifted scale).
            smoothed[order[tail_start + j]] = q.min(1.0).max(1e-300).ln();
        }
    }
    (smoothed, khat.clamp(-99.0, 99.0))
}

/// Quantile-anchored profile-likelihood fit of the generalized Pareto shape
/// and scale to sorted exceedances, with the usual weak prior pulling the
/// shape toward 1/2.
fn gpd_fit(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    debug_assert!(n >= 5);
    let n_f = n as f64;
    let quart = x[(n_f / 4.0 + 0.5).floor() as usize - 1].max(1e-300);
    let x_max = x[n - 1];
    let grid = 30 + (n_f.sqrt().floor() as usize);
    let mut thetas = Vec::with_capacity(grid);
    let mut logliks = Vec::with_capacity(grid);
    for j in 1..=grid {
        let theta =
            1.0 / x_max + (1.0 - (grid as f64 / (j as f64 - 0.5)).sqrt()) / (3.0 * quart);
        let k = mean(&x.iter().map(|&v| (-theta * v).ln_1p()).collect::<Vec<_>>());
        let ll = if k == 0.0 || !(-theta / k).is_finite() || -theta / k <= 0.0 {
            f64::NEG_INFINITY
        } else {
            n_f * ((-theta / k).ln() - k - 1.0)
        };
        thetas.push(theta);
        logliks.push(ll);
    }
    let norm = log_sum_exp(&logliks);
    let theta_hat: f64 = thetas
        .iter()
        .zip(&logliks)
        .map(|(t, l)| t * (l - norm).exp())
        .sum();
    let k = mean(&x.iter().map(|&v| (-theta_hat * v).ln_1p()).collect::<Vec<_>>());
    let sigma = -k / theta_hat;
    // Weakly informative shape prior (shrinks k toward 0.5).
    let k = (k * n_f + 5.0) / (n_f + 10.0);
    (k, sigma)
}

fn gpd_quantile(p: f64, k: f64, sigma: f64) -> f64 {
    // ln(1 - p) via ln_1p keeps precision near p = 0.
    let log1m_p = (-p).ln_1p();
    if k.abs() < 1e-12 {
        -sigma * log1m_p
    } else {
        sigma * ((-k) * log1m_p).exp_m1() / k
    }
}

/// How comparison weights are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Maximize the pooled leave-one-out predictive density over the simplex.
    Stacking,
    /// Normalized exp(elpd): pseudo Bayesian model averaging.
    PseudoBma,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub model: String,
    pub elpd_loo: f64,
    pub se_elpd: f64,
    pub delta_elpd: f64,
    pub se_delta: f64,
    pub weight: f64,
    pub p_loo: f64,
    pub max_pareto_k: f64,
}

/// Ranked model comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub entries: Vec<ComparisonEntry>,
    pub mode: WeightMode,
    /// Models dropped from the panel (the pooled-likelihood variant sits on
    /// a different observation scale and is excluded unless forced in).
    pub excluded: Vec<String>,
}

/// Tag of the pooled-counts variant excluded from comparisons by default.
const GLOBAL_TAG: &str = "corrected_global";

/// Compare models fit to the same clusters. `include_global` forces the
/// pooled-likelihood variant into the panel.
pub fn compare(
    models: &[(String, LooResult)],
    mode: WeightMode,
    include_global: bool,
) -> Result<ComparisonTable, EvalError> {
    let mut excluded = Vec::new();
    let retained: Vec<&(String, LooResult)> = models
        .iter()
        .filter(|(tag, _)| {
            if tag == GLOBAL_TAG && !include_global {
                excluded.push(tag.clone());
                false
            } else {
                true
            }
        })
        .collect();
    if retained.len() < 2 {
        return Err(EvalError::TooFewModels(retained.len()));
    }
    let c = retained[0].1.cluster_count();
    for (_, loo) in &retained {
        if loo.cluster_count() != c {
            return Err(EvalError::ClusterCountMismatch(c, loo.cluster_count()));
        }
    }

    let weights = match mode {
        WeightMode::Stacking => {
            let pointwise: Vec<&[f64]> =
                retained.iter().map(|(_, l)| l.pointwise_elpd.as_slice()).collect();
            stacking_weights(&pointwise)
        }
        WeightMode::PseudoBma => {
            let elpds: Vec<f64> = retained.iter().map(|(_, l)| l.elpd_loo).collect();
            let norm = log_sum_exp(&elpds);
            elpds.iter().map(|e| (e - norm).exp()).collect()
        }
    };

    let best = retained
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.elpd_loo.partial_cmp(&b.1 .1.elpd_loo).expect("finite elpd"))
        .map(|(i, _)| i)
        .expect("nonempty");
    let best_pointwise = retained[best].1.pointwise_elpd.clone();

    let mut entries: Vec<ComparisonEntry> = retained
        .iter()
        .enumerate()
        .map(|(i, (tag, loo))| {
            let delta = retained[best].1.elpd_loo - loo.elpd_loo;
            let diffs: Vec<f64> = loo
                .pointwise_elpd
                .iter()
                .zip(&best_pointwise)
                .map(|(a, b)| b - a)
                .collect();
            let se_delta =
                if i == best { 0.0 } else { (c as f64 * sample_variance(&diffs)).sqrt() };
            ComparisonEntry {
                model: tag.clone(),
                elpd_loo: loo.elpd_loo,
                se_elpd: loo.se_elpd,
                delta_elpd: delta,
                se_delta,
                weight: weights[i],
                p_loo: loo.p_loo,
                max_pareto_k: loo
                    .pareto_k
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    entries.sort_by(|a, b| b.elpd_loo.partial_cmp(&a.elpd_loo).expect("finite elpd"));
    Ok(ComparisonTable { entries, mode, excluded })
}

/// Stacking weights: maximize Σ_c log Σ_k w_k exp(elpd_{k,c}) over the
/// simplex. The objective is a mixture log-likelihood in the weights, so EM
/// updates converge to the optimum.
pub fn stacking_weights(pointwise: &[&[f64]]) -> Vec<f64> {
    let k = pointwise.len();
    let c = pointwise[0].len();
    // Per-cluster shift for numerical stability (does not move the optimum).
    let mut p = vec![vec![0.0; k]; c];
    for (j, row) in p.iter_mut().enumerate() {
        let col_max = pointwise.iter().map(|m| m[j]).fold(f64::NEG_INFINITY, f64::max);
        for (i, item) in row.iter_mut().enumerate() {
            *item = (pointwise[i][j] - col_max).exp();
        }
    }
    let mut w = vec![1.0 / k as f64; k];
    for _ in 0..5000 {
        let mut next = vec![0.0; k];
        for row in &p {
            let denom: f64 = row.iter().zip(&w).map(|(pi, wi)| pi * wi).sum();
            for i in 0..k {
                next[i] += w[i] * row[i] / denom;
            }
        }
        for item in &mut next {
            *item /= c as f64;
        }
        let change = next
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w = next;
        if change < 1e-13 {
            break;
        }
    }
    w
}

/// Posterior predictive check result for one cluster.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterPpc {
    pub cluster_id: String,
    pub observed_m: u64,
    pub observed_y: u64,
    pub m_interval: (f64, f64),
    pub y_interval: (f64, f64),
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpcResult {
    pub clusters: Vec<ClusterPpc>,
    /// Fraction of clusters whose observed counts fall inside the central
    /// predictive intervals.
    pub coverage: f64,
    pub level: f64,
}

/// Posterior predictive check: replicate (m*, y*) per posterior draw and ask
/// whether each cluster's observed counts fall inside the central predictive
/// interval. Clusters with no observed feedback pass the y-check vacuously.
pub fn ppc_check<R: Rng>(
    model: &ModelInstance,
    draws: &PosteriorDraws,
    level: f64,
    rng: &mut R,
) -> Result<PpcResult, EvalError> {
    let s = draws.total_draws();
    if s < 200 {
        return Err(EvalError::TooFewDraws { need: 200, got: s });
    }
    let c = model.cluster_count();
    let mut m_rep = vec![Vec::with_capacity(s); c];
    let mut y_rep = vec![Vec::with_capacity(s); c];
    for chain in 0..draws.chains {
        for draw in 0..draws.draws_per_chain {
            let row = draws.draw_row(chain, draw);
            for (j, (m, y)) in
                model.posterior_predictive_draw_constrained(row, rng).into_iter().enumerate()
            {
                m_rep[j].push(m as f64);
                y_rep[j].push(y as f64);
            }
        }
    }
    let tail = (1.0 - level) / 2.0;
    let mut clusters = Vec::with_capacity(c);
    let mut passed = 0usize;
    for (j, cl) in model.dataset().clusters().iter().enumerate() {
        let m_interval = (quantile(&m_rep[j], tail), quantile(&m_rep[j], 1.0 - tail));
        let y_interval = (quantile(&y_rep[j], tail), quantile(&y_rep[j], 1.0 - tail));
        let m_ok = m_interval.0 <= cl.m as f64 && cl.m as f64 <= m_interval.1;
        let y_ok = cl.m == 0 || (y_interval.0 <= cl.y as f64 && cl.y as f64 <= y_interval.1);
        let pass = m_ok && y_ok;
        passed += usize::from(pass);
        clusters.push(ClusterPpc {
            cluster_id: cl.cluster_id.clone(),
            observed_m: cl.m,
            observed_y: cl.y,
            m_interval,
            y_interval,
            pass,
        });
    }
    Ok(PpcResult { clusters, coverage: passed as f64 / c as f64, level })
}

/// Pointwise log-likelihood matrix `[draw][cluster]` for a fitted model.
pub fn pointwise_loglik_matrix(model: &ModelInstance, draws: &PosteriorDraws) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(draws.total_draws());
    for chain in 0..draws.chains {
        for draw in 0..draws.draws_per_chain {
            out.push(model.pointwise_joint_loglik_constrained(draws.draw_row(chain, draw)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn synthetic_loglik(draws: usize, clusters: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..draws)
            .map(|_| {
                (0..clusters)
                    .map(|j| -4.0 - j as f64 * 0.3 + 0.5 * (rng.random::<f64>() - 0.5))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn identical_matrices_give_identical_elpd() {
        let ll = synthetic_loglik(400, 5, 1);
        let a = psis_loo(&ll).unwrap();
        let b = psis_loo(&ll).unwrap();
        assert_eq!(a.elpd_loo, b.elpd_loo);
        assert_eq!(a.pareto_k, b.pareto_k);
        assert_eq!(a.pointwise_elpd.len(), 5);
        assert_eq!(a.pareto_k.len(), 5);
    }

    #[test]
    fn constant_loglik_has_no_effective_parameters() {
        let ll: Vec<Vec<f64>> = (0..500).map(|_| vec![-3.0, -2.0, -4.0]).collect();
        let loo = psis_loo(&ll).unwrap();
        assert!(loo.p_loo.abs() < 1e-9, "p_loo {}", loo.p_loo);
        assert_abs_diff_eq!(loo.elpd_loo, -9.0, epsilon = 1e-9);
        // No tail variance: shape pegged at its floor, nothing flagged.
        assert!(loo.high_k_clusters().is_empty());
    }

    #[test]
    fn psis_preconditions() {
        assert!(matches!(
            psis_loo(&synthetic_loglik(50, 3, 2)),
            Err(EvalError::TooFewDraws { .. })
        ));
        let one_cluster: Vec<Vec<f64>> = (0..200).map(|_| vec![-1.0]).collect();
        assert!(matches!(psis_loo(&one_cluster), Err(EvalError::TooFewClusters(1))));
        let mut bad = synthetic_loglik(200, 3, 3);
        bad[10][1] = f64::NAN;
        assert!(matches!(psis_loo(&bad), Err(EvalError::NonFiniteLoglik { .. })));
    }

    #[test]
    fn p_loo_positive_for_noisy_likelihoods() {
        let loo = psis_loo(&synthetic_loglik(2000, 8, 4)).unwrap();
        assert!(loo.p_loo > -0.5, "p_loo {}", loo.p_loo);
        // elpd can never beat the in-sample lpd.
        let lpd_sum: f64 = loo.pointwise_elpd.iter().sum::<f64>() + loo.p_loo;
        assert!(loo.elpd_loo <= lpd_sum + 1e-9);
    }

    fn loo_from_pointwise(pointwise: Vec<f64>) -> LooResult {
        let c = pointwise.len();
        LooResult {
            elpd_loo: pointwise.iter().sum(),
            se_elpd: (c as f64 * sample_variance(&pointwise)).sqrt(),
            p_loo: 1.0,
            pointwise_elpd: pointwise,
            pareto_k: vec![0.1; c],
            n_draws: 1000,
        }
    }

    #[test]
    fn identical_models_split_weight_evenly() {
        let a = loo_from_pointwise(vec![-10.0, -12.0, -9.0]);
        let b = loo_from_pointwise(vec![-10.0, -12.0, -9.0]);
        for mode in [WeightMode::Stacking, WeightMode::PseudoBma] {
            let table =
                compare(&[("m1".into(), a.clone()), ("m2".into(), b.clone())], mode, false)
                    .unwrap();
            assert_abs_diff_eq!(table.entries[0].weight, 0.5, epsilon = 1e-6);
            assert_abs_diff_eq!(table.entries[1].weight, 0.5, epsilon = 1e-6);
        }
    }

    #[test]
    fn dominant_model_takes_all_stacking_weight() {
        let strong = loo_from_pointwise(vec![-5.0, -5.0, -5.0, -5.0]);
        let weak = loo_from_pointwise(vec![-8.0, -8.0, -8.0, -8.0]);
        let table = compare(
            &[("weak".into(), weak), ("strong".into(), strong)],
            WeightMode::Stacking,
            false,
        )
        .unwrap();
        assert_eq!(table.entries[0].model, "strong");
        assert!(table.entries[0].weight > 0.999, "weight {}", table.entries[0].weight);
        assert_eq!(table.entries[0].delta_elpd, 0.0);
        assert!(table.entries[1].delta_elpd > 0.0);
    }

    #[test]
    fn pseudo_bma_collapses_on_large_gaps() {
        let best = loo_from_pointwise(vec![-33.0; 4]);
        let worse_total = -33.0 * 4.0 - 87.32;
        let worse = loo_from_pointwise(vec![worse_total / 4.0; 4]);
        let table = compare(
            &[("best".into(), best), ("worse".into(), worse)],
            WeightMode::PseudoBma,
            false,
        )
        .unwrap();
        assert!(table.entries[0].weight >= 1.0 - 1e-12);
        assert!(table.entries[1].weight < 1e-30);
        assert_abs_diff_eq!(table.entries[1].delta_elpd, 87.32, epsilon = 1e-9);
    }

    #[test]
    fn stacking_is_permutation_equivariant() {
        let a = loo_from_pointwise(vec![-5.0, -9.0, -6.0]);
        let b = loo_from_pointwise(vec![-7.0, -6.0, -5.5]);
        let t1 = compare(
            &[("a".into(), a.clone()), ("b".into(), b.clone())],
            WeightMode::Stacking,
            false,
        )
        .unwrap();
        let t2 = compare(&[("b".into(), b), ("a".into(), a)], WeightMode::Stacking, false)
            .unwrap();
        let w1: std::collections::BTreeMap<_, _> =
            t1.entries.iter().map(|e| (e.model.clone(), e.weight)).collect();
        let w2: std::collections::BTreeMap<_, _> =
            t2.entries.iter().map(|e| (e.model.clone(), e.weight)).collect();
        for (k, v) in &w1 {
            assert_abs_diff_eq!(v, w2.get(k).unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn global_variant_excluded_by_default() {
        let a = loo_from_pointwise(vec![-5.0, -6.0]);
        let b = loo_from_pointwise(vec![-5.5, -6.5]);
        let g = loo_from_pointwise(vec![-4.0, -5.0]);
        let models = vec![
            ("basic".to_string(), a),
            ("hier_informed".to_string(), b),
            ("corrected_global".to_string(), g),
        ];
        let table = compare(&models, WeightMode::Stacking, false).unwrap();
        assert_eq!(table.entries.len(), 2);
        assert_eq!(table.excluded, vec!["corrected_global".to_string()]);
        let with_global = compare(&models, WeightMode::Stacking, true).unwrap();
        assert_eq!(with_global.entries.len(), 3);
        assert!(with_global.excluded.is_empty());
    }

    #[test]
    fn cluster_mismatch_is_rejected() {
        let a = loo_from_pointwise(vec![-5.0, -6.0]);
        let b = loo_from_pointwise(vec![-5.0, -6.0, -7.0]);
        assert!(matches!(
            compare(&[("a".into(), a), ("b".into(), b)], WeightMode::Stacking, false),
            Err(EvalError::ClusterCountMismatch(2, 3))
        ));
    }

    #[test]
    fn ppc_vacuous_pass_for_silent_cluster() {
        use crate::models::{build_model, ModelVariant, PriorConfig};
        use crate::nuts::DrawStats;
        use crate::types::{validate_dataset, ClusterStats};

        let ds = validate_dataset(vec![
            ClusterStats::new("live", 200, 20, 10),
            ClusterStats::new("silent", 150, 0, 0),
        ])
        .unwrap();
        let model = build_model(ModelVariant::Basic, ds, PriorConfig::default());
        // Hand-built draws around the data-consistent rates.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s_draws = 300usize;
        let mut values = Vec::new();
        for _ in 0..s_draws {
            let mut jitter = |v: f64| (v + 0.01 * (rng.random::<f64>() - 0.5)).clamp(0.001, 0.999);
            values.extend([
                2.0,
                2.0,
                2.0,
                2.0,
                jitter(0.1),
                jitter(0.02),
                jitter(0.5),
                jitter(0.5),
            ]);
        }
        let draws = PosteriorDraws::new(
            model.param_names().to_vec(),
            1,
            s_draws,
            values,
            vec![
                DrawStats { depth: 1, n_leapfrog: 1, divergent: false, accept: 1.0, energy: 0.0 };
                s_draws
            ],
        );
        let result = ppc_check(&model, &draws, 0.95, &mut rng).unwrap();
        let silent = result.clusters.iter().find(|c| c.cluster_id == "silent").unwrap();
        assert_eq!(silent.observed_m, 0);
        assert!(silent.pass || silent.m_interval.0 > 0.0);
    }
}

//! Ground-truth simulator for selection-biased binary feedback.
//!
//! Populations carry a known per-cluster positive rate `q*`; feedback arrival
//! is biased by a per-cluster baseline response probability `s0` and a
//! dissatisfaction amplifier `kappa`: satisfied interactions respond with
//! probability `s0`, dissatisfied ones with probability `min(1, s0 * kappa)`.
//! Feedback polarity itself stays reliable, so the bias lives entirely in
//! who responds.
//!
//! Simulation is count-level (three binomial draws per cluster), which is
//! distributionally identical to per-interaction Bernoulli draws and much
//! faster. An interaction-level path exists for the interaction-CSV export.

use rand::Rng;
use rand_distr::{Beta as BetaDist, Binomial, Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::types::{validate_dataset, ClusterStats, Dataset};

/// Errors from simulator construction.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("kappa_max must be >= 1, got {0}")]
    KappaMaxBelowOne(f64),
    #[error("invalid size range ({0}, {1}): need 1 <= min <= max")]
    BadSizeRange(u64, u64),
    #[error("quality prior shapes must be positive, got ({0}, {1})")]
    BadQualityPrior(f64, f64),
    #[error("need at least one cluster")]
    NoClusters,
    #[error("bias params cover {got} clusters, population has {want}")]
    ClusterMismatch { got: usize, want: usize },
}

/// Support of the baseline response probability `s0`.
pub const S0_RANGE: (f64, f64) = (0.02, 0.12);

/// Per-cluster selection-bias parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasParams {
    /// Baseline response probability per cluster, in `S0_RANGE`.
    pub s0: Vec<f64>,
    /// Dissatisfaction amplifier per cluster, `>= 1`.
    pub kappa: Vec<f64>,
    /// Realized negative-response probability `min(1, s0 * kappa)` per
    /// cluster. Recorded so oracle checks can use the clipped value actually
    /// applied in simulation.
    pub effective_r_neg: Vec<f64>,
}

impl BiasParams {
    pub fn new(s0: Vec<f64>, kappa: Vec<f64>) -> Self {
        let effective_r_neg =
            s0.iter().zip(&kappa).map(|(&s, &k)| (s * k).min(1.0)).collect();
        Self { s0, kappa, effective_r_neg }
    }

    pub fn len(&self) -> usize {
        self.s0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s0.is_empty()
    }
}

/// A synthetic population with known per-cluster quality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticPopulation {
    /// Interaction count per cluster.
    pub sizes: Vec<u64>,
    /// True positive rate per cluster.
    pub q_star: Vec<f64>,
    /// Prevalence-weighted true aggregate quality Σ (n_c/N) q*_c.
    pub aggregate_q_star: f64,
}

impl SyntheticPopulation {
    pub fn new(sizes: Vec<u64>, q_star: Vec<f64>) -> Self {
        let total: u64 = sizes.iter().sum();
        let aggregate_q_star = sizes
            .iter()
            .zip(&q_star)
            .map(|(&n, &q)| n as f64 / total as f64 * q)
            .sum();
        Self { sizes, q_star, aggregate_q_star }
    }

    pub fn cluster_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn total_interactions(&self) -> u64 {
        self.sizes.iter().sum()
    }
}

/// Draw per-cluster bias parameters: `s0 ~ Uniform(0.02, 0.12)` and
/// `log(kappa) ~ Uniform(0, log kappa_max)`.
pub fn draw_bias_params<R: Rng>(
    clusters: usize,
    kappa_max: f64,
    rng: &mut R,
) -> Result<BiasParams, SimError> {
    if clusters == 0 {
        return Err(SimError::NoClusters);
    }
    if !(kappa_max >= 1.0) {
        return Err(SimError::KappaMaxBelowOne(kappa_max));
    }
    let s0_dist = Uniform::new(S0_RANGE.0, S0_RANGE.1).expect("static range");
    let log_kappa_max = kappa_max.ln();
    let mut s0 = Vec::with_capacity(clusters);
    let mut kappa = Vec::with_capacity(clusters);
    for _ in 0..clusters {
        s0.push(s0_dist.sample(rng));
        // Degenerate LogUniform(1, 1) yields exactly 1.
        let k = if log_kappa_max == 0.0 {
            1.0
        } else {
            (rng.random::<f64>() * log_kappa_max).exp()
        };
        kappa.push(k);
    }
    Ok(BiasParams::new(s0, kappa))
}

/// Build a synthetic population: cluster sizes uniform in `size_range`
/// (inclusive) and per-cluster quality `q* ~ Beta(alpha, beta)`.
pub fn make_population<R: Rng>(
    clusters: usize,
    size_range: (u64, u64),
    quality_prior: (f64, f64),
    rng: &mut R,
) -> Result<SyntheticPopulation, SimError> {
    if clusters == 0 {
        return Err(SimError::NoClusters);
    }
    let (lo, hi) = size_range;
    if lo < 1 || lo > hi {
        return Err(SimError::BadSizeRange(lo, hi));
    }
    let (alpha, beta) = quality_prior;
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(SimError::BadQualityPrior(alpha, beta));
    }
    let size_dist = Uniform::new_inclusive(lo, hi).expect("validated range");
    let q_dist = BetaDist::new(alpha, beta).expect("validated shapes");
    let mut sizes = Vec::with_capacity(clusters);
    let mut q_star = Vec::with_capacity(clusters);
    for _ in 0..clusters {
        sizes.push(size_dist.sample(rng));
        q_star.push(q_dist.sample(rng));
    }
    Ok(SyntheticPopulation::new(sizes, q_star))
}

/// Outcome of one simulated feedback pass.
#[derive(Debug, Clone)]
pub struct SimulatedFeedback {
    pub dataset: Dataset,
    /// Latent per-cluster positive counts (the realized number of satisfied
    /// interactions), retained so tests can condition on the realized
    /// population.
    pub latent_positives: Vec<u64>,
}

/// Realize the latent per-cluster positive counts `k ~ Binomial(n, q*)`.
pub fn draw_latent_positives<R: Rng>(pop: &SyntheticPopulation, rng: &mut R) -> Vec<u64> {
    pop.sizes.iter().zip(&pop.q_star).map(|(&n, &q)| draw_binomial(n, q, rng)).collect()
}

/// Simulate feedback conditional on realized latent positives: positive
/// feedback `y ~ Binomial(k, s0)`, negative feedback
/// `~ Binomial(n − k, min(1, s0·kappa))`, `m = y + negatives`. Used by
/// replicate studies that hold the population fixed and redraw only the
/// selection mechanism.
pub fn simulate_feedback_conditional<R: Rng>(
    pop: &SyntheticPopulation,
    latent_positives: &[u64],
    bias: &BiasParams,
    rng: &mut R,
) -> Result<Dataset, SimError> {
    if bias.len() != pop.cluster_count() || latent_positives.len() != pop.cluster_count() {
        return Err(SimError::ClusterMismatch { got: bias.len(), want: pop.cluster_count() });
    }
    let mut stats = Vec::with_capacity(pop.cluster_count());
    for c in 0..pop.cluster_count() {
        let n = pop.sizes[c];
        let k = latent_positives[c];
        debug_assert!(k <= n);
        let y = draw_binomial(k, bias.s0[c], rng);
        let negatives = draw_binomial(n - k, bias.effective_r_neg[c], rng);
        stats.push(ClusterStats::new(format!("c{c:02}"), n, y + negatives, y));
    }
    Ok(validate_dataset(stats).expect("simulated counts satisfy invariants"))
}

/// Simulate selection-biased feedback over a population.
///
/// Per cluster: latent positives `k ~ Binomial(n, q*)`, positive feedback
/// `y ~ Binomial(k, s0)`, negative feedback `~ Binomial(n − k, min(1, s0·kappa))`,
/// `m = y + negatives`. Polarity equals the latent label.
pub fn simulate_feedback<R: Rng>(
    pop: &SyntheticPopulation,
    bias: &BiasParams,
    rng: &mut R,
) -> Result<SimulatedFeedback, SimError> {
    if bias.len() != pop.cluster_count() {
        return Err(SimError::ClusterMismatch { got: bias.len(), want: pop.cluster_count() });
    }
    let latent = draw_latent_positives(pop, rng);
    let dataset = simulate_feedback_conditional(pop, &latent, bias, rng)?;
    Ok(SimulatedFeedback { dataset, latent_positives: latent })
}

/// Interaction-level simulation; distributionally identical to
/// [`simulate_feedback`] but emits one record per interaction for the
/// interaction-CSV export.
pub fn simulate_interactions<R: Rng>(
    pop: &SyntheticPopulation,
    bias: &BiasParams,
    rng: &mut R,
) -> Result<Vec<crate::types::InteractionRecord>, SimError> {
    if bias.len() != pop.cluster_count() {
        return Err(SimError::ClusterMismatch { got: bias.len(), want: pop.cluster_count() });
    }
    let mut records = Vec::with_capacity(pop.total_interactions() as usize);
    let mut serial = 0u64;
    for c in 0..pop.cluster_count() {
        for _ in 0..pop.sizes[c] {
            let label = rng.random::<f64>() < pop.q_star[c];
            let respond_p = if label { bias.s0[c] } else { bias.effective_r_neg[c] };
            let feedback = rng.random::<f64>() < respond_p;
            records.push(crate::types::InteractionRecord {
                interaction_id: format!("i{serial:07}"),
                cluster_id: format!("c{c:02}"),
                feedback,
                positive: feedback && label,
                true_label: Some(label),
            });
            serial += 1;
        }
    }
    Ok(records)
}

fn draw_binomial<R: Rng>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// Expected feedback volume and positive share for one cluster under
/// class-conditional response rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedCounts {
    /// Expected feedback count n·(q·r_pos + (1−q)·r_neg).
    pub expected_feedback: f64,
    /// Expected positive share q·r_pos / (q·r_pos + (1−q)·r_neg);
    /// `None` when the denominator is zero.
    pub positive_share: Option<f64>,
}

/// Closed-form expectations of the observed counts given true quality `q` and
/// the class-conditional response rates.
pub fn expected_counts(q: f64, r_pos: f64, r_neg: f64, n: u64) -> ExpectedCounts {
    debug_assert!((0.0..=1.0).contains(&q));
    debug_assert!((0.0..=1.0).contains(&r_pos));
    debug_assert!((0.0..=1.0).contains(&r_neg));
    let response_rate = q * r_pos + (1.0 - q) * r_neg;
    let positive_share = if response_rate > 0.0 {
        Some(q * r_pos / response_rate)
    } else {
        None
    };
    ExpectedCounts { expected_feedback: n as f64 * response_rate, positive_share }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn bias_params_stay_in_range() {
        let bias = draw_bias_params(200, 10.0, &mut rng(1)).unwrap();
        for (&s0, &k) in bias.s0.iter().zip(&bias.kappa) {
            assert!((S0_RANGE.0..=S0_RANGE.1).contains(&s0));
            assert!((1.0..=10.0).contains(&k));
        }
    }

    #[test]
    fn kappa_max_one_is_degenerate() {
        let bias = draw_bias_params(50, 1.0, &mut rng(2)).unwrap();
        assert!(bias.kappa.iter().all(|&k| k == 1.0));
        assert!(draw_bias_params(3, 0.5, &mut rng(2)).is_err());
    }

    #[test]
    fn log_kappa_mean_matches_log_uniform() {
        // log(kappa) ~ Uniform(0, log 10): mean log(10)/2, var (log 10)^2/12.
        let draws = 100_000;
        let bias = draw_bias_params(draws, 10.0, &mut rng(3)).unwrap();
        let logs: Vec<f64> = bias.kappa.iter().map(|k| k.ln()).collect();
        let expected = 10f64.ln() / 2.0;
        let sd = (10f64.ln().powi(2) / 12.0).sqrt();
        let se = sd / (draws as f64).sqrt();
        let m = crate::math::mean(&logs);
        assert!((m - expected).abs() < 3.0 * se, "mean {m} vs {expected} (se {se})");
    }

    #[test]
    fn population_respects_specs() {
        let pop = make_population(30, (5, 5), (1.0, 1.0), &mut rng(4)).unwrap();
        assert!(pop.sizes.iter().all(|&n| n == 5));
        assert!(pop.q_star.iter().all(|&q| (0.0..=1.0).contains(&q)));

        let single = make_population(1, (10, 20), (1.0, 1.0), &mut rng(5)).unwrap();
        assert_abs_diff_eq!(single.aggregate_q_star, single.q_star[0], epsilon = 1e-15);

        assert!(make_population(3, (5, 2), (1.0, 1.0), &mut rng(6)).is_err());
        assert!(make_population(3, (1, 2), (0.0, 1.0), &mut rng(6)).is_err());
    }

    #[test]
    fn aggregate_quality_is_prevalence_weighted() {
        let pop = SyntheticPopulation::new(vec![100, 300], vec![0.4, 0.8]);
        assert_abs_diff_eq!(pop.aggregate_q_star, 0.25 * 0.4 + 0.75 * 0.8, epsilon = 1e-12);
    }

    #[test]
    fn zero_s0_yields_no_feedback() {
        let pop = make_population(4, (100, 200), (2.0, 2.0), &mut rng(7)).unwrap();
        let bias = BiasParams::new(vec![0.0; 4], vec![3.0; 4]);
        let sim = simulate_feedback(&pop, &bias, &mut rng(8)).unwrap();
        assert!(sim.dataset.clusters().iter().all(|c| c.m == 0 && c.y == 0));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let pop = make_population(6, (100, 500), (6.25, 3.75), &mut rng(9)).unwrap();
        let bias = draw_bias_params(6, 10.0, &mut rng(10)).unwrap();
        let a = simulate_feedback(&pop, &bias, &mut rng(11)).unwrap();
        let b = simulate_feedback(&pop, &bias, &mut rng(11)).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.latent_positives, b.latent_positives);
        let c = simulate_feedback(&pop, &bias, &mut rng(12)).unwrap();
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn kappa_one_recovers_baseline_rate() {
        // With kappa = 1 the response rate is s0 for both classes.
        let n = 1_000_000;
        let pop = SyntheticPopulation::new(vec![n], vec![0.6]);
        let bias = BiasParams::new(vec![0.08], vec![1.0]);
        let sim = simulate_feedback(&pop, &bias, &mut rng(13)).unwrap();
        let m = sim.dataset.clusters()[0].m as f64;
        let se = (0.08 * 0.92 / n as f64).sqrt();
        assert!((m / n as f64 - 0.08).abs() < 3.0 * se);
    }

    #[test]
    fn positive_share_matches_expectation_at_scale() {
        // q = 0.5, r_pos = 0.1, r_neg = 0.2 -> share 1/3.
        let n = 1_000_000;
        let pop = SyntheticPopulation::new(vec![n], vec![0.5]);
        let bias = BiasParams::new(vec![0.1], vec![2.0]);
        let sim = simulate_feedback(&pop, &bias, &mut rng(14)).unwrap();
        let c = &sim.dataset.clusters()[0];
        let share = c.y as f64 / c.m as f64;
        assert!((share - 1.0 / 3.0).abs() < 0.005, "share {share}");
    }

    #[test]
    fn bernoulli_probability_is_clipped() {
        let bias = BiasParams::new(vec![0.12], vec![30.0]);
        assert_abs_diff_eq!(bias.effective_r_neg[0], 1.0, epsilon = 1e-15);
        let pop = SyntheticPopulation::new(vec![1000], vec![0.0]);
        let sim = simulate_feedback(&pop, &bias, &mut rng(15)).unwrap();
        // Every dissatisfied interaction responds at probability one.
        assert_eq!(sim.dataset.clusters()[0].m, 1000);
    }

    #[test]
    fn expected_counts_closed_form() {
        let e = expected_counts(0.5, 0.1, 0.2, 1000);
        assert_abs_diff_eq!(e.expected_feedback, 150.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.positive_share.unwrap(), 1.0 / 3.0, epsilon = 1e-12);

        // No sentiment bias: share recovers q.
        let e = expected_counts(0.37, 0.05, 0.05, 200);
        assert_abs_diff_eq!(e.expected_feedback, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.positive_share.unwrap(), 0.37, epsilon = 1e-12);

        // Boundary: all-positive population.
        let e = expected_counts(1.0, 0.08, 0.3, 500);
        assert_abs_diff_eq!(e.expected_feedback, 40.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.positive_share.unwrap(), 1.0, epsilon = 1e-12);

        // Degenerate channel: share undefined.
        assert_eq!(expected_counts(0.5, 0.0, 0.0, 10).positive_share, None);
    }

    #[test]
    fn interaction_level_path_aggregates_consistently() {
        let pop = make_population(3, (200, 400), (6.25, 3.75), &mut rng(16)).unwrap();
        let bias = draw_bias_params(3, 5.0, &mut rng(17)).unwrap();
        let records = simulate_interactions(&pop, &bias, &mut rng(18)).unwrap();
        let ds = crate::types::aggregate_from_interactions(&records).unwrap();
        assert_eq!(ds.len(), 3);
        for (c, &n) in ds.clusters().iter().zip(&pop.sizes) {
            assert_eq!(c.n, n);
            assert!(c.y <= c.m && c.m <= c.n);
        }
    }
}

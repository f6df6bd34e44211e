//! The five Bayesian model variants over per-cluster feedback counts, exposed
//! as differentiable unnormalized log-posteriors on unconstrained parameter
//! vectors.
//!
//! All variants share the same two-stage observation structure: a selection
//! stage `m_c ~ Binomial(n_c, s_c)` for feedback volume and a quality stage
//! `y_c ~ Binomial(m_c, p_c)` for positive share. They differ in how the
//! response rate `s_c` and positive share `p_c` are tied to the latent
//! quality `q_c`:
//!
//! * `Basic` — independent per-cluster `s_c` and `q_c` with learned
//!   beta hyperpriors; assumes no within-cluster sentiment bias.
//! * `Enhanced` — class-conditional response rates `r_pos`, `r_neg` shared
//!   globally: `s_c = q_c·r_pos + (1−q_c)·r_neg`.
//! * `HierSentiment` — per-cluster `r_pos_c`, `r_neg_c` partially pooled
//!   through beta priors with weak hyperpriors.
//! * `HierInformed` — per-cluster rates in log space with informative
//!   channel-side priors on `log r_pos_c` and the ratio `log κ_c`.
//! * `CorrectedGlobal` — a three-parameter model on the pooled counts.

mod eval;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::types::Dataset;

const LOGIT_BOUND_EPS: f64 = 1e-12;
/// Upper clip for rates derived from unconstrained log-rate parameters.
pub(crate) const RATE_CLIP: f64 = 1.0 - 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("parameter vector has length {got}, model dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite entry at parameter index {0}")]
    NonFinite(usize),
    #[error("constrained value {value} at index {index} violates its support")]
    OutOfSupport { index: usize, value: f64 },
    #[error("unknown model variant {0:?}; expected one of basic, enhanced, hier_sentiment, hier_informed, corrected_global")]
    UnknownVariant(String),
    #[error("dashboard positive rate must be > 0")]
    ZeroPositiveRate,
    #[error("dashboard rates invalid: rho_pos={0}, rho_neg={1}")]
    BadDashboardRates(f64, f64),
}

/// The closed set of model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    Basic,
    Enhanced,
    HierSentiment,
    HierInformed,
    CorrectedGlobal,
}

impl ModelVariant {
    pub fn all() -> [ModelVariant; 5] {
        [
            ModelVariant::Basic,
            ModelVariant::Enhanced,
            ModelVariant::HierSentiment,
            ModelVariant::HierInformed,
            ModelVariant::CorrectedGlobal,
        ]
    }

    pub fn tag(self) -> &'static str {
        match self {
            ModelVariant::Basic => "basic",
            ModelVariant::Enhanced => "enhanced",
            ModelVariant::HierSentiment => "hier_sentiment",
            ModelVariant::HierInformed => "hier_informed",
            ModelVariant::CorrectedGlobal => "corrected_global",
        }
    }

    /// Default NUTS acceptance target; the per-cluster sentiment models need
    /// smaller steps to handle their tail skew.
    pub fn default_target_accept(self) -> f64 {
        match self {
            ModelVariant::Basic | ModelVariant::Enhanced => 0.9,
            ModelVariant::CorrectedGlobal => 0.95,
            ModelVariant::HierSentiment | ModelVariant::HierInformed => 0.97,
        }
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "basic" => Ok(ModelVariant::Basic),
            "enhanced" => Ok(ModelVariant::Enhanced),
            "hier_sentiment" | "hierarchical_sentiment" => Ok(ModelVariant::HierSentiment),
            "hier_informed" | "hierarchical_informed" => Ok(ModelVariant::HierInformed),
            "corrected_global" | "global" => Ok(ModelVariant::CorrectedGlobal),
            other => Err(ModelError::UnknownVariant(other.to_string())),
        }
    }
}

/// Prior settings shared across variants.
///
/// `hs_precision_gamma` is (shape, rate); the informative centers are stored
/// in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorConfig {
    pub halfnormal_sigma: f64,
    pub informed_logrpos_center: f64,
    pub informed_logrpos_sigma: f64,
    pub informed_logkappa_center: f64,
    pub informed_logkappa_sigma: f64,
    pub hs_mu_beta: (f64, f64),
    pub hs_precision_gamma: (f64, f64),
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            halfnormal_sigma: 10.0,
            informed_logrpos_center: 0.07_f64.ln(),
            informed_logrpos_sigma: 0.5,
            informed_logkappa_center: 2.5_f64.ln(),
            informed_logkappa_sigma: 0.6,
            hs_mu_beta: (1.0, 10.0),
            hs_precision_gamma: (2.0, 0.1),
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("halfnormal_sigma", self.halfnormal_sigma),
            ("informed_logrpos_sigma", self.informed_logrpos_sigma),
            ("informed_logkappa_sigma", self.informed_logkappa_sigma),
            ("hs_mu_beta.0", self.hs_mu_beta.0),
            ("hs_mu_beta.1", self.hs_mu_beta.1),
            ("hs_precision_gamma.0", self.hs_precision_gamma.0),
            ("hs_precision_gamma.1", self.hs_precision_gamma.1),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(format!("prior setting {name} must be strictly positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Re-center the informative priors from dashboard marginals.
    pub fn with_dashboard(mut self, rho_pos: f64, rho_neg: f64) -> Result<Self, ModelError> {
        let (r_pos_center, kappa_center) = informed_priors_from_dashboard(rho_pos, rho_neg)?;
        self.informed_logrpos_center = r_pos_center.ln();
        self.informed_logkappa_center = kappa_center.ln();
        Ok(self)
    }
}

/// Translate observable dashboard marginals (thumbs-up rate, thumbs-down
/// rate per interaction) into prior centers for the informed model:
/// `r_pos ≈ 2·rho_pos` and `kappa ≈ rho_neg/rho_pos`.
pub fn informed_priors_from_dashboard(
    rho_pos: f64,
    rho_neg: f64,
) -> Result<(f64, f64), ModelError> {
    if rho_pos == 0.0 {
        return Err(ModelError::ZeroPositiveRate);
    }
    if !(rho_pos > 0.0) || !(rho_neg >= 0.0) || rho_pos + rho_neg > 1.0 {
        return Err(ModelError::BadDashboardRates(rho_pos, rho_neg));
    }
    Ok((2.0 * rho_pos, rho_neg / rho_pos))
}

/// Coordinate transform between constrained and unconstrained space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// Probability in (0,1) via logit/sigmoid.
    Logit,
    /// Positive parameter via log/exp.
    Log,
    /// Already unconstrained.
    Identity,
}

/// A named contiguous run of parameters sharing one transform.
#[derive(Debug, Clone)]
pub struct Block {
    pub name: &'static str,
    pub start: usize,
    pub len: usize,
    pub transform: Transform,
}

/// Parameter layout: named blocks over a flat vector.
#[derive(Debug, Clone)]
pub struct ParamLayout {
    blocks: Vec<Block>,
    names: Vec<String>,
    dim: usize,
}

impl ParamLayout {
    fn new(blocks: Vec<(&'static str, usize, Transform, Vec<String>)>) -> Self {
        let mut out_blocks = Vec::with_capacity(blocks.len());
        let mut names = Vec::new();
        let mut start = 0;
        for (name, len, transform, block_names) in blocks {
            debug_assert_eq!(block_names.len(), len);
            out_blocks.push(Block { name, start, len, transform });
            names.extend(block_names);
            start += len;
        }
        Self { blocks: out_blocks, names, dim: start }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Slice accessor for a named block.
    pub fn slice<'a>(&self, name: &str, values: &'a [f64]) -> Option<&'a [f64]> {
        self.block(name).map(|b| &values[b.start..b.start + b.len])
    }

    fn transform_of(&self, index: usize) -> Transform {
        for b in &self.blocks {
            if index < b.start + b.len {
                return b.transform;
            }
        }
        unreachable!("index {index} outside layout")
    }
}

/// How the Basic variant treats its beta hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum BasicHypers {
    /// (α_s, β_s, α_q, β_q) are free parameters under half-normal hyperpriors.
    Learned,
    /// Hyperparameters pinned to constants; the model becomes a plain
    /// conjugate beta-binomial per cluster. Used for calibration checks.
    Fixed { alpha_s: f64, beta_s: f64, alpha_q: f64, beta_q: f64 },
}

/// One model variant bound to a dataset, with a fixed parameter layout.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    variant: ModelVariant,
    dataset: Dataset,
    priors: PriorConfig,
    layout: ParamLayout,
    pub(crate) basic_hypers: BasicHypers,
}

/// Build a model instance over a validated dataset.
pub fn build_model(variant: ModelVariant, dataset: Dataset, priors: PriorConfig) -> ModelInstance {
    ModelInstance::new(variant, dataset, priors, BasicHypers::Learned)
}

impl ModelInstance {
    fn new(
        variant: ModelVariant,
        dataset: Dataset,
        priors: PriorConfig,
        basic_hypers: BasicHypers,
    ) -> Self {
        let ids: Vec<&str> = dataset.clusters().iter().map(|c| c.cluster_id.as_str()).collect();
        let per_cluster =
            |prefix: &str| ids.iter().map(|id| format!("{prefix}[{id}]")).collect::<Vec<_>>();
        let c = ids.len();
        let blocks = match (variant, basic_hypers) {
            (ModelVariant::Basic, BasicHypers::Learned) => vec![
                (
                    "hyper_s",
                    2,
                    Transform::Log,
                    vec!["alpha_s".to_string(), "beta_s".to_string()],
                ),
                (
                    "hyper_q",
                    2,
                    Transform::Log,
                    vec!["alpha_q".to_string(), "beta_q".to_string()],
                ),
                ("s", c, Transform::Logit, per_cluster("s")),
                ("q", c, Transform::Logit, per_cluster("q")),
            ],
            (ModelVariant::Basic, BasicHypers::Fixed { .. }) => vec![
                ("s", c, Transform::Logit, per_cluster("s")),
                ("q", c, Transform::Logit, per_cluster("q")),
            ],
            (ModelVariant::Enhanced, _) => vec![
                (
                    "hyper_q",
                    2,
                    Transform::Log,
                    vec!["alpha_q".to_string(), "beta_q".to_string()],
                ),
                ("q", c, Transform::Logit, per_cluster("q")),
                (
                    "rates",
                    2,
                    Transform::Logit,
                    vec!["r_pos".to_string(), "r_neg".to_string()],
                ),
            ],
            (ModelVariant::HierSentiment, _) => vec![
                (
                    "hyper_q",
                    2,
                    Transform::Log,
                    vec!["alpha_q".to_string(), "beta_q".to_string()],
                ),
                (
                    "rate_mu",
                    2,
                    Transform::Logit,
                    vec!["mu_pos".to_string(), "mu_neg".to_string()],
                ),
                (
                    "rate_conc",
                    2,
                    Transform::Log,
                    vec!["conc_pos".to_string(), "conc_neg".to_string()],
                ),
                ("q", c, Transform::Logit, per_cluster("q")),
                ("r_pos", c, Transform::Logit, per_cluster("r_pos")),
                ("r_neg", c, Transform::Logit, per_cluster("r_neg")),
            ],
            (ModelVariant::HierInformed, _) => vec![
                (
                    "hyper_q",
                    2,
                    Transform::Log,
                    vec!["alpha_q".to_string(), "beta_q".to_string()],
                ),
                ("q", c, Transform::Logit, per_cluster("q")),
                ("log_r_pos", c, Transform::Identity, per_cluster("log_r_pos")),
                ("log_kappa", c, Transform::Identity, per_cluster("log_kappa")),
            ],
            (ModelVariant::CorrectedGlobal, _) => vec![(
                "global",
                3,
                Transform::Logit,
                vec!["q_global".to_string(), "r_pos".to_string(), "r_neg".to_string()],
            )],
        };
        let layout = ParamLayout::new(blocks);
        Self { variant, dataset, priors, layout, basic_hypers }
    }

    /// Basic variant with hyperparameters pinned to constants, reducing to
    /// independent conjugate beta-binomial models per cluster.
    pub fn basic_with_fixed_hypers(
        dataset: Dataset,
        alpha_s: f64,
        beta_s: f64,
        alpha_q: f64,
        beta_q: f64,
    ) -> Self {
        Self::new(
            ModelVariant::Basic,
            dataset,
            PriorConfig::default(),
            BasicHypers::Fixed { alpha_s, beta_s, alpha_q, beta_q },
        )
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn priors(&self) -> &PriorConfig {
        &self.priors
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn param_names(&self) -> &[String] {
        self.layout.names()
    }

    pub fn cluster_count(&self) -> usize {
        self.dataset.len()
    }

    fn check_theta(&self, theta: &[f64]) -> Result<(), ModelError> {
        if theta.len() != self.dim() {
            return Err(ModelError::DimensionMismatch { expected: self.dim(), got: theta.len() });
        }
        if let Some(idx) = theta.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite(idx));
        }
        Ok(())
    }

    /// Map constrained values into unconstrained space. Boundary values
    /// (0 or 1 for probabilities, nonpositive for positive parameters) are
    /// rejected.
    pub fn to_unconstrained(&self, constrained: &[f64]) -> Result<Vec<f64>, ModelError> {
        if constrained.len() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got: constrained.len(),
            });
        }
        constrained
            .iter()
            .enumerate()
            .map(|(i, &v)| match self.layout.transform_of(i) {
                Transform::Logit => {
                    if v <= LOGIT_BOUND_EPS || v >= 1.0 - LOGIT_BOUND_EPS {
                        Err(ModelError::OutOfSupport { index: i, value: v })
                    } else {
                        Ok((v / (1.0 - v)).ln())
                    }
                }
                Transform::Log => {
                    if v <= 0.0 {
                        Err(ModelError::OutOfSupport { index: i, value: v })
                    } else {
                        Ok(v.ln())
                    }
                }
                Transform::Identity => {
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(ModelError::NonFinite(i))
                    }
                }
            })
            .collect()
    }

    /// Map unconstrained values back to constrained space, returning the
    /// log of the absolute Jacobian determinant of the inverse map.
    pub fn from_unconstrained(&self, theta: &[f64]) -> Result<(Vec<f64>, f64), ModelError> {
        self.check_theta(theta)?;
        let mut log_jac = 0.0;
        let constrained = theta
            .iter()
            .enumerate()
            .map(|(i, &x)| match self.layout.transform_of(i) {
                Transform::Logit => {
                    let p = sigmoid(x);
                    log_jac += ln_sigmoid(x) + ln_sigmoid(-x);
                    p
                }
                Transform::Log => {
                    log_jac += x;
                    x.exp()
                }
                Transform::Identity => x,
            })
            .collect();
        Ok((constrained, log_jac))
    }

    /// Unnormalized log joint density in unconstrained space: likelihood,
    /// priors, and transform Jacobians, with binomial constants included.
    pub fn log_posterior(&self, theta: &[f64]) -> Result<f64, ModelError> {
        self.check_theta(theta)?;
        let (prior_jac, lik) = self.eval(theta, None);
        Ok(prior_jac + lik)
    }

    /// Analytic gradient of [`Self::log_posterior`].
    pub fn grad_log_posterior(&self, theta: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_theta(theta)?;
        let mut grad = vec![0.0; self.dim()];
        self.eval(theta, Some(&mut grad));
        Ok(grad)
    }

    /// Log-posterior and gradient in one pass (the sampler hot path).
    pub fn log_posterior_with_grad(
        &self,
        theta: &[f64],
        grad: &mut [f64],
    ) -> Result<f64, ModelError> {
        self.check_theta(theta)?;
        grad.fill(0.0);
        let (prior_jac, lik) = self.eval(theta, Some(grad));
        Ok(prior_jac + lik)
    }

    /// Total data log-likelihood (priors and Jacobians excluded).
    pub fn log_likelihood(&self, theta: &[f64]) -> Result<f64, ModelError> {
        self.check_theta(theta)?;
        Ok(self.eval(theta, None).1)
    }

    /// Per-cluster joint log-likelihood: Stage-1 plus Stage-2 contribution
    /// for each cluster, evaluated at an unconstrained point.
    ///
    /// For the per-cluster variants the sum equals [`Self::log_likelihood`].
    /// `CorrectedGlobal` distributes its pooled likelihood across clusters by
    /// evaluating the same global parameters on each cluster's counts; this
    /// is for reporting only and differs from the pooled likelihood by the
    /// combinatorial constants.
    pub fn pointwise_joint_loglik(&self, theta: &[f64]) -> Result<Vec<f64>, ModelError> {
        let (constrained, _) = self.from_unconstrained(theta)?;
        Ok(self.pointwise_joint_loglik_constrained(&constrained))
    }

    /// As [`Self::pointwise_joint_loglik`], from constrained values.
    pub fn pointwise_joint_loglik_constrained(&self, constrained: &[f64]) -> Vec<f64> {
        let rates = self.implied_cluster_rates(constrained);
        self.dataset
            .clusters()
            .iter()
            .zip(rates)
            .map(|(cl, (s, p))| {
                let mut lp = crate::math::binomial_ln_pmf(cl.m, cl.n, s);
                if cl.m > 0 {
                    lp += crate::math::binomial_ln_pmf(cl.y, cl.m, p);
                }
                lp
            })
            .collect()
    }

    /// The per-cluster (response rate, positive share) pair the likelihood
    /// uses at a constrained parameter value.
    pub fn implied_cluster_rates(&self, constrained: &[f64]) -> Vec<(f64, f64)> {
        assert_eq!(constrained.len(), self.dim(), "constrained vector length");
        let c = self.cluster_count();
        let get = |name: &str| self.layout.slice(name, constrained).expect("block exists");
        match self.variant {
            ModelVariant::Basic => {
                let s = get("s");
                let q = get("q");
                (0..c).map(|i| (s[i], q[i])).collect()
            }
            ModelVariant::Enhanced => {
                let q = get("q");
                let rates = get("rates");
                (0..c).map(|i| two_stage_rates(q[i], rates[0], rates[1])).collect()
            }
            ModelVariant::HierSentiment => {
                let q = get("q");
                let rp = get("r_pos");
                let rn = get("r_neg");
                (0..c).map(|i| two_stage_rates(q[i], rp[i], rn[i])).collect()
            }
            ModelVariant::HierInformed => {
                let q = get("q");
                let u = get("log_r_pos");
                let w = get("log_kappa");
                (0..c)
                    .map(|i| {
                        let (rp, rn) = informed_rates(u[i], w[i]);
                        two_stage_rates(q[i], rp, rn)
                    })
                    .collect()
            }
            ModelVariant::CorrectedGlobal => {
                let g = get("global");
                let (s, p) = two_stage_rates(g[0], g[1], g[2]);
                vec![(s, p); c]
            }
        }
    }

    /// Draw one replicated dataset (m*, y*) per cluster from the model's
    /// observation distribution at a constrained parameter value.
    pub fn posterior_predictive_draw_constrained<R: Rng>(
        &self,
        constrained: &[f64],
        rng: &mut R,
    ) -> Vec<(u64, u64)> {
        let rates = self.implied_cluster_rates(constrained);
        self.dataset
            .clusters()
            .iter()
            .zip(rates)
            .map(|(cl, (s, p))| {
                let m_rep = sample_binomial(cl.n, s, rng);
                let y_rep = sample_binomial(m_rep, p, rng);
                (m_rep, y_rep)
            })
            .collect()
    }

    /// As [`Self::posterior_predictive_draw_constrained`], from an
    /// unconstrained point.
    pub fn posterior_predictive_draw<R: Rng>(
        &self,
        theta: &[f64],
        rng: &mut R,
    ) -> Result<Vec<(u64, u64)>, ModelError> {
        let (constrained, _) = self.from_unconstrained(theta)?;
        Ok(self.posterior_predictive_draw_constrained(&constrained, rng))
    }

    /// Moment-based start in unconstrained space with uniform jitter,
    /// used to initialize sampler chains.
    pub fn initial_position<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let c = self.cluster_count();
        let clusters = self.dataset.clusters();
        let q_hat = |i: usize| (clusters[i].y as f64 + 1.0) / (clusters[i].m as f64 + 2.0);
        let s_hat = |i: usize| (clusters[i].m as f64 + 1.0) / (clusters[i].n as f64 + 2.0);
        let pooled_s = (self.dataset.total_feedback as f64 + 1.0)
            / (self.dataset.total_interactions as f64 + 2.0);
        let pooled_q = (self.dataset.total_positive() as f64 + 1.0)
            / (self.dataset.total_feedback as f64 + 2.0);

        let mut constrained = Vec::with_capacity(self.dim());
        match (self.variant, self.basic_hypers) {
            (ModelVariant::Basic, BasicHypers::Learned) => {
                constrained.extend([2.0, 2.0, 2.0, 2.0]);
                constrained.extend((0..c).map(s_hat));
                constrained.extend((0..c).map(q_hat));
            }
            (ModelVariant::Basic, BasicHypers::Fixed { .. }) => {
                constrained.extend((0..c).map(s_hat));
                constrained.extend((0..c).map(q_hat));
            }
            (ModelVariant::Enhanced, _) => {
                constrained.extend([2.0, 2.0]);
                constrained.extend((0..c).map(q_hat));
                constrained.extend([pooled_s, pooled_s]);
            }
            (ModelVariant::HierSentiment, _) => {
                constrained.extend([2.0, 2.0]);
                let mu0 = self.priors.hs_mu_beta.0
                    / (self.priors.hs_mu_beta.0 + self.priors.hs_mu_beta.1);
                constrained.extend([mu0, mu0, 2.0, 2.0]);
                constrained.extend((0..c).map(q_hat));
                constrained.extend((0..c).map(s_hat));
                constrained.extend((0..c).map(s_hat));
            }
            (ModelVariant::HierInformed, _) => {
                constrained.extend([2.0, 2.0]);
                constrained.extend((0..c).map(q_hat));
                constrained.extend(std::iter::repeat(self.priors.informed_logrpos_center).take(c));
                constrained
                    .extend(std::iter::repeat(self.priors.informed_logkappa_center).take(c));
            }
            (ModelVariant::CorrectedGlobal, _) => {
                constrained.extend([pooled_q, pooled_s, pooled_s]);
            }
        }
        let mut theta = self.to_unconstrained(&constrained).expect("moment starts are interior");
        for v in &mut theta {
            *v += rng.random::<f64>() - 0.5;
        }
        theta
    }
}

/// The Eq.-style two-stage rates: response rate `s = q·r_pos + (1−q)·r_neg`
/// and positive share `p = q·r_pos / s`.
pub(crate) fn two_stage_rates(q: f64, r_pos: f64, r_neg: f64) -> (f64, f64) {
    let s = q * r_pos + (1.0 - q) * r_neg;
    let p = if s > 0.0 { q * r_pos / s } else { 0.0 };
    (s, p)
}

/// Clipped rates implied by the informed model's unconstrained log-rate pair.
pub(crate) fn informed_rates(log_r_pos: f64, log_kappa: f64) -> (f64, f64) {
    let r_pos = log_r_pos.exp().min(RATE_CLIP);
    let r_neg = (r_pos * log_kappa.exp()).min(RATE_CLIP);
    (r_pos, r_neg)
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log σ(x), computed stably for large |x|.
pub(crate) fn ln_sigmoid(x: f64) -> f64 {
    if x > 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sample_binomial<R: Rng>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

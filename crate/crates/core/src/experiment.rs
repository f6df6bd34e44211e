//! Experiment orchestration: headline recovery runs, bias-strength sweeps,
//! multi-seed coverage studies, and a drift-monitoring demo, each emitting a
//! schema-stable report.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::drift::{BatchSummary, DriftDecision, DriftMonitor, DriftThresholds};
use crate::estimators::{abs_error, ipw_estimate, naive_mean, wilson_interval};
use crate::evaluation::{compare, pointwise_loglik_matrix, psis_loo, ComparisonTable, WeightMode};
use crate::models::{build_model, ModelVariant, PriorConfig};
use crate::nuts::{run_chains, ConvergenceReport, PosteriorDraws, SamplerConfig};
use crate::simulate::{
    draw_bias_params, draw_latent_positives, make_population, simulate_feedback_conditional,
    SyntheticPopulation,
};
use crate::synthesis::{summarize_quality, QualitySummary, DEFAULT_MAX_CI_WIDTH, DEFAULT_Q_TARGET};
use crate::types::{prevalence, ClusterStats, Dataset};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Sim(#[from] crate::simulate::SimError),
    #[error(transparent)]
    Sampler(#[from] crate::nuts::SamplerError),
    #[error(transparent)]
    Estimator(#[from] crate::estimators::EstimatorError),
    #[error(transparent)]
    Synthesis(#[from] crate::synthesis::SynthesisError),
    #[error(transparent)]
    Eval(#[from] crate::evaluation::EvalError),
    #[error("unknown report format {0:?}; expected json or markdown-table")]
    UnknownFormat(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Experiment styles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMode {
    Headline,
    KappaSweep,
    Coverage,
    DriftDemo,
}

/// Compact sampler settings shared across an experiment's fits; the
/// acceptance target defaults to each variant's own value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSettings {
    pub chains: usize,
    pub draws: usize,
    pub tune: usize,
    #[serde(default)]
    pub target_accept: Option<f64>,
    #[serde(default = "default_tree_depth")]
    pub max_tree_depth: usize,
}

fn default_tree_depth() -> usize {
    10
}

impl SamplerSettings {
    pub fn to_config(&self, variant: ModelVariant, seed: u64) -> SamplerConfig {
        let mut cfg = SamplerConfig::new(
            self.chains,
            self.draws,
            self.tune,
            self.target_accept.unwrap_or_else(|| variant.default_target_accept()),
            seed,
        );
        cfg.max_tree_depth = self.max_tree_depth;
        cfg
    }
}

/// Full experiment specification; the config echo in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub mode: ExperimentMode,
    pub clusters: usize,
    pub size_range: (u64, u64),
    pub quality_prior: (f64, f64),
    pub kappa_max: f64,
    #[serde(default)]
    pub kappa_list: Vec<f64>,
    pub models: Vec<ModelVariant>,
    pub sampler: SamplerSettings,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub priors: PriorConfig,
    #[serde(default = "default_level")]
    pub credible_level: f64,
}

fn default_level() -> f64 {
    0.95
}

impl ExperimentSpec {
    /// Single-realization recovery run at one bias strength.
    pub fn headline(seed: u64) -> Self {
        Self {
            mode: ExperimentMode::Headline,
            clusters: 18,
            size_range: (100, 2000),
            quality_prior: (6.25, 3.75),
            kappa_max: 10.0,
            kappa_list: vec![],
            models: ModelVariant::all().to_vec(),
            sampler: SamplerSettings {
                chains: 4,
                draws: 2000,
                tune: 2000,
                target_accept: None,
                max_tree_depth: 10,
            },
            replicates: 1,
            seed,
            priors: PriorConfig::default(),
            credible_level: 0.95,
        }
    }

    /// Bias-strength sweep with a compact per-cell sampler configuration.
    pub fn kappa_sweep(seed: u64) -> Self {
        let mut spec = Self::headline(seed);
        spec.mode = ExperimentMode::KappaSweep;
        spec.kappa_list = vec![1.0, 3.0, 10.0, 30.0];
        spec.sampler =
            SamplerSettings { chains: 2, draws: 1000, tune: 1000, target_accept: None, max_tree_depth: 10 };
        spec
    }

    /// Multi-seed coverage study: population fixed, bias and feedback
    /// redrawn per replicate.
    pub fn coverage(seed: u64, replicates: usize) -> Self {
        let mut spec = Self::headline(seed);
        spec.mode = ExperimentMode::Coverage;
        spec.models = vec![ModelVariant::Basic, ModelVariant::HierInformed];
        spec.sampler =
            SamplerSettings { chains: 2, draws: 1000, tune: 1500, target_accept: None, max_tree_depth: 10 };
        spec.replicates = replicates;
        spec
    }

    /// Batch-stream drift monitoring demo.
    pub fn drift_demo(seed: u64) -> Self {
        let mut spec = Self::headline(seed);
        spec.mode = ExperimentMode::DriftDemo;
        spec.models = vec![];
        spec.replicates = 8;
        spec
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.clusters == 0 {
            return Err(ExperimentError::BadSpec("clusters must be >= 1".into()));
        }
        if self.replicates == 0 {
            return Err(ExperimentError::BadSpec("replicates must be >= 1".into()));
        }
        match self.mode {
            ExperimentMode::KappaSweep => {
                if self.kappa_list.len() < 2 {
                    return Err(ExperimentError::BadSpec(
                        "kappa sweep needs at least 2 kappa values".into(),
                    ));
                }
                if self.models.is_empty() {
                    return Err(ExperimentError::BadSpec("model list is empty".into()));
                }
            }
            ExperimentMode::Coverage => {
                if self.replicates < 10 {
                    return Err(ExperimentError::BadSpec(
                        "coverage study needs at least 10 replicates".into(),
                    ));
                }
                if self.models.is_empty() {
                    return Err(ExperimentError::BadSpec("model list is empty".into()));
                }
            }
            ExperimentMode::Headline => {
                if self.models.is_empty() {
                    return Err(ExperimentError::BadSpec("model list is empty".into()));
                }
            }
            ExperimentMode::DriftDemo => {}
        }
        Ok(())
    }

    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Deterministic sub-seed derivation: mixes the master seed with a purpose
/// tag and an index so parallel work owns independent streams.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325_u64;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(master ^ h ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Ground-truth block of a synthetic run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthInfo {
    pub aggregate_q_star: f64,
    pub per_cluster_q_star: Vec<f64>,
    pub s0: Vec<f64>,
    pub kappa: Vec<f64>,
}

/// One method's outcome on one dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub estimate: f64,
    pub ci: Option<(f64, f64)>,
    pub abs_error: Option<f64>,
    pub covers_truth: Option<bool>,
    pub excluded_clusters: Vec<String>,
    pub divergences: Option<usize>,
    pub convergence: Option<ConvergenceReport>,
    pub quality: Option<QualitySummary>,
}

/// One sweep cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub kappa_max: f64,
    pub feedback_rate: f64,
    pub aggregate_q_star: f64,
    pub methods: Vec<MethodResult>,
    pub convergence_warnings: Vec<String>,
}

/// One coverage replicate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub seed: u64,
    pub feedback_rate: f64,
    pub methods: Vec<MethodResult>,
}

/// Aggregated coverage statistics for one method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodCoverage {
    pub method: String,
    pub covered: usize,
    pub total: usize,
    pub coverage_rate: f64,
    pub coverage_wilson_ci: (f64, f64),
    pub median_abs_error: f64,
    pub median_ci_width: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageStudy {
    pub replicates: Vec<ReplicateResult>,
    pub methods: Vec<MethodCoverage>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftStep {
    pub batch_index: u64,
    pub decision: Option<DriftDecision>,
}

/// Everything non-deterministic lives here, isolated from the payload.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RuntimeMeta {
    pub wall_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub mode: ExperimentMode,
    pub seed: u64,
    pub config_hash: String,
    pub spec: ExperimentSpec,
}

/// The emitted artifact: per-method estimates, errors, convergence, LOO
/// comparison, flags, config echo, and runtime metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualityReport {
    pub meta: RunMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<MethodResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loo: Option<ComparisonTable>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepCell>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageStudy>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub drift: Vec<DriftStep>,
    pub runtime: RuntimeMeta,
}

impl QualityReport {
    /// Deterministic payload: the full report minus runtime metadata, as
    /// canonical JSON. Two runs with the same spec produce identical bytes.
    pub fn payload_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("runtime");
        }
        serde_json::to_string_pretty(&value).expect("value serializes")
    }
}

/// Run the experiment named by the spec's mode.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<QualityReport, ExperimentError> {
    spec.validate()?;
    let start = std::time::Instant::now();
    let mut report = match spec.mode {
        ExperimentMode::Headline => run_headline(spec)?,
        ExperimentMode::KappaSweep => run_kappa_sweep(spec)?,
        ExperimentMode::Coverage => run_coverage_study(spec)?,
        ExperimentMode::DriftDemo => run_drift_demo(spec)?,
    };
    report.runtime.wall_ms = start.elapsed().as_millis();
    Ok(report)
}

fn meta_for(spec: &ExperimentSpec) -> RunMeta {
    RunMeta {
        mode: spec.mode,
        seed: spec.seed,
        config_hash: spec.config_hash(),
        spec: spec.clone(),
    }
}

fn synth_population(spec: &ExperimentSpec) -> Result<(SyntheticPopulation, Vec<u64>), ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "population", 0));
    let pop = make_population(spec.clusters, spec.size_range, spec.quality_prior, &mut rng)?;
    let mut latent_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "latent", 0));
    let latent = draw_latent_positives(&pop, &mut latent_rng);
    Ok((pop, latent))
}

fn simulate_cell(
    spec: &ExperimentSpec,
    pop: &SyntheticPopulation,
    latent: &[u64],
    kappa_max: f64,
    bias_seed: u64,
    feedback_seed: u64,
) -> Result<(Dataset, TruthInfo), ExperimentError> {
    let mut bias_rng = ChaCha8Rng::seed_from_u64(bias_seed);
    let bias = draw_bias_params(spec.clusters, kappa_max, &mut bias_rng)?;
    let mut fb_rng = ChaCha8Rng::seed_from_u64(feedback_seed);
    let dataset = simulate_feedback_conditional(pop, latent, &bias, &mut fb_rng)?;
    let truth = TruthInfo {
        aggregate_q_star: pop.aggregate_q_star,
        per_cluster_q_star: pop.q_star.clone(),
        s0: bias.s0,
        kappa: bias.kappa,
    };
    Ok((dataset, truth))
}

/// Output of one Bayesian fit, ready for reporting.
pub struct FitOutput {
    pub variant: ModelVariant,
    pub draws: PosteriorDraws,
    pub convergence: ConvergenceReport,
    pub aggregate_draws: Vec<f64>,
    pub quality: Option<QualitySummary>,
    pub model: crate::models::ModelInstance,
}

/// Fit one variant on a dataset and synthesize its aggregate posterior.
pub fn fit_variant(
    dataset: &Dataset,
    variant: ModelVariant,
    priors: &PriorConfig,
    sampler: &SamplerSettings,
    seed: u64,
    level: f64,
) -> Result<FitOutput, ExperimentError> {
    let model = build_model(variant, dataset.clone(), priors.clone());
    let config = sampler.to_config(variant, seed);
    let (draws, convergence) = run_chains(&model, &config)?;

    let (aggregate_draws, quality) = if variant == ModelVariant::CorrectedGlobal {
        let qi = draws.param_index("q_global").expect("global layout");
        (draws.pooled_column(qi), None)
    } else {
        let block = model.layout().block("q").expect("per-cluster layout");
        let indices: Vec<usize> = (block.start..block.start + block.len).collect();
        let q_rows = draws.pooled_rows(&indices);
        let pi = prevalence(dataset);
        let ids: Vec<String> =
            dataset.clusters().iter().map(|c| c.cluster_id.clone()).collect();
        let summary = summarize_quality(
            &ids,
            &q_rows,
            &pi,
            level,
            DEFAULT_Q_TARGET,
            DEFAULT_MAX_CI_WIDTH,
        )?;
        let agg = crate::synthesis::aggregate_posterior(&q_rows, &pi)?;
        (agg, Some(summary))
    };
    Ok(FitOutput { variant, draws, convergence, aggregate_draws, quality, model })
}

fn classical_results(dataset: &Dataset, truth: Option<f64>) -> Vec<MethodResult> {
    let mut out = Vec::new();
    if let Ok(naive) = naive_mean(dataset) {
        out.push(MethodResult {
            method: naive.method,
            estimate: naive.value,
            ci: None,
            abs_error: truth.map(|t| abs_error(naive.value, t)),
            covers_truth: None,
            excluded_clusters: vec![],
            divergences: None,
            convergence: None,
            quality: None,
        });
    }
    if let Ok(ipw) = ipw_estimate(dataset) {
        out.push(MethodResult {
            method: ipw.method,
            estimate: ipw.value,
            ci: None,
            abs_error: truth.map(|t| abs_error(ipw.value, t)),
            covers_truth: None,
            excluded_clusters: ipw.excluded_clusters,
            divergences: None,
            convergence: None,
            quality: None,
        });
    }
    out
}

fn bayes_result(fit: &FitOutput, truth: Option<f64>, level: f64) -> MethodResult {
    let summary = crate::synthesis::PosteriorSummary::from_draws(&fit.aggregate_draws, level)
        .expect("enough draws");
    MethodResult {
        method: fit.variant.tag().to_string(),
        estimate: summary.mean,
        ci: Some((summary.ci_low, summary.ci_high)),
        abs_error: truth.map(|t| abs_error(summary.mean, t)),
        covers_truth: truth.map(|t| summary.covers(t)),
        excluded_clusters: vec![],
        divergences: Some(fit.draws.divergence_count()),
        convergence: Some(fit.convergence.clone()),
        quality: fit.quality.clone(),
    }
}

/// Headline run: one synthetic population and feedback pass at the spec's
/// bias strength, all requested estimators, plus a LOO panel when at least
/// two per-cluster models were fit.
pub fn run_headline(spec: &ExperimentSpec) -> Result<QualityReport, ExperimentError> {
    let (pop, latent) = synth_population(spec)?;
    let (dataset, truth) = simulate_cell(
        spec,
        &pop,
        &latent,
        spec.kappa_max,
        derive_seed(spec.seed, "bias", 0),
        derive_seed(spec.seed, "feedback", 0),
    )?;
    let q_star = truth.aggregate_q_star;
    let mut methods = classical_results(&dataset, Some(q_star));

    let fits: Vec<FitOutput> = spec
        .models
        .iter()
        .map(|&variant| {
            fit_variant(
                &dataset,
                variant,
                &spec.priors,
                &spec.sampler,
                derive_seed(spec.seed, "fit", variant as u64),
                spec.credible_level,
            )
        })
        .collect::<Result<_, _>>()?;
    for fit in &fits {
        methods.push(bayes_result(fit, Some(q_star), spec.credible_level));
    }

    let loo_candidates: Vec<(String, crate::evaluation::LooResult)> = fits
        .iter()
        .map(|fit| {
            let matrix = pointwise_loglik_matrix(&fit.model, &fit.draws);
            psis_loo(&matrix).map(|r| (fit.variant.tag().to_string(), r))
        })
        .collect::<Result<_, _>>()?;
    let comparable =
        loo_candidates.iter().filter(|(tag, _)| tag != "corrected_global").count();
    let loo = if comparable >= 2 {
        Some(compare(&loo_candidates, WeightMode::Stacking, false)?)
    } else {
        None
    };

    Ok(QualityReport {
        meta: meta_for(spec),
        truth: Some(truth),
        feedback_rate: Some(dataset.total_feedback as f64 / dataset.total_interactions as f64),
        methods,
        loo,
        sweep: vec![],
        coverage: None,
        drift: vec![],
        runtime: RuntimeMeta::default(),
    })
}

/// Bias-strength sweep over the spec's kappa list; population and latent
/// labels held fixed, bias parameters drawn with common random numbers so
/// cells couple monotonically.
pub fn run_kappa_sweep(spec: &ExperimentSpec) -> Result<QualityReport, ExperimentError> {
    let (pop, latent) = synth_population(spec)?;
    let bias_seed = derive_seed(spec.seed, "bias", 0);
    let mut sweep = Vec::with_capacity(spec.kappa_list.len());
    for (cell_idx, &kappa_max) in spec.kappa_list.iter().enumerate() {
        let (dataset, truth) = simulate_cell(
            spec,
            &pop,
            &latent,
            kappa_max,
            bias_seed,
            derive_seed(spec.seed, "feedback", cell_idx as u64),
        )?;
        let q_star = truth.aggregate_q_star;
        let mut methods = classical_results(&dataset, Some(q_star));
        let mut warnings = Vec::new();
        for &variant in &spec.models {
            let fit = fit_variant(
                &dataset,
                variant,
                &spec.priors,
                &spec.sampler,
                derive_seed(spec.seed, "fit", (cell_idx * 16 + variant as usize) as u64),
                spec.credible_level,
            )?;
            if !fit.convergence.pass {
                warnings.push(format!(
                    "kappa_max={kappa_max} {}: max_rhat={:.3} min_ess={:.0}",
                    variant.tag(),
                    fit.convergence.max_rhat,
                    fit.convergence.min_ess_bulk
                ));
            }
            methods.push(bayes_result(&fit, Some(q_star), spec.credible_level));
        }
        sweep.push(SweepCell {
            kappa_max,
            feedback_rate: dataset.total_feedback as f64 / dataset.total_interactions as f64,
            aggregate_q_star: q_star,
            methods,
            convergence_warnings: warnings,
        });
    }
    Ok(QualityReport {
        meta: meta_for(spec),
        truth: None,
        feedback_rate: None,
        methods: vec![],
        loo: None,
        sweep,
        coverage: None,
        drift: vec![],
        runtime: RuntimeMeta::default(),
    })
}

/// Coverage study: population and latent labels fixed once; bias parameters
/// and feedback indicators redrawn per replicate. Replicates run in parallel
/// with independent derived seeds.
pub fn run_coverage_study(spec: &ExperimentSpec) -> Result<QualityReport, ExperimentError> {
    let (pop, latent) = synth_population(spec)?;
    let q_star = pop.aggregate_q_star;

    let replicates: Vec<ReplicateResult> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| -> Result<ReplicateResult, ExperimentError> {
            let seed = derive_seed(spec.seed, "replicate", r as u64);
            let (dataset, _) = simulate_cell(
                spec,
                &pop,
                &latent,
                spec.kappa_max,
                derive_seed(seed, "bias", 0),
                derive_seed(seed, "feedback", 0),
            )?;
            let mut methods = classical_results(&dataset, Some(q_star));
            for &variant in &spec.models {
                let fit = fit_variant(
                    &dataset,
                    variant,
                    &spec.priors,
                    &spec.sampler,
                    derive_seed(seed, "fit", variant as u64),
                    spec.credible_level,
                )?;
                // Divergence-heavy replicates are reported, never dropped.
                methods.push(bayes_result(&fit, Some(q_star), spec.credible_level));
            }
            Ok(ReplicateResult {
                replicate: r,
                seed,
                feedback_rate: dataset.total_feedback as f64
                    / dataset.total_interactions as f64,
                methods,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut names: Vec<String> = Vec::new();
    for m in &replicates[0].methods {
        names.push(m.method.clone());
    }
    let methods = names
        .iter()
        .map(|name| {
            let entries: Vec<&MethodResult> = replicates
                .iter()
                .flat_map(|r| r.methods.iter().filter(|m| &m.method == name))
                .collect();
            let total = entries.len();
            let covered = entries.iter().filter(|m| m.covers_truth == Some(true)).count();
            let errors: Vec<f64> = entries.iter().filter_map(|m| m.abs_error).collect();
            let widths: Vec<f64> =
                entries.iter().filter_map(|m| m.ci.map(|(lo, hi)| hi - lo)).collect();
            let has_ci = entries.iter().any(|m| m.ci.is_some());
            MethodCoverage {
                method: name.clone(),
                covered,
                total,
                coverage_rate: covered as f64 / total.max(1) as f64,
                coverage_wilson_ci: wilson_interval(covered as u64, total.max(1) as u64, 0.95)
                    .unwrap_or((0.0, 1.0)),
                median_abs_error: crate::math::quantile(&errors, 0.5),
                median_ci_width: if has_ci {
                    Some(crate::math::quantile(&widths, 0.5))
                } else {
                    None
                },
            }
        })
        .collect();

    Ok(QualityReport {
        meta: meta_for(spec),
        truth: Some(TruthInfo {
            aggregate_q_star: q_star,
            per_cluster_q_star: pop.q_star.clone(),
            s0: vec![],
            kappa: vec![],
        }),
        feedback_rate: None,
        methods: vec![],
        loo: None,
        sweep: vec![],
        coverage: Some(CoverageStudy { replicates, methods }),
        drift: vec![],
        runtime: RuntimeMeta::default(),
    })
}

/// Drift demo: a stationary batch stream with an injected prevalence shift,
/// a quality flip, and a noise climb, run through the monitor.
pub fn run_drift_demo(spec: &ExperimentSpec) -> Result<QualityReport, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "drift", 0));
    let c = spec.clusters.min(6).max(2);
    let base_sizes: Vec<u64> = (0..c).map(|i| 400 + 200 * i as u64).collect();
    let q: Vec<f64> = (0..c).map(|i| 0.45 + 0.08 * i as f64).collect();
    let s0 = 0.08;

    let mut monitor = DriftMonitor::new(DriftThresholds::default(), (1.0, 1.0));
    let mut steps = Vec::new();
    let batches = spec.replicates.max(6) as u64;
    for t in 0..batches {
        let shifted = t >= batches - 3;
        let mut clusters = Vec::with_capacity(c);
        for j in 0..c {
            // Late batches shift prevalence mass onto the last cluster and
            // flip the first cluster's polarity.
            let n = if shifted && j == c - 1 {
                base_sizes[j] * 4
            } else {
                base_sizes[j]
            };
            let quality = if shifted && j == 0 { 1.0 - q[j] } else { q[j] };
            let pop = SyntheticPopulation::new(vec![n], vec![quality]);
            let latent = draw_latent_positives(&pop, &mut rng);
            let bias = crate::simulate::BiasParams::new(vec![s0], vec![2.0]);
            let ds = simulate_feedback_conditional(&pop, &latent, &bias, &mut rng)?;
            let stats = &ds.clusters()[0];
            clusters.push(ClusterStats::new(format!("c{j:02}"), stats.n, stats.m, stats.y));
        }
        let noise = if shifted { 0.12 + 0.04 * (t + 3 - batches) as f64 } else { 0.10 };
        let decision = monitor
            .push_batch(BatchSummary::new(t, clusters, noise))
            .map_err(|e| ExperimentError::BadSpec(format!("drift step failed: {e}")))?;
        steps.push(DriftStep { batch_index: t, decision });
    }

    Ok(QualityReport {
        meta: meta_for(spec),
        truth: None,
        feedback_rate: None,
        methods: vec![],
        loo: None,
        sweep: vec![],
        coverage: None,
        drift: steps,
        runtime: RuntimeMeta::default(),
    })
}

/// Report output formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    MarkdownTable,
}

impl std::str::FromStr for ReportFormat {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "markdown-table" | "markdown" | "md" => Ok(ReportFormat::MarkdownTable),
            other => Err(ExperimentError::UnknownFormat(other.to_string())),
        }
    }
}

/// Serialize a report to a file in the requested format.
pub fn emit_report(
    report: &QualityReport,
    path: &std::path::Path,
    format: ReportFormat,
) -> Result<(), ExperimentError> {
    let text = render_report(report, format)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Render a report as a string in the requested format.
pub fn render_report(
    report: &QualityReport,
    format: ReportFormat,
) -> Result<String, ExperimentError> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)?),
        ReportFormat::MarkdownTable => Ok(render_markdown(report)),
    }
}

fn render_markdown(report: &QualityReport) -> String {
    let mut out = String::new();
    let push = |out: &mut String, line: &str| {
        out.push_str(line);
        out.push('\n');
    };
    push(&mut out, &format!("# Quality report ({:?})", report.meta.mode));
    push(&mut out, "");
    push(
        &mut out,
        &format!("seed: {} | config: {}", report.meta.seed, report.meta.config_hash),
    );
    if let Some(truth) = &report.truth {
        push(&mut out, &format!("true aggregate quality: {:.4}", truth.aggregate_q_star));
    }
    push(&mut out, "");

    if !report.methods.is_empty() {
        push(&mut out, "| method | estimate | 95% CI | abs error | covers truth |");
        push(&mut out, "|---|---|---|---|---|");
        for m in &report.methods {
            let ci = m
                .ci
                .map(|(lo, hi)| format!("({lo:.3}, {hi:.3})"))
                .unwrap_or_else(|| "-".into());
            let err =
                m.abs_error.map(|e| format!("{e:.3}")).unwrap_or_else(|| "-".into());
            let covers = m
                .covers_truth
                .map(|c| if c { "yes" } else { "no" }.to_string())
                .unwrap_or_else(|| "-".into());
            push(
                &mut out,
                &format!(
                    "| {} | {:.4} | {} | {} | {} |",
                    m.method, m.estimate, ci, err, covers
                ),
            );
        }
        push(&mut out, "");
    }

    if let Some(loo) = &report.loo {
        push(&mut out, "## Model comparison");
        push(&mut out, "");
        push(&mut out, "| rank | model | elpd | delta | weight | p_loo |");
        push(&mut out, "|---|---|---|---|---|---|");
        for (i, e) in loo.entries.iter().enumerate() {
            push(
                &mut out,
                &format!(
                    "| {} | {} | {:.2} | {:.2} | {:.2} | {:.2} |",
                    i + 1,
                    e.model,
                    e.elpd_loo,
                    e.delta_elpd,
                    e.weight,
                    e.p_loo
                ),
            );
        }
        push(&mut out, "");
    }

    if !report.sweep.is_empty() {
        push(&mut out, "## Bias-strength sweep (absolute error)");
        push(&mut out, "");
        let mut methods: Vec<String> = Vec::new();
        for cell in &report.sweep {
            for m in &cell.methods {
                if !methods.contains(&m.method) {
                    methods.push(m.method.clone());
                }
            }
        }
        push(&mut out, &format!("| kappa_max | M/N | {} |", methods.join(" | ")));
        push(&mut out, &format!("|---|---|{}|", "---|".repeat(methods.len())));
        for cell in &report.sweep {
            let errors: Vec<String> = methods
                .iter()
                .map(|name| {
                    cell.methods
                        .iter()
                        .find(|m| &m.method == name)
                        .and_then(|m| m.abs_error)
                        .map(|e| format!("{e:.3}"))
                        .unwrap_or_else(|| "-".into())
                })
                .collect();
            push(
                &mut out,
                &format!(
                    "| {} | {:.3} | {} |",
                    cell.kappa_max,
                    cell.feedback_rate,
                    errors.join(" | ")
                ),
            );
        }
        push(&mut out, "");
    }

    if let Some(cov) = &report.coverage {
        push(&mut out, "## Coverage study");
        push(&mut out, "");
        push(
            &mut out,
            "| method | coverage | wilson 95% | median abs error | median CI width |",
        );
        push(&mut out, "|---|---|---|---|---|");
        for m in &cov.methods {
            push(
                &mut out,
                &format!(
                    "| {} | {}/{} | ({:.3}, {:.3}) | {:.3} | {} |",
                    m.method,
                    m.covered,
                    m.total,
                    m.coverage_wilson_ci.0,
                    m.coverage_wilson_ci.1,
                    m.median_abs_error,
                    m.median_ci_width
                        .map(|w| format!("{w:.3}"))
                        .unwrap_or_else(|| "-".into())
                ),
            );
        }
        push(&mut out, "");
    }

    if !report.drift.is_empty() {
        push(&mut out, "## Drift monitor");
        push(&mut out, "");
        push(&mut out, "| batch | action | jsd | signals |");
        push(&mut out, "|---|---|---|---|");
        for step in &report.drift {
            match &step.decision {
                None => push(&mut out, &format!("| {} | (reference) | - | - |", step.batch_index)),
                Some(d) => push(
                    &mut out,
                    &format!(
                        "| {} | {:?} | {:.4} | {} |",
                        step.batch_index,
                        d.action,
                        d.measured_jsd,
                        d.triggered.len()
                    ),
                ),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seed(42, "bias", 0);
        assert_eq!(a, derive_seed(42, "bias", 0));
        assert_ne!(a, derive_seed(42, "bias", 1));
        assert_ne!(a, derive_seed(42, "feedback", 0));
        assert_ne!(a, derive_seed(43, "bias", 0));
    }

    #[test]
    fn spec_validation_catches_bad_setups() {
        let mut spec = ExperimentSpec::headline(1);
        spec.models.clear();
        assert!(spec.validate().is_err());

        let mut spec = ExperimentSpec::kappa_sweep(1);
        spec.kappa_list = vec![10.0];
        assert!(spec.validate().is_err());

        let mut spec = ExperimentSpec::coverage(1, 20);
        spec.replicates = 5;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn config_hash_tracks_spec_changes() {
        let a = ExperimentSpec::headline(1);
        let mut b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        b.kappa_max = 30.0;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn report_format_parsing() {
        assert_eq!("json".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert_eq!(
            "markdown-table".parse::<ReportFormat>().unwrap(),
            ReportFormat::MarkdownTable
        );
        assert!("yaml".parse::<ReportFormat>().is_err());
    }

    #[test]
    fn drift_demo_detects_injected_shift() {
        let spec = ExperimentSpec::drift_demo(7);
        let report = run_experiment(&spec).unwrap();
        assert!(!report.drift.is_empty());
        let fired: Vec<_> = report
            .drift
            .iter()
            .filter_map(|s| s.decision.as_ref())
            .filter(|d| d.action != crate::drift::DriftAction::None)
            .collect();
        assert!(!fired.is_empty(), "injected drift must trigger at least one decision");
        let md = render_report(&report, ReportFormat::MarkdownTable).unwrap();
        assert!(md.contains("Drift monitor"));
    }
}

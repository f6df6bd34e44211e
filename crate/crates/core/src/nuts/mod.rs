//! Self-contained gradient-based MCMC: leapfrog integration, No-U-Turn tree
//! building with multinomial trajectory sampling, dual-averaging step-size
//! adaptation, windowed diagonal mass-matrix adaptation, multi-chain
//! orchestration, and convergence diagnostics.

mod adapt;
mod diagnostics;
mod integrator;
mod tree;

pub use adapt::DualAveraging;
pub use diagnostics::{ess, split_rhat, EssKind};
pub use integrator::{leapfrog, LeapfrogStep};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::models::ModelInstance;
use crate::types::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum SamplerError {
    #[error("invalid sampler config: {0}")]
    BadConfig(String),
    #[error("insufficient warmup: tune={0} but at least 50 tuning steps are required")]
    InsufficientWarmup(usize),
    #[error(
        "chain {chain} diverged on every draw ({divergences}/{draws}); the target geometry or \
         step size is pathological"
    )]
    AllDivergent { chain: usize, divergences: usize, draws: usize },
}

/// A differentiable unnormalized log-density the sampler can explore.
pub trait Target: Sync {
    fn dim(&self) -> usize;

    /// Log-density and gradient at an unconstrained point. Non-finite returns
    /// are treated as divergent states, never errors.
    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64;

    /// A starting point in unconstrained space; called once per chain with
    /// that chain's RNG.
    fn initial_position(&self, rng: &mut dyn rand::RngCore) -> Vec<f64>;

    fn param_names(&self) -> Vec<String>;

    /// Map an unconstrained draw to constrained (reporting) space.
    fn constrain(&self, theta: &[f64]) -> Vec<f64>;
}

impl Target for ModelInstance {
    fn dim(&self) -> usize {
        ModelInstance::dim(self)
    }

    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        match self.log_posterior_with_grad(theta, grad) {
            Ok(v) => v,
            Err(_) => f64::NEG_INFINITY,
        }
    }

    fn initial_position(&self, rng: &mut dyn rand::RngCore) -> Vec<f64> {
        ModelInstance::initial_position(self, rng)
    }

    fn param_names(&self) -> Vec<String> {
        ModelInstance::param_names(self).to_vec()
    }

    fn constrain(&self, theta: &[f64]) -> Vec<f64> {
        self.from_unconstrained(theta).expect("sampler draws stay finite").0
    }
}

/// Sampler configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    pub draws: usize,
    pub tune: usize,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    pub divergence_energy_threshold: f64,
    pub seed: u64,
    pub rhat_threshold: f64,
    pub ess_threshold: f64,
}

impl SamplerConfig {
    pub fn new(chains: usize, draws: usize, tune: usize, target_accept: f64, seed: u64) -> Self {
        Self {
            chains,
            draws,
            tune,
            target_accept,
            max_tree_depth: 10,
            divergence_energy_threshold: 1000.0,
            seed,
            rhat_threshold: 1.01,
            ess_threshold: 400.0,
        }
    }

    fn validate(&self) -> Result<(), SamplerError> {
        if self.chains == 0 || self.draws == 0 {
            return Err(SamplerError::BadConfig("chains and draws must be >= 1".into()));
        }
        if self.tune < 50 {
            return Err(SamplerError::InsufficientWarmup(self.tune));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(SamplerError::BadConfig(format!(
                "target_accept must lie in (0,1), got {}",
                self.target_accept
            )));
        }
        if !(self.divergence_energy_threshold > 0.0) {
            return Err(SamplerError::BadConfig("divergence threshold must be positive".into()));
        }
        if self.max_tree_depth == 0 || self.max_tree_depth > 20 {
            return Err(SamplerError::BadConfig("max_tree_depth must be in 1..=20".into()));
        }
        Ok(())
    }
}

impl From<&RunConfig> for SamplerConfig {
    fn from(cfg: &RunConfig) -> Self {
        let mut sc = SamplerConfig::new(
            cfg.chains as usize,
            cfg.draws as usize,
            cfg.tune as usize,
            cfg.effective_target_accept(),
            cfg.seed,
        );
        sc.max_tree_depth = cfg.max_tree_depth as usize;
        sc
    }
}

/// Per-draw sampler statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawStats {
    pub depth: u32,
    pub n_leapfrog: u32,
    pub divergent: bool,
    pub accept: f64,
    pub energy: f64,
}

/// Posterior draws in constrained space, `[chain][draw][parameter]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub param_names: Vec<String>,
    pub chains: usize,
    pub draws_per_chain: usize,
    pub dim: usize,
    values: Vec<f64>,
    pub stats: Vec<DrawStats>,
}

impl PosteriorDraws {
    pub fn new(
        param_names: Vec<String>,
        chains: usize,
        draws_per_chain: usize,
        values: Vec<f64>,
        stats: Vec<DrawStats>,
    ) -> Self {
        let dim = param_names.len();
        assert_eq!(values.len(), chains * draws_per_chain * dim);
        assert_eq!(stats.len(), chains * draws_per_chain);
        Self { param_names, chains, draws_per_chain, dim, values, stats }
    }

    pub fn value(&self, chain: usize, draw: usize, param: usize) -> f64 {
        self.values[(chain * self.draws_per_chain + draw) * self.dim + param]
    }

    pub fn values_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn total_draws(&self) -> usize {
        self.chains * self.draws_per_chain
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    /// One parameter's trace in one chain.
    pub fn column(&self, chain: usize, param: usize) -> Vec<f64> {
        (0..self.draws_per_chain).map(|d| self.value(chain, d, param)).collect()
    }

    /// One parameter's draws pooled across chains, chain-major order.
    pub fn pooled_column(&self, param: usize) -> Vec<f64> {
        (0..self.chains).flat_map(|c| (0..self.draws_per_chain).map(move |d| (c, d))).map(
            |(c, d)| self.value(c, d, param),
        )
        .collect()
    }

    /// Pooled draws restricted to a parameter subset: `[total_draw][k]`.
    pub fn pooled_rows(&self, params: &[usize]) -> Vec<Vec<f64>> {
        let mut rows = Vec::with_capacity(self.total_draws());
        for chain in 0..self.chains {
            for draw in 0..self.draws_per_chain {
                rows.push(params.iter().map(|&p| self.value(chain, draw, p)).collect());
            }
        }
        rows
    }

    /// Full constrained vector of one draw.
    pub fn draw_row(&self, chain: usize, draw: usize) -> &[f64] {
        let base = (chain * self.draws_per_chain + draw) * self.dim;
        &self.values[base..base + self.dim]
    }

    pub fn divergence_count(&self) -> usize {
        self.stats.iter().filter(|s| s.divergent).count()
    }

    pub fn max_depth_hits(&self, max_depth: u32) -> usize {
        self.stats.iter().filter(|s| s.depth >= max_depth).count()
    }

    pub fn mean_accept(&self) -> f64 {
        crate::math::mean(&self.stats.iter().map(|s| s.accept).collect::<Vec<_>>())
    }
}

/// Per-parameter convergence diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamDiagnostics {
    pub name: String,
    pub rhat: f64,
    pub ess_bulk: f64,
    pub ess_tail: f64,
}

/// Summary of chain convergence: split rank-normalized R-hat, bulk/tail ESS,
/// divergence and tree-depth saturation counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub params: Vec<ParamDiagnostics>,
    pub max_rhat: f64,
    pub min_ess_bulk: f64,
    pub min_ess_tail: f64,
    pub divergences: usize,
    pub max_depth_hits: usize,
    pub total_draws: usize,
    pub rhat_threshold: f64,
    pub ess_threshold: f64,
    pub pass: bool,
}

/// Run all chains, adapt during warmup, and return constrained draws plus a
/// convergence report.
///
/// Chains run in parallel; each derives its own RNG stream from
/// `(seed, chain index)`, so scheduling cannot change results.
pub fn run_chains<T: Target>(
    target: &T,
    config: &SamplerConfig,
) -> Result<(PosteriorDraws, ConvergenceReport), SamplerError> {
    config.validate()?;
    let chain_results: Vec<ChainOutput> = (0..config.chains)
        .into_par_iter()
        .map(|chain| run_single_chain(target, config, chain))
        .collect();

    let dim = target.dim();
    let mut values = Vec::with_capacity(config.chains * config.draws * dim);
    let mut stats = Vec::with_capacity(config.chains * config.draws);
    for out in &chain_results {
        values.extend_from_slice(&out.values);
        stats.extend_from_slice(&out.stats);
    }
    let draws =
        PosteriorDraws::new(target.param_names(), config.chains, config.draws, values, stats);
    let report = diagnostics::convergence_report(&draws, config);

    for chain in 0..config.chains {
        let divergences = (0..config.draws)
            .filter(|&d| draws.stats[chain * config.draws + d].divergent)
            .count();
        if divergences == config.draws {
            return Err(SamplerError::AllDivergent {
                chain,
                divergences,
                draws: config.draws,
            });
        }
    }
    Ok((draws, report))
}

struct ChainOutput {
    values: Vec<f64>,
    stats: Vec<DrawStats>,
    #[allow(dead_code)]
    adapted_eps: f64,
    #[allow(dead_code)]
    adapted_inv_mass: Vec<f64>,
}

fn run_single_chain<T: Target>(target: &T, config: &SamplerConfig, chain: usize) -> ChainOutput {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(chain as u64);

    let dim = target.dim();
    let theta0 = target.initial_position(&mut rng);
    debug_assert_eq!(theta0.len(), dim);
    let mut point = integrator::Point::at(target, theta0);
    let mut inv_mass = vec![1.0; dim];

    // Warmup: dual averaging throughout, variance windows for the metric.
    let schedule = adapt::warmup_schedule(config.tune);
    let mut eps = adapt::find_reasonable_epsilon(target, &point, &inv_mass, &mut rng);
    let mut da = DualAveraging::new(eps, config.target_accept);
    let mut welford = adapt::RunningVariance::new(dim);
    for step in 0..config.tune {
        let (next, stats) = tree::transition(
            target,
            point,
            eps,
            &inv_mass,
            config.max_tree_depth,
            config.divergence_energy_threshold,
            &mut rng,
        );
        point = next;
        da.update(stats.accept);
        eps = da.current();
        if schedule.collects(step) {
            welford.push(&point.theta);
        }
        if schedule.window_closes(step) {
            inv_mass = welford.regularized_variance();
            welford = adapt::RunningVariance::new(dim);
            // Dual averaging runs continuously across windows; restarting it
            // here would leave the smoothed step size inside the optimizer's
            // transient when the terminal buffer is short.
        }
    }
    eps = da.adapted();

    let mut values = Vec::with_capacity(config.draws * dim);
    let mut stats_out = Vec::with_capacity(config.draws);
    for _ in 0..config.draws {
        let (next, stats) = tree::transition(
            target,
            point,
            eps,
            &inv_mass,
            config.max_tree_depth,
            config.divergence_energy_threshold,
            &mut rng,
        );
        point = next;
        values.extend(target.constrain(&point.theta));
        stats_out.push(stats);
    }
    ChainOutput { values, stats: stats_out, adapted_eps: eps, adapted_inv_mass: inv_mass }
}

/// Sample a momentum vector for the current metric: p_i ~ N(0, 1/√inv_mass_i).
pub(crate) fn sample_momentum<R: Rng>(inv_mass: &[f64], rng: &mut R) -> Vec<f64> {
    inv_mass
        .iter()
        .map(|&v| {
            let z: f64 = rand_distr::StandardNormal.sample(rng);
            z / v.sqrt()
        })
        .collect()
}

pub(crate) fn kinetic_energy(momentum: &[f64], inv_mass: &[f64]) -> f64 {
    0.5 * momentum.iter().zip(inv_mass).map(|(p, v)| p * p * v).sum::<f64>()
}

#[cfg(test)]
mod tests;

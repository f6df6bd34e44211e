//! Does deliberately poor mixing inflate the aggregate interval on the
//! informed model? Compares healthy vs crippled sampler settings.

use debias::experiment::{derive_seed, SamplerSettings};
use debias::math::{mean, quantile};
use debias::models::{build_model, ModelVariant, PriorConfig};
use debias::nuts::run_chains;
use debias::simulate::{
    draw_bias_params, draw_latent_positives, make_population, simulate_feedback_conditional,
};
use debias::types::prevalence;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let seed = 42u64;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "population", 0));
    let pop = make_population(18, (100, 2000), (6.25, 3.75), &mut rng).unwrap();
    let mut lrng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "latent", 0));
    let latent = draw_latent_positives(&pop, &mut lrng);
    let rep_seed = derive_seed(seed, "replicate", 0);
    let mut brng = ChaCha8Rng::seed_from_u64(derive_seed(rep_seed, "bias", 0));
    let bias = draw_bias_params(18, 10.0, &mut brng).unwrap();
    let mut frng = ChaCha8Rng::seed_from_u64(derive_seed(rep_seed, "feedback", 0));
    let ds = simulate_feedback_conditional(&pop, &latent, &bias, &mut frng).unwrap();
    let model = build_model(ModelVariant::HierInformed, ds.clone(), PriorConfig::default());
    let pi = prevalence(&ds);

    for (label, tune, ta, depth) in [
        ("healthy: tune 1500 ta 0.97", 1500usize, 0.97, 10usize),
        ("crippled: tune 60 ta 0.6 depth 4", 60, 0.6, 4),
        ("crippled: tune 50 ta 0.5 depth 3", 50, 0.5, 3),
    ] {
        let settings = SamplerSettings {
            chains: 2,
            draws: 1000,
            tune,
            target_accept: Some(ta),
            max_tree_depth: depth,
        };
        let config = settings.to_config(ModelVariant::HierInformed, 11);
        let (out, report) = run_chains(&model, &config).unwrap();
        let block = model.layout().block("q").unwrap();
        let idx: Vec<usize> = (block.start..block.start + block.len).collect();
        let agg: Vec<f64> = out
            .pooled_rows(&idx)
            .iter()
            .map(|row| row.iter().zip(&pi).map(|(q, p)| q * p).sum())
            .collect();
        println!(
            "{label}: mean {:.3} width {:.3} rhat {:.3} ess {:.0} div {}",
            mean(&agg),
            quantile(&agg, 0.975) - quantile(&agg, 0.025),
            report.max_rhat,
            report.min_ess_bulk,
            report.divergences
        );
    }
}

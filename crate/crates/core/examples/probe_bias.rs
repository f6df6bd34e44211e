//! Bias/variance decomposition of the informed model's replicate errors,
//! at two data scales.

use debias::experiment::{derive_seed, SamplerSettings};
use debias::math::{mean, quantile, sample_variance};
use debias::models::{build_model, ModelVariant, PriorConfig};
use debias::nuts::run_chains;
use debias::simulate::{
    draw_bias_params, draw_latent_positives, make_population, simulate_feedback_conditional,
};
use debias::types::prevalence;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn main() {
    for (lo, hi) in [(100u64, 2000u64), (100, 1000)] {
        let seed = 42u64;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "population", 0));
        let pop = make_population(18, (lo, hi), (6.25, 3.75), &mut rng).unwrap();
        let mut lrng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "latent", 0));
        let latent = draw_latent_positives(&pop, &mut lrng);
        let reps = 20u64;
        let rows: Vec<(f64, f64, bool)> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let rep_seed = derive_seed(seed, "replicate", r);
                let mut brng = ChaCha8Rng::seed_from_u64(derive_seed(rep_seed, "bias", 0));
                let bias = draw_bias_params(18, 10.0, &mut brng).unwrap();
                let mut frng = ChaCha8Rng::seed_from_u64(derive_seed(rep_seed, "feedback", 0));
                let ds = simulate_feedback_conditional(&pop, &latent, &bias, &mut frng).unwrap();
                let model =
                    build_model(ModelVariant::HierInformed, ds.clone(), PriorConfig::default());
                let settings = SamplerSettings {
                    chains: 2,
                    draws: 1000,
                    tune: 1500,
                    target_accept: None,
                    max_tree_depth: 10,
                };
                let config =
                    settings.to_config(ModelVariant::HierInformed, derive_seed(rep_seed, "fit", 3));
                let (out, _) = run_chains(&model, &config).unwrap();
                let block = model.layout().block("q").unwrap();
                let idx: Vec<usize> = (block.start..block.start + block.len).collect();
                let pi = prevalence(&ds);
                let agg: Vec<f64> = out
                    .pooled_rows(&idx)
                    .iter()
                    .map(|row| row.iter().zip(&pi).map(|(q, p)| q * p).sum())
                    .collect();
                let err = mean(&agg) - pop.aggregate_q_star;
                let width = quantile(&agg, 0.975) - quantile(&agg, 0.025);
                let covered = quantile(&agg, 0.025) <= pop.aggregate_q_star
                    && pop.aggregate_q_star <= quantile(&agg, 0.975);
                (err, width, covered)
            })
            .collect();
        let errs: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let widths: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let covered = rows.iter().filter(|r| r.2).count();
        println!(
            "sizes ({lo},{hi}): N={} | err mean {:+.4} sd {:.4} | med width {:.3} | coverage {}/{}",
            pop.total_interactions(),
            mean(&errs),
            sample_variance(&errs).sqrt(),
            quantile(&widths, 0.5),
            covered,
            reps
        );
    }
}

//! How does the aggregate credible-interval width scale with per-cluster
//! data density? One replicate per size range.

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
    for (lo, hi) in [(100u64, 2000u64), (100, 1000), (100, 500), (50, 300)] {
        let seed = 42u64;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "population", 0));
        let pop = make_population(18, (lo, hi), (6.25, 3.75), &mut rng).unwrap();
        let mut lrng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "latent", 0));
        let latent = draw_latent_positives(&pop, &mut lrng);
        let mut covered = 0;
        let mut widths = Vec::new();
        let mut errs = Vec::new();
        let reps = 8;
        for r in 0..reps {
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
                target_accept: Some(0.97),
                max_tree_depth: 10,
            };
            let config = settings.to_config(ModelVariant::HierInformed, derive_seed(rep_seed, "fit", 0));
            let (out, _) = run_chains(&model, &config).unwrap();
            let block = model.layout().block("q").unwrap();
            let idx: Vec<usize> = (block.start..block.start + block.len).collect();
            let pi = prevalence(&ds);
            let agg: Vec<f64> = out
                .pooled_rows(&idx)
                .iter()
                .map(|row| row.iter().zip(&pi).map(|(q, p)| q * p).sum())
                .collect();
            let (lo_q, hi_q) = (quantile(&agg, 0.025), quantile(&agg, 0.975));
            let q_star = pop.aggregate_q_star;
            if lo_q <= q_star && q_star <= hi_q {
                covered += 1;
            }
            widths.push(hi_q - lo_q);
            errs.push((mean(&agg) - q_star).abs());
        }
        println!(
            "sizes ({lo},{hi}): N={} mean_m/cluster={:.0} coverage {covered}/{reps} med width {:.3} med err {:.3}",
            pop.total_interactions(),
            pop.total_interactions() as f64 * 0.16 / 18.0,
            quantile(&widths, 0.5),
            quantile(&errs, 0.5),
        );
    }
}

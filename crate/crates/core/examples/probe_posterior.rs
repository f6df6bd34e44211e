//! Compare the aggregate posterior from the compact sampler configuration
//! against a long-run reference on one replicate dataset, and inspect the
//! hyperparameter posteriors. Diagnoses warmup/exploration problems.

use debias::experiment::{derive_seed, SamplerSettings};
use debias::math::{mean, quantile, sample_variance};
use debias::models::{build_model, ModelVariant, PriorConfig};
use debias::nuts::{run_chains, SamplerConfig};
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
    let dataset = simulate_feedback_conditional(&pop, &latent, &bias, &mut frng).unwrap();

    println!("Q* = {:.4}", pop.aggregate_q_star);
    println!(
        "dataset: N={} M={} Y={}",
        dataset.total_interactions,
        dataset.total_feedback,
        dataset.total_positive()
    );

    let model = build_model(ModelVariant::HierInformed, dataset.clone(), PriorConfig::default());
    let pi = prevalence(&dataset);

    for (label, chains, draws, tune, depth) in [
        ("compact (2x1000, tune 1500)", 2usize, 1000usize, 1500usize, 10usize),
        ("long    (4x4000, tune 4000)", 4, 4000, 4000, 12),
    ] {
        let settings = SamplerSettings {
            chains,
            draws,
            tune,
            target_accept: Some(0.97),
            max_tree_depth: depth,
        };
        let config: SamplerConfig = settings.to_config(ModelVariant::HierInformed, 7);
        let t = std::time::Instant::now();
        let (out, report) = run_chains(&model, &config).unwrap();
        let block = model.layout().block("q").unwrap();
        let indices: Vec<usize> = (block.start..block.start + block.len).collect();
        let rows = out.pooled_rows(&indices);
        let agg: Vec<f64> = rows
            .iter()
            .map(|row| row.iter().zip(&pi).map(|(q, p)| q * p).sum())
            .collect();
        let lo = quantile(&agg, 0.025);
        let hi = quantile(&agg, 0.975);
        let a_q = out.pooled_column(out.param_index("alpha_q").unwrap());
        let b_q = out.pooled_column(out.param_index("beta_q").unwrap());
        println!(
            "{label}: mean {:.4} ci ({:.4},{:.4}) width {:.4} | alpha_q mean {:.2} sd {:.2} | beta_q mean {:.2} sd {:.2} | rhat {:.4} ess {:.0} div {} depth_hits {} wall {:?}",
            mean(&agg),
            lo,
            hi,
            hi - lo,
            mean(&a_q),
            sample_variance(&a_q).sqrt(),
            mean(&b_q),
            sample_variance(&b_q).sqrt(),
            report.max_rhat,
            report.min_ess_bulk,
            report.divergences,
            report.max_depth_hits,
            t.elapsed()
        );
        // Per-cluster posterior sd of q, first 6 clusters.
        let sds: Vec<f64> = (0..6)
            .map(|j| {
                let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                sample_variance(&col).sqrt()
            })
            .collect();
        println!("  q sd (first 6): {sds:.3?}");
    }
}

//! Desk-scale pilot of the statistical experiments; prints the margins the
//! acceptance suite relies on. Run with `cargo run --example pilot --release`.

use std::time::Instant;

use debias::experiment::{
    run_experiment, ExperimentMode, ExperimentSpec, SamplerSettings,
};
use debias::models::ModelVariant;

fn main() {
    let t0 = Instant::now();

    // Headline single fit: timing, divergences, recovery.
    let mut spec = ExperimentSpec::headline(42);
    spec.models = vec![ModelVariant::Basic, ModelVariant::HierInformed];
    let start = Instant::now();
    let report = run_experiment(&spec).unwrap();
    println!("== headline (seed 42), wall {:?}", start.elapsed());
    let q_star = report.truth.as_ref().unwrap().aggregate_q_star;
    println!("Q* = {q_star:.4}, M/N = {:.3}", report.feedback_rate.unwrap());
    for m in &report.methods {
        println!(
            "  {:>16}: est {:.4} err {:.3} ci {:?} covers {:?} div {:?} rhat {:?}",
            m.method,
            m.estimate,
            m.abs_error.unwrap_or(f64::NAN),
            m.ci.map(|(a, b)| format!("({a:.3},{b:.3})")),
            m.covers_truth,
            m.divergences,
            m.convergence.as_ref().map(|c| format!("{:.3}", c.max_rhat)),
        );
    }
    if let Some(loo) = &report.loo {
        for e in &loo.entries {
            println!(
                "  loo {:>16}: elpd {:.2} delta {:.2} weight {:.2} p_loo {:.2} max_k {:.2}",
                e.model, e.elpd_loo, e.delta_elpd, e.weight, e.p_loo, e.max_pareto_k
            );
        }
    }

    // Headline with Enhanced for the LOO gap.
    let mut spec = ExperimentSpec::headline(42);
    spec.models =
        vec![ModelVariant::Basic, ModelVariant::Enhanced, ModelVariant::HierInformed];
    spec.sampler = SamplerSettings {
        chains: 2,
        draws: 1000,
        tune: 1000,
        target_accept: None,
        max_tree_depth: 10,
    };
    let start = Instant::now();
    let report = run_experiment(&spec).unwrap();
    println!("== loo panel (compact), wall {:?}", start.elapsed());
    if let Some(loo) = &report.loo {
        for e in &loo.entries {
            println!(
                "  loo {:>16}: elpd {:.2} delta {:.2} weight {:.2} p_loo {:.2} max_k {:.2}",
                e.model, e.elpd_loo, e.delta_elpd, e.weight, e.p_loo, e.max_pareto_k
            );
        }
    }

    // Kappa sweep.
    let mut spec = ExperimentSpec::kappa_sweep(42);
    spec.models = vec![ModelVariant::HierInformed];
    let start = Instant::now();
    let report = run_experiment(&spec).unwrap();
    println!("== kappa sweep (seed 42), wall {:?}", start.elapsed());
    for cell in &report.sweep {
        print!(
            "  kappa {:>4}: M/N {:.3} |",
            cell.kappa_max, cell.feedback_rate
        );
        for m in &cell.methods {
            print!(" {} {:.3}", m.method, m.abs_error.unwrap_or(f64::NAN));
        }
        println!(" warnings {}", cell.convergence_warnings.len());
    }

    // Coverage study, 20 replicates.
    let spec = ExperimentSpec::coverage(42, 20);
    let start = Instant::now();
    let report = run_experiment(&spec).unwrap();
    println!("== coverage 20 reps (seed 42), wall {:?}", start.elapsed());
    let cov = report.coverage.as_ref().unwrap();
    for m in &cov.methods {
        println!(
            "  {:>16}: covered {}/{} wilson ({:.3},{:.3}) med_err {:.3} med_width {:?}",
            m.method,
            m.covered,
            m.total,
            m.coverage_wilson_ci.0,
            m.coverage_wilson_ci.1,
            m.median_abs_error,
            m.median_ci_width.map(|w| format!("{w:.3}")),
        );
    }
    let divergence_rates: Vec<f64> = cov
        .replicates
        .iter()
        .flat_map(|r| r.methods.iter())
        .filter(|m| m.method == "hier_informed")
        .map(|m| m.divergences.unwrap_or(0) as f64 / 2000.0)
        .collect();
    println!(
        "  hier_informed divergence rate: mean {:.4}, max {:.4}",
        divergence_rates.iter().sum::<f64>() / divergence_rates.len() as f64,
        divergence_rates.iter().cloned().fold(0.0, f64::max)
    );

    println!("total pilot wall time {:?}", t0.elapsed());
}

//! Brute-force quadrature oracle for the sampler + model stack.
//!
//! On a single-cluster dataset the informed model's posterior factorizes,
//! given the latent quality, into a hyperparameter integral and a rate
//! integral, so the exact marginal of `q` is computable by two-dimensional
//! quadrature. The NUTS draws must reproduce it.

use debias::math::{mean, quantile, sample_variance};
use debias::models::{build_model, ModelVariant, PriorConfig};
use debias::nuts::{run_chains, SamplerConfig};
use debias::types::{validate_dataset, ClusterStats};

const N: u64 = 1000;
const M: u64 = 150;
const Y: u64 = 45;

fn ln_beta_pdf(q: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * q.ln() + (b - 1.0) * (1.0 - q).ln() - debias::math::ln_beta(a, b)
}

fn ln_half_normal(v: f64, sigma: f64) -> f64 {
    0.5 * (2.0 / std::f64::consts::PI).ln() - sigma.ln() - v * v / (2.0 * sigma * sigma)
}

fn ln_normal(x: f64, mu: f64, sigma: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI).ln() - sigma.ln()
        - (x - mu) * (x - mu) / (2.0 * sigma * sigma)
}

/// Exact (to quadrature accuracy) marginal density of q on a grid.
fn quadrature_marginal(priors: &PriorConfig) -> (Vec<f64>, Vec<f64>) {
    let q_grid: Vec<f64> = (1..600).map(|i| i as f64 / 600.0).collect();

    // Hyperparameter factor: H(q) = ∫∫ HalfN(a) HalfN(b) Beta(q | a, b) da db.
    let hyper_grid: Vec<f64> = (1..=240).map(|i| i as f64 * 0.2).collect(); // (0, 48]
    // Rate factor: R(q) = ∫∫ N(u) N(w) Bin(M | N, s) Bin(Y | M, p) du dw.
    let u_grid: Vec<f64> = (0..240)
        .map(|i| priors.informed_logrpos_center - 5.0 * 0.5 + i as f64 * (10.0 * 0.5 / 239.0))
        .collect();
    let w_grid: Vec<f64> = (0..240)
        .map(|i| priors.informed_logkappa_center - 5.0 * 0.6 + i as f64 * (10.0 * 0.6 / 239.0))
        .collect();

    let density: Vec<f64> = q_grid
        .iter()
        .map(|&q| {
            let mut hyper = 0.0;
            for &a in &hyper_grid {
                for &b in &hyper_grid {
                    hyper += (ln_half_normal(a, priors.halfnormal_sigma)
                        + ln_half_normal(b, priors.halfnormal_sigma)
                        + ln_beta_pdf(q, a, b))
                    .exp();
                }
            }
            let mut rate = 0.0;
            for &u in &u_grid {
                let r_pos = u.exp().min(1.0 - 1e-9);
                for &w in &w_grid {
                    let r_neg = (r_pos * w.exp()).min(1.0 - 1e-9);
                    let s = q * r_pos + (1.0 - q) * r_neg;
                    let p = q * r_pos / s;
                    let ll = debias::math::binomial_ln_pmf(M, N, s)
                        + debias::math::binomial_ln_pmf(Y, M, p)
                        + ln_normal(u, priors.informed_logrpos_center, priors.informed_logrpos_sigma)
                        + ln_normal(
                            w,
                            priors.informed_logkappa_center,
                            priors.informed_logkappa_sigma,
                        );
                    rate += ll.exp();
                }
            }
            hyper * rate
        })
        .collect();
    (q_grid, density)
}

fn grid_quantile(grid: &[f64], density: &[f64], p: f64) -> f64 {
    let total: f64 = density.iter().sum();
    let mut cum = 0.0;
    for (x, d) in grid.iter().zip(density) {
        cum += d / total;
        if cum >= p {
            return *x;
        }
    }
    *grid.last().unwrap()
}

#[test]
fn nuts_matches_quadrature_on_informed_single_cluster() {
    let dataset = validate_dataset(vec![ClusterStats::new("c0", N, M, Y)]).unwrap();
    let priors = PriorConfig::default();
    let model = build_model(ModelVariant::HierInformed, dataset, priors.clone());
    let config = SamplerConfig::new(4, 2000, 1500, 0.95, 42);
    let (draws, report) = run_chains(&model, &config).unwrap();
    assert!(report.max_rhat < 1.01, "rhat {}", report.max_rhat);

    let qi = draws.param_index("q[c0]").unwrap();
    let q = draws.pooled_column(qi);

    let (grid, density) = quadrature_marginal(&priors);
    let total: f64 = density.iter().sum();
    let exact_mean: f64 =
        grid.iter().zip(&density).map(|(x, d)| x * d).sum::<f64>() / total;
    let exact_var: f64 = grid
        .iter()
        .zip(&density)
        .map(|(x, d)| (x - exact_mean) * (x - exact_mean) * d)
        .sum::<f64>()
        / total;

    let sampled_mean = mean(&q);
    let sampled_sd = sample_variance(&q).sqrt();
    assert!(
        (sampled_mean - exact_mean).abs() < 0.02,
        "posterior mean: sampled {sampled_mean:.4}, quadrature {exact_mean:.4}"
    );
    assert!(
        (sampled_sd - exact_var.sqrt()).abs() / exact_var.sqrt() < 0.15,
        "posterior sd: sampled {sampled_sd:.4}, quadrature {:.4}",
        exact_var.sqrt()
    );
    for p in [0.05, 0.25, 0.5, 0.75, 0.95] {
        let got = quantile(&q, p);
        let want = grid_quantile(&grid, &density, p);
        assert!(
            (got - want).abs() < 0.03,
            "quantile {p}: sampled {got:.4}, quadrature {want:.4}"
        );
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, ContinuousCDF};

use super::*;
use crate::math::{mean, quantile, sample_variance};
use crate::types::{validate_dataset, ClusterStats};

/// Independent Gaussian target with fixed per-coordinate standard deviations.
struct GaussianTarget {
    sd: Vec<f64>,
}

impl GaussianTarget {
    fn standard(dim: usize) -> Self {
        Self { sd: vec![1.0; dim] }
    }
}

impl Target for GaussianTarget {
    fn dim(&self) -> usize {
        self.sd.len()
    }

    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let mut lp = 0.0;
        for i in 0..theta.len() {
            let v = self.sd[i] * self.sd[i];
            lp -= 0.5 * theta[i] * theta[i] / v;
            grad[i] = -theta[i] / v;
        }
        lp
    }

    fn initial_position(&self, rng: &mut dyn rand::RngCore) -> Vec<f64> {
        use rand::Rng;
        (0..self.sd.len()).map(|_| rng.random::<f64>() - 0.5).collect()
    }

    fn param_names(&self) -> Vec<String> {
        (0..self.sd.len()).map(|i| format!("x{i}")).collect()
    }

    fn constrain(&self, theta: &[f64]) -> Vec<f64> {
        theta.to_vec()
    }
}

#[test]
fn leapfrog_zero_step_is_identity() {
    let target = GaussianTarget::standard(3);
    let theta = vec![0.3, -0.7, 1.1];
    let momentum = vec![0.5, 0.2, -0.4];
    let step = leapfrog(
        &theta,
        &momentum,
        0.0,
        |t, g| target.logp_grad(t, g),
        &[1.0, 1.0, 1.0],
    );
    assert_eq!(step.theta, theta);
    assert_eq!(step.momentum, momentum);
}

#[test]
fn leapfrog_is_reversible() {
    let target = GaussianTarget { sd: vec![1.0, 2.0] };
    let theta = vec![0.4, -1.2];
    let momentum = vec![0.9, 0.1];
    let mass = vec![1.0, 4.0];
    let grad_fn = |t: &[f64], g: &mut [f64]| target.logp_grad(t, g);
    let fwd = leapfrog(&theta, &momentum, 0.2, grad_fn, &mass);
    let neg: Vec<f64> = fwd.momentum.iter().map(|p| -p).collect();
    let back = leapfrog(&fwd.theta, &neg, 0.2, grad_fn, &mass);
    for i in 0..2 {
        assert!((back.theta[i] - theta[i]).abs() < 1e-12);
        assert!((-back.momentum[i] - momentum[i]).abs() < 1e-12);
    }
}

#[test]
fn leapfrog_energy_drift_is_bounded() {
    // 100 steps at eps = 0.1 on a standard Gaussian: the energy error
    // oscillates at O(eps^2) without secular growth, and the end-to-end
    // drift stays below 1e-3.
    let target = GaussianTarget::standard(1);
    let mass = vec![1.0];
    let mut theta = vec![1.0];
    let mut momentum = vec![0.0];
    let h = |t: &[f64], p: &[f64]| 0.5 * t[0] * t[0] + 0.5 * p[0] * p[0];
    let h0 = h(&theta, &momentum);
    let mut max_oscillation = 0.0_f64;
    for _ in 0..100 {
        let step = leapfrog(
            &theta,
            &momentum,
            0.1,
            |t, g| target.logp_grad(t, g),
            &mass,
        );
        theta = step.theta;
        momentum = step.momentum;
        max_oscillation = max_oscillation.max((h(&theta, &momentum) - h0).abs());
    }
    let drift = (h(&theta, &momentum) - h0).abs();
    assert!(drift <= 1e-3, "energy drift {drift}");
    // Bounded oscillation at the eps^2/8 scale, not linear accumulation.
    assert!(max_oscillation <= 2e-3, "energy oscillation {max_oscillation}");
}

#[test]
fn pathological_step_size_returns_initial_point_with_divergence() {
    let target = GaussianTarget::standard(2);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let point = integrator::Point::at(&target, vec![0.1, -0.2]);
    let start = point.theta.clone();
    let (end, stats) =
        tree::transition(&target, point, 1e6, &[1.0, 1.0], 10, 1000.0, &mut rng);
    assert!(stats.divergent);
    assert_eq!(end.theta, start);
}

#[test]
fn gaussian_ten_dim_recovers_moments() {
    let target = GaussianTarget::standard(10);
    let config = SamplerConfig::new(4, 1000, 500, 0.8, 42);
    let (draws, report) = run_chains(&target, &config).unwrap();
    assert_eq!(draws.total_draws(), 4000);
    for p in 0..10 {
        let pooled = draws.pooled_column(p);
        let ess_p = report.params[p].ess_bulk.max(1.0);
        let se = (1.0 / ess_p).sqrt();
        let m = mean(&pooled);
        assert!(m.abs() < 3.0 * se, "coord {p}: mean {m}, se {se}");
        let v = sample_variance(&pooled);
        assert!((v - 1.0).abs() < 0.15, "coord {p}: var {v}");
    }
    assert!(report.max_rhat < 1.02, "rhat {}", report.max_rhat);
}

#[test]
fn acceptance_statistic_tracks_target() {
    let target = GaussianTarget::standard(5);
    let config = SamplerConfig::new(2, 800, 500, 0.8, 7);
    let (draws, _) = run_chains(&target, &config).unwrap();
    let accept = draws.mean_accept();
    assert!(
        (accept - 0.8).abs() < 0.05,
        "mean acceptance {accept} vs target 0.8"
    );
}

#[test]
fn mass_adaptation_learns_scales() {
    // Coordinates with sd (1, 10) should adapt the inverse metric diagonal
    // to roughly (1, 100).
    let target = GaussianTarget { sd: vec![1.0, 10.0] };
    let config = SamplerConfig::new(1, 10, 1000, 0.8, 11);
    let out = run_single_chain(&target, &config, 0);
    let ratio = out.adapted_inv_mass[1] / out.adapted_inv_mass[0];
    assert!(
        (50.0..200.0).contains(&ratio),
        "adapted metric ratio {ratio}, expected within factor 2 of 100"
    );
}

#[test]
fn insufficient_warmup_is_rejected() {
    let target = GaussianTarget::standard(2);
    let config = SamplerConfig::new(1, 10, 49, 0.8, 1);
    assert!(matches!(
        run_chains(&target, &config),
        Err(SamplerError::InsufficientWarmup(49))
    ));
}

#[test]
fn same_seed_reproduces_draws_exactly() {
    let target = GaussianTarget::standard(3);
    let config = SamplerConfig::new(2, 200, 200, 0.8, 9);
    let (a, _) = run_chains(&target, &config).unwrap();
    let (b, _) = run_chains(&target, &config).unwrap();
    assert_eq!(a.values_flat(), b.values_flat());
    let mut config2 = config;
    config2.seed = 10;
    let (c, _) = run_chains(&target, &config2).unwrap();
    assert_ne!(a.values_flat(), c.values_flat());
}

#[test]
fn conjugate_posterior_matches_analytic_beta() {
    // Fixed unit hyperparameters on a single cluster (n=100, m=30, y=20):
    // the q posterior is exactly Beta(21, 11).
    let dataset = validate_dataset(vec![ClusterStats::new("c0", 100, 30, 20)]).unwrap();
    let model =
        crate::models::ModelInstance::basic_with_fixed_hypers(dataset, 1.0, 1.0, 1.0, 1.0);
    let config = SamplerConfig::new(4, 1000, 500, 0.9, 42);
    let (draws, report) = run_chains(&model, &config).unwrap();

    let qi = draws.param_index("q[c0]").unwrap();
    let q: Vec<f64> = draws.pooled_column(qi);
    let analytic = Beta::new(21.0, 11.0).unwrap();
    let expected_mean = 21.0 / 32.0;
    let expected_sd = (21.0 * 11.0 / (32.0_f64.powi(2) * 33.0)).sqrt();

    let m = mean(&q);
    assert!((m - expected_mean).abs() < 0.01, "posterior mean {m}");
    let sd = sample_variance(&q).sqrt();
    assert!((sd - expected_sd).abs() / expected_sd < 0.15, "posterior sd {sd}");
    for p in [0.05, 0.25, 0.5, 0.75, 0.95] {
        let got = quantile(&q, p);
        let want = analytic.inverse_cdf(p);
        assert!((got - want).abs() < 0.02, "quantile {p}: {got} vs {want}");
    }
    assert!(report.max_rhat < 1.01, "rhat {}", report.max_rhat);
    assert!(report.min_ess_bulk > 400.0, "ess {}", report.min_ess_bulk);

    // The s posterior is the independent Beta(31, 71).
    let si = draws.param_index("s[c0]").unwrap();
    let s = draws.pooled_column(si);
    assert!((mean(&s) - 31.0 / 102.0).abs() < 0.01);
}

#[test]
fn constrained_draws_respect_supports() {
    let dataset = validate_dataset(vec![
        ClusterStats::new("a", 200, 30, 10),
        ClusterStats::new("b", 150, 5, 4),
    ])
    .unwrap();
    let model = crate::models::build_model(
        crate::models::ModelVariant::Basic,
        dataset,
        crate::models::PriorConfig::default(),
    );
    let config = SamplerConfig::new(2, 200, 300, 0.9, 5);
    let (draws, _) = run_chains(&model, &config).unwrap();
    for (i, name) in draws.param_names.iter().enumerate() {
        let col = draws.pooled_column(i);
        if name.starts_with("s[") || name.starts_with("q[") {
            assert!(col.iter().all(|&v| v > 0.0 && v < 1.0), "{name} out of (0,1)");
        } else {
            assert!(col.iter().all(|&v| v > 0.0), "{name} not positive");
        }
    }
}

//! Shared numerical helpers: special functions, log-space arithmetic,
//! and quantile utilities used across models, samplers, and diagnostics.

use statrs::distribution::ContinuousCDF;
use statrs::function::gamma;

/// Natural log of the gamma function.
pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// Digamma function ψ(x) = d/dx ln Γ(x).
pub fn digamma(x: f64) -> f64 {
    gamma::digamma(x)
}

/// Natural log of the beta function B(a, b).
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Natural log of the binomial coefficient C(n, k).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Log-pmf of the binomial distribution, including the normalizing constant.
/// `p` must lie strictly inside (0, 1) unless the corresponding count is zero.
pub fn binomial_ln_pmf(k: u64, n: u64, p: f64) -> f64 {
    debug_assert!(k <= n);
    if n == 0 {
        return 0.0;
    }
    let mut lp = ln_choose(n, k);
    if k > 0 {
        lp += k as f64 * p.ln();
    }
    if k < n {
        lp += (n - k) as f64 * (1.0 - p).ln();
    }
    lp
}

/// Log-pmf of the beta-binomial distribution with shape parameters (a, b).
pub fn beta_binomial_ln_pmf(k: u64, n: u64, a: f64, b: f64) -> f64 {
    debug_assert!(k <= n);
    if n == 0 {
        return 0.0;
    }
    ln_choose(n, k) + ln_beta(a + k as f64, b + (n - k) as f64) - ln_beta(a, b)
}

/// log(exp(a) + exp(b)) without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// log Σ exp(x_i) without overflow; −∞ for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Standard normal quantile function Φ⁻¹(p) for p ∈ (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile probability must be in (0,1)");
    let std_normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    std_normal.inverse_cdf(p)
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (denominator n − 1).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n as f64 - 1.0)
}

/// Quantile with linear interpolation between order statistics, on an
/// already sorted slice. `p` is clamped to [0, 1].
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let p = p.clamp(0.0, 1.0);
    let h = p * (sorted.len() as f64 - 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = h - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// Quantile of an unsorted slice; copies and sorts internally.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quantile input"));
    quantile_sorted(&v, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ln_choose_small_values() {
        assert_abs_diff_eq!(ln_choose(10, 4), 210.0_f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(ln_choose(5, 0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ln_choose(5, 5), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn digamma_known_values() {
        // ψ(1) = −γ, ψ(1/2) = −γ − 2 ln 2
        let euler = 0.577_215_664_901_532_9;
        assert_abs_diff_eq!(digamma(1.0), -euler, epsilon = 1e-9);
        assert_abs_diff_eq!(digamma(0.5), -euler - 2.0 * 2.0_f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn binomial_pmf_sums_to_one() {
        let n = 12;
        let p = 0.3;
        let total: f64 = (0..=n).map(|k| binomial_ln_pmf(k, n, p).exp()).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn beta_binomial_pmf_sums_to_one() {
        let n = 9;
        let total: f64 = (0..=n).map(|k| beta_binomial_ln_pmf(k, n, 2.5, 4.0).exp()).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [-1.0_f64, 0.5, 2.0];
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert_abs_diff_eq!(log_sum_exp(&xs), direct, epsilon = 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn normal_quantile_symmetry() {
        assert_abs_diff_eq!(normal_quantile(0.975), 1.959964, epsilon = 1e-5);
        assert_abs_diff_eq!(normal_quantile(0.5), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(normal_quantile(0.025), -normal_quantile(0.975), epsilon = 1e-9);
    }

    #[test]
    fn quantile_interpolates() {
        let xs: Vec<f64> = (1..=5).map(|i| i as f64).collect();
        assert_abs_diff_eq!(quantile(&xs, 0.5), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(quantile(&xs, 0.25), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(quantile(&xs, 0.1), 1.4, epsilon = 1e-12);
    }
}

//! Convergence diagnostics: split rank-normalized R-hat and
//! autocovariance-based bulk/tail effective sample size.

use crate::math::{log_sum_exp, mean, normal_quantile, quantile, sample_variance};

use super::{ConvergenceReport, ParamDiagnostics, PosteriorDraws, SamplerConfig};

/// Which ESS flavor to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EssKind {
    /// ESS of rank-normalized draws.
    Bulk,
    /// Minimum ESS of the 5% and 95% quantile indicator sequences.
    Tail,
}

/// Split each chain in half, dropping the middle draw of odd-length chains.
fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(chains.len() * 2);
    for chain in chains {
        let n = chain.len();
        let half = n / 2;
        out.push(chain[..half].to_vec());
        out.push(chain[n - half..].to_vec());
    }
    out
}

/// Replace draws with normal scores of their pooled ranks (average ranks on
/// ties).
fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = chains.iter().map(|c| c.len()).sum();
    let mut indexed: Vec<(f64, usize, usize)> = Vec::with_capacity(total);
    for (ci, chain) in chains.iter().enumerate() {
        for (di, &v) in chain.iter().enumerate() {
            indexed.push((v, ci, di));
        }
    }
    indexed.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("NaN in draws"));

    let mut out: Vec<Vec<f64>> = chains.iter().map(|c| vec![0.0; c.len()]).collect();
    let s = total as f64;
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j + 1 < total && indexed[j + 1].0 == indexed[i].0 {
            j += 1;
        }
        // Average rank for the tie run [i, j]; ranks are 1-based.
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let z = normal_quantile((avg_rank - 0.375) / (s + 0.25));
        for item in indexed.iter().take(j + 1).skip(i) {
            out[item.1][item.2] = z;
        }
        i = j + 1;
    }
    out
}

fn classic_rhat(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0) as f64;
    if n < 2.0 || m < 2.0 {
        return f64::NAN;
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let vars: Vec<f64> = chains.iter().map(|c| sample_variance(c)).collect();
    let w = mean(&vars);
    let b_over_n = sample_variance(&means);
    if w <= 0.0 {
        // Zero within-chain variance: identical constants across chains read
        // as converged; distinct constants as maximally unconverged.
        return if b_over_n <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * w + b_over_n;
    (var_plus / w).sqrt()
}

/// Split-chain rank-normalized potential scale reduction.
///
/// Requires at least 2 chains of at least 4 draws; returns 1.0 by convention
/// when the draws carry no variance at all.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    assert!(chains.len() >= 2, "split_rhat needs >= 2 chains");
    assert!(chains.iter().all(|c| c.len() >= 4), "split_rhat needs >= 4 draws per chain");
    let split = split_chains(chains);
    let normalized = rank_normalize(&split);
    classic_rhat(&normalized)
}

/// Per-chain autocovariance at a lag (biased, divided by n).
fn autocov(chain: &[f64], chain_mean: f64, lag: usize) -> f64 {
    let n = chain.len();
    if lag >= n {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n - lag {
        sum += (chain[i] - chain_mean) * (chain[i + lag] - chain_mean);
    }
    sum / n as f64
}

/// Multi-chain ESS with Geyer initial-monotone truncation of the pairwise
/// autocorrelation sums.
fn ess_core(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if n < 4 || m == 0 {
        return 0.0;
    }
    let chains: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let acov0: Vec<f64> = chains.iter().zip(&means).map(|(c, &mu)| autocov(c, mu, 0)).collect();
    let nf = n as f64;
    let mean_var = mean(&acov0) * nf / (nf - 1.0);
    let var_plus = if m > 1 {
        mean_var * (nf - 1.0) / nf + sample_variance(&means)
    } else {
        mean_var
    };
    if var_plus <= 0.0 || !var_plus.is_finite() {
        return 0.0;
    }

    let rho = |lag: usize| -> f64 {
        let acov_lag: f64 = chains
            .iter()
            .zip(&means)
            .map(|(c, &mu)| autocov(c, mu, lag))
            .sum::<f64>()
            / m as f64;
        1.0 - (mean_var - acov_lag) / var_plus
    };

    // Pair sums P_k = rho_{2k} + rho_{2k+1} with P_0 = 1 + rho_1; keep while
    // positive, enforce monotone nonincreasing.
    let max_lag = n - 4;
    let mut pair_sums: Vec<f64> = Vec::new();
    let mut lag = 1usize;
    let p0 = 1.0 + rho(1);
    if p0 > 0.0 {
        pair_sums.push(p0);
        lag = 2;
        while lag + 1 <= max_lag {
            let p = rho(lag) + rho(lag + 1);
            if p <= 0.0 {
                break;
            }
            pair_sums.push(p);
            lag += 2;
        }
    }
    let _ = lag;
    let mut running = f64::INFINITY;
    let mut tau = -1.0;
    for p in &pair_sums {
        running = running.min(*p);
        tau += 2.0 * running;
    }
    let tau = tau.max(1.0 / (m as f64 * nf));
    (m as f64 * nf / tau).max(0.0)
}

/// Effective sample size of one parameter across chains.
///
/// `Bulk` rank-normalizes the split chains first; `Tail` takes the minimum
/// ESS over the 5%/95% quantile indicator sequences. Constant draws return 0.
pub fn ess(chains: &[Vec<f64>], kind: EssKind) -> f64 {
    assert!(!chains.is_empty());
    assert!(chains.iter().all(|c| c.len() >= 4), "ess needs >= 4 draws per chain");
    let split = split_chains(chains);
    match kind {
        EssKind::Bulk => {
            if is_constant(&split) {
                return 0.0;
            }
            ess_core(&rank_normalize(&split))
        }
        EssKind::Tail => {
            if is_constant(&split) {
                return 0.0;
            }
            let pooled: Vec<f64> = split.iter().flatten().copied().collect();
            [0.05, 0.95]
                .iter()
                .map(|&p| {
                    let q = quantile(&pooled, p);
                    let indicators: Vec<Vec<f64>> = split
                        .iter()
                        .map(|c| c.iter().map(|&x| f64::from(u8::from(x <= q))).collect())
                        .collect();
                    if is_constant(&indicators) {
                        0.0
                    } else {
                        ess_core(&indicators)
                    }
                })
                .fold(f64::INFINITY, f64::min)
        }
    }
}

fn is_constant(chains: &[Vec<f64>]) -> bool {
    let first = chains.iter().flat_map(|c| c.iter()).next().copied();
    match first {
        None => true,
        Some(v) => chains.iter().flatten().all(|&x| x == v),
    }
}

/// Assemble the convergence report for a finished run.
pub(crate) fn convergence_report(
    draws: &PosteriorDraws,
    config: &SamplerConfig,
) -> ConvergenceReport {
    let mut params = Vec::with_capacity(draws.dim);
    for p in 0..draws.dim {
        let chains: Vec<Vec<f64>> = (0..draws.chains).map(|c| draws.column(c, p)).collect();
        let (rhat, ess_bulk, ess_tail) = if draws.chains >= 2 && draws.draws_per_chain >= 4 {
            (
                split_rhat(&chains).min(1e6),
                ess(&chains, EssKind::Bulk),
                ess(&chains, EssKind::Tail),
            )
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        params.push(ParamDiagnostics {
            name: draws.param_names[p].clone(),
            rhat,
            ess_bulk,
            ess_tail,
        });
    }
    let max_rhat = params.iter().map(|p| p.rhat).fold(f64::NEG_INFINITY, f64::max);
    let min_ess_bulk = params.iter().map(|p| p.ess_bulk).fold(f64::INFINITY, f64::min);
    let min_ess_tail = params.iter().map(|p| p.ess_tail).fold(f64::INFINITY, f64::min);
    let divergences = draws.divergence_count();
    let pass = max_rhat < config.rhat_threshold
        && min_ess_bulk > config.ess_threshold
        && min_ess_tail > config.ess_threshold;
    ConvergenceReport {
        params,
        max_rhat,
        min_ess_bulk,
        min_ess_tail,
        divergences,
        max_depth_hits: draws.max_depth_hits(config.max_tree_depth as u32),
        total_draws: draws.total_draws(),
        rhat_threshold: config.rhat_threshold,
        ess_threshold: config.ess_threshold,
        pass,
    }
}

/// Log-pointwise-predictive-density helper shared with the evaluation module:
/// log of the draw-averaged density, `logsumexp(column) − log S`.
#[allow(dead_code)]
pub(crate) fn lpd(column: &[f64]) -> f64 {
    log_sum_exp(column) - (column.len() as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_chains(chains: usize, draws: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..chains)
            .map(|_| (0..draws).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect()
    }

    #[test]
    fn rhat_near_one_for_iid_chains() {
        let chains = normal_chains(4, 1000, 1);
        let r = split_rhat(&chains);
        assert!((0.999..1.01).contains(&r), "rhat {r}");
    }

    #[test]
    fn rhat_large_for_separated_chains() {
        let a = vec![0.0; 100];
        let b = vec![1.0; 100];
        let r = split_rhat(&[a, b]);
        assert!(r > 1.1, "rhat {r}");
    }

    #[test]
    fn rhat_one_for_identical_constant_draws() {
        let chains = vec![vec![2.5; 50], vec![2.5; 50]];
        assert_eq!(split_rhat(&chains), 1.0);
    }

    #[test]
    fn ess_close_to_sample_size_for_iid() {
        let chains = normal_chains(4, 2000, 2);
        let total = 8000.0;
        let bulk = ess(&chains, EssKind::Bulk);
        assert!((bulk - total).abs() / total < 0.2, "bulk ess {bulk}");
        let tail = ess(&chains, EssKind::Tail);
        assert!(tail > 0.3 * total, "tail ess {tail}");
    }

    #[test]
    fn ess_matches_ar1_theory() {
        // AR(1) with coefficient rho has ESS ≈ S (1-rho)/(1+rho).
        let rho = 0.9_f64;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                let mut x = 0.0;
                (0..4000)
                    .map(|_| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        x = rho * x + (1.0 - rho * rho).sqrt() * e;
                        x
                    })
                    .collect()
            })
            .collect();
        let total = 16_000.0;
        let expected = total * (1.0 - rho) / (1.0 + rho);
        let got = ess(&chains, EssKind::Bulk);
        assert!(
            (got - expected).abs() / expected < 0.3,
            "ess {got}, expected ~{expected}"
        );
    }

    #[test]
    fn ess_zero_for_constant_chain() {
        let chains = vec![vec![1.0; 100], vec![1.0; 100]];
        assert_eq!(ess(&chains, EssKind::Bulk), 0.0);
        assert_eq!(ess(&chains, EssKind::Tail), 0.0);
    }

    #[test]
    fn rank_normalize_is_monotone() {
        let chains = vec![vec![10.0, -1.0, 3.0, 2.0], vec![0.0, 5.0, -2.0, 7.0]];
        let z = rank_normalize(&chains);
        let mut pairs: Vec<(f64, f64)> = chains
            .iter()
            .flatten()
            .copied()
            .zip(z.iter().flatten().copied())
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in pairs.windows(2) {
            assert!(w[0].1 < w[1].1, "normal scores must preserve order");
        }
    }

    #[test]
    fn split_halves_detect_trends() {
        // A strong within-chain trend splits into separated half-chains.
        let trend: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let noisy: Vec<f64> = (0..200)
            .map(|i| i as f64 + rng.random::<f64>())
            .collect();
        let r = split_rhat(&[trend, noisy]);
        assert!(r > 1.2, "trending chains should fail split rhat, got {r}");
    }
}

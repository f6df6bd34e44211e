//! Log-density and analytic-gradient evaluation for all model variants.
//!
//! Everything operates in unconstrained space: probabilities enter through
//! logit coordinates, positive parameters through log coordinates, and the
//! informed model's log-rates are unconstrained as-is. Transform Jacobians
//! are accumulated once per coordinate; priors and likelihood terms then add
//! their own contributions on top.

use std::f64::consts::PI;

use crate::math::{digamma, ln_beta, ln_choose, ln_gamma};

use super::{
    ln_sigmoid, sigmoid, BasicHypers, ModelInstance, ModelVariant, Transform, RATE_CLIP,
};

struct Acc<'a> {
    prior_jac: f64,
    lik: f64,
    grad: Option<&'a mut [f64]>,
}

impl Acc<'_> {
    fn add_grad(&mut self, index: usize, value: f64) {
        if let Some(g) = self.grad.as_deref_mut() {
            g[index] += value;
        }
    }
}

/// A logit coordinate expanded once: value, complement, and stable logs.
#[derive(Clone, Copy)]
struct Prob {
    p: f64,
    comp: f64,
    ln_p: f64,
    ln_comp: f64,
}

fn prob(x: f64) -> Prob {
    Prob { p: sigmoid(x), comp: sigmoid(-x), ln_p: ln_sigmoid(x), ln_comp: ln_sigmoid(-x) }
}

impl ModelInstance {
    /// Returns `(log prior + log Jacobian, log likelihood)` and accumulates
    /// the gradient of their sum into `grad` when provided.
    pub(crate) fn eval(&self, theta: &[f64], grad: Option<&mut [f64]>) -> (f64, f64) {
        let mut acc = Acc { prior_jac: 0.0, lik: 0.0, grad };
        self.add_jacobians(theta, &mut acc);
        match self.variant {
            ModelVariant::Basic => self.eval_basic(theta, &mut acc),
            ModelVariant::Enhanced => self.eval_enhanced(theta, &mut acc),
            ModelVariant::HierSentiment => self.eval_hier_sentiment(theta, &mut acc),
            ModelVariant::HierInformed => self.eval_hier_informed(theta, &mut acc),
            ModelVariant::CorrectedGlobal => self.eval_corrected_global(theta, &mut acc),
        }
        (acc.prior_jac, acc.lik)
    }

    fn add_jacobians(&self, theta: &[f64], acc: &mut Acc) {
        for block in self.layout.blocks() {
            for i in block.start..block.start + block.len {
                match block.transform {
                    Transform::Logit => {
                        let pr = prob(theta[i]);
                        acc.prior_jac += pr.ln_p + pr.ln_comp;
                        acc.add_grad(i, 1.0 - 2.0 * pr.p);
                    }
                    Transform::Log => {
                        acc.prior_jac += theta[i];
                        acc.add_grad(i, 1.0);
                    }
                    Transform::Identity => {}
                }
            }
        }
    }

    fn eval_basic(&self, theta: &[f64], acc: &mut Acc) {
        let clusters = self.dataset.clusters();
        let c = clusters.len();
        let (hyper, fixed) = match self.basic_hypers {
            BasicHypers::Learned => {
                let vals = [theta[0].exp(), theta[1].exp(), theta[2].exp(), theta[3].exp()];
                for (i, &v) in vals.iter().enumerate() {
                    half_normal_prior(acc, i, v, self.priors.halfnormal_sigma);
                }
                (vals, false)
            }
            BasicHypers::Fixed { alpha_s, beta_s, alpha_q, beta_q } => {
                ([alpha_s, beta_s, alpha_q, beta_q], true)
            }
        };
        let [a_s, b_s, a_q, b_q] = hyper;
        let s_start = self.layout.block("s").unwrap().start;
        let q_start = self.layout.block("q").unwrap().start;

        let mut sums = BetaSums::default();
        let mut sumq = BetaSums::default();
        for (k, cl) in clusters.iter().enumerate() {
            let si = s_start + k;
            let s = prob(theta[si]);
            acc.lik += binomial_ln(cl.m, cl.n, &s);
            acc.add_grad(si, cl.m as f64 - cl.n as f64 * s.p);
            sums.accumulate(beta_prior(acc, si, &s, a_s, b_s));

            let qi = q_start + k;
            let q = prob(theta[qi]);
            if cl.m > 0 {
                acc.lik += binomial_ln(cl.y, cl.m, &q);
                acc.add_grad(qi, cl.y as f64 - cl.m as f64 * q.p);
            }
            sumq.accumulate(beta_prior(acc, qi, &q, a_q, b_q));
        }
        if !fixed {
            beta_hyper_grad(acc, 0, 1, a_s, b_s, &sums, c);
            beta_hyper_grad(acc, 2, 3, a_q, b_q, &sumq, c);
        }
    }

    fn eval_enhanced(&self, theta: &[f64], acc: &mut Acc) {
        let clusters = self.dataset.clusters();
        let c = clusters.len();
        let a_q = theta[0].exp();
        let b_q = theta[1].exp();
        half_normal_prior(acc, 0, a_q, self.priors.halfnormal_sigma);
        half_normal_prior(acc, 1, b_q, self.priors.halfnormal_sigma);

        let q_start = self.layout.block("q").unwrap().start;
        let rates_start = self.layout.block("rates").unwrap().start;
        let rp = prob(theta[rates_start]);
        let rn = prob(theta[rates_start + 1]);

        let mut sumq = BetaSums::default();
        let mut d_rp = 0.0;
        let mut d_rn = 0.0;
        for (k, cl) in clusters.iter().enumerate() {
            let qi = q_start + k;
            let q = prob(theta[qi]);
            sumq.accumulate(beta_prior(acc, qi, &q, a_q, b_q));
            let t = two_stage_term(cl.n, cl.m, cl.y, &q, &rp, &rn);
            acc.lik += t.logp;
            acc.add_grad(qi, t.dq * q.p * q.comp);
            d_rp += t.drp;
            d_rn += t.drn;
        }
        acc.add_grad(rates_start, d_rp * rp.p * rp.comp);
        acc.add_grad(rates_start + 1, d_rn * rn.p * rn.comp);
        beta_hyper_grad(acc, 0, 1, a_q, b_q, &sumq, c);
        // r_pos and r_neg carry flat Uniform(0,1) priors: Jacobian only.
    }

    fn eval_hier_sentiment(&self, theta: &[f64], acc: &mut Acc) {
        let clusters = self.dataset.clusters();
        let c = clusters.len();
        let a_q = theta[0].exp();
        let b_q = theta[1].exp();
        half_normal_prior(acc, 0, a_q, self.priors.halfnormal_sigma);
        half_normal_prior(acc, 1, b_q, self.priors.halfnormal_sigma);

        let mu_start = self.layout.block("rate_mu").unwrap().start;
        let conc_start = self.layout.block("rate_conc").unwrap().start;
        let mu_pos = prob(theta[mu_start]);
        let mu_neg = prob(theta[mu_start + 1]);
        let conc_pos = theta[conc_start].exp();
        let conc_neg = theta[conc_start + 1].exp();

        let (mu_a, mu_b) = self.priors.hs_mu_beta;
        beta_prior(acc, mu_start, &mu_pos, mu_a, mu_b);
        beta_prior(acc, mu_start + 1, &mu_neg, mu_a, mu_b);
        let (g_shape, g_rate) = self.priors.hs_precision_gamma;
        gamma_prior(acc, conc_start, conc_pos, g_shape, g_rate);
        gamma_prior(acc, conc_start + 1, conc_neg, g_shape, g_rate);

        let a_pos = mu_pos.p * conc_pos;
        let b_pos = mu_pos.comp * conc_pos;
        let a_neg = mu_neg.p * conc_neg;
        let b_neg = mu_neg.comp * conc_neg;

        let q_start = self.layout.block("q").unwrap().start;
        let rp_start = self.layout.block("r_pos").unwrap().start;
        let rn_start = self.layout.block("r_neg").unwrap().start;

        let mut sumq = BetaSums::default();
        let mut sum_rp = BetaSums::default();
        let mut sum_rn = BetaSums::default();
        for (k, cl) in clusters.iter().enumerate() {
            let qi = q_start + k;
            let rpi = rp_start + k;
            let rni = rn_start + k;
            let q = prob(theta[qi]);
            let rp = prob(theta[rpi]);
            let rn = prob(theta[rni]);
            sumq.accumulate(beta_prior(acc, qi, &q, a_q, b_q));
            sum_rp.accumulate(beta_prior(acc, rpi, &rp, a_pos, b_pos));
            sum_rn.accumulate(beta_prior(acc, rni, &rn, a_neg, b_neg));
            let t = two_stage_term(cl.n, cl.m, cl.y, &q, &rp, &rn);
            acc.lik += t.logp;
            acc.add_grad(qi, t.dq * q.p * q.comp);
            acc.add_grad(rpi, t.drp * rp.p * rp.comp);
            acc.add_grad(rni, t.drn * rn.p * rn.comp);
        }
        beta_hyper_grad(acc, 0, 1, a_q, b_q, &sumq, c);
        pooled_rate_hyper_grad(acc, mu_start, conc_start, &mu_pos, conc_pos, a_pos, b_pos, &sum_rp, c);
        pooled_rate_hyper_grad(
            acc,
            mu_start + 1,
            conc_start + 1,
            &mu_neg,
            conc_neg,
            a_neg,
            b_neg,
            &sum_rn,
            c,
        );
    }

    fn eval_hier_informed(&self, theta: &[f64], acc: &mut Acc) {
        let clusters = self.dataset.clusters();
        let c = clusters.len();
        let a_q = theta[0].exp();
        let b_q = theta[1].exp();
        half_normal_prior(acc, 0, a_q, self.priors.halfnormal_sigma);
        half_normal_prior(acc, 1, b_q, self.priors.halfnormal_sigma);

        let q_start = self.layout.block("q").unwrap().start;
        let u_start = self.layout.block("log_r_pos").unwrap().start;
        let w_start = self.layout.block("log_kappa").unwrap().start;
        let pr = &self.priors;

        let mut sumq = BetaSums::default();
        for (k, cl) in clusters.iter().enumerate() {
            let qi = q_start + k;
            let ui = u_start + k;
            let wi = w_start + k;
            let q = prob(theta[qi]);
            sumq.accumulate(beta_prior(acc, qi, &q, a_q, b_q));
            normal_prior(acc, ui, theta[ui], pr.informed_logrpos_center, pr.informed_logrpos_sigma);
            normal_prior(
                acc,
                wi,
                theta[wi],
                pr.informed_logkappa_center,
                pr.informed_logkappa_sigma,
            );

            // Rates derived from the log-space parameters, clipped inside the
            // likelihood; clipped branches contribute zero likelihood gradient.
            let rp_raw = theta[ui].exp();
            let rp_clipped = rp_raw >= RATE_CLIP;
            let rp = if rp_clipped {
                Prob { p: RATE_CLIP, comp: 1.0 - RATE_CLIP, ln_p: RATE_CLIP.ln(), ln_comp: (1.0 - RATE_CLIP).ln() }
            } else {
                let comp = -theta[ui].exp_m1();
                Prob { p: rp_raw, comp, ln_p: theta[ui], ln_comp: comp.ln() }
            };
            let rn_raw = rp.p * theta[wi].exp();
            let rn_clipped = rn_raw >= RATE_CLIP;
            let rn = if rn_clipped {
                Prob { p: RATE_CLIP, comp: 1.0 - RATE_CLIP, ln_p: RATE_CLIP.ln(), ln_comp: (1.0 - RATE_CLIP).ln() }
            } else {
                Prob { p: rn_raw, comp: 1.0 - rn_raw, ln_p: rn_raw.ln(), ln_comp: (1.0 - rn_raw).ln() }
            };

            let t = two_stage_term(cl.n, cl.m, cl.y, &q, &rp, &rn);
            acc.lik += t.logp;
            acc.add_grad(qi, t.dq * q.p * q.comp);
            let mut du = 0.0;
            if !rp_clipped {
                du += t.drp * rp.p;
                if !rn_clipped {
                    du += t.drn * rn.p;
                }
            }
            acc.add_grad(ui, du);
            if !rn_clipped {
                acc.add_grad(wi, t.drn * rn.p);
            }
        }
        beta_hyper_grad(acc, 0, 1, a_q, b_q, &sumq, c);
    }

    fn eval_corrected_global(&self, theta: &[f64], acc: &mut Acc) {
        let n = self.dataset.total_interactions;
        let m = self.dataset.total_feedback;
        let y = self.dataset.total_positive();
        let q = prob(theta[0]);
        let rp = prob(theta[1]);
        let rn = prob(theta[2]);
        let t = two_stage_term(n, m, y, &q, &rp, &rn);
        acc.lik += t.logp;
        acc.add_grad(0, t.dq * q.p * q.comp);
        acc.add_grad(1, t.drp * rp.p * rp.comp);
        acc.add_grad(2, t.drn * rn.p * rn.comp);
        // Uniform(0,1) priors on all three: Jacobian only.
    }
}

/// Binomial(k | n, p) log-pmf with `p` expanded as a `Prob`.
fn binomial_ln(k: u64, n: u64, p: &Prob) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut lp = ln_choose(n, k);
    if k > 0 {
        lp += k as f64 * p.ln_p;
    }
    if k < n {
        lp += (n - k) as f64 * p.ln_comp;
    }
    lp
}

struct TwoStageTerm {
    logp: f64,
    /// Constrained-space partials of the likelihood.
    dq: f64,
    drp: f64,
    drn: f64,
}

/// Joint Stage-1 + Stage-2 log-likelihood for one cluster under
/// class-conditional response rates, with constrained-space partials.
///
/// `s = q·r_pos + (1−q)·r_neg`, `p = q·r_pos / s`; the complements are
/// computed from the complement mix to preserve precision near the
/// boundaries.
fn two_stage_term(n: u64, m: u64, y: u64, q: &Prob, rp: &Prob, rn: &Prob) -> TwoStageTerm {
    let s = q.p * rp.p + q.comp * rn.p;
    let s_comp = q.p * rp.comp + q.comp * rn.comp;
    let mut logp = ln_choose(n, m);
    if m > 0 {
        logp += m as f64 * s.ln();
    }
    if m < n {
        logp += (n - m) as f64 * s_comp.ln();
    }
    let stage1 = m as f64 / s - (n - m) as f64 / s_comp;

    let mut stage2 = 0.0;
    if m > 0 {
        let p = q.p * rp.p / s;
        let p_comp = q.comp * rn.p / s;
        logp += ln_choose(m, y);
        if y > 0 {
            logp += y as f64 * p.ln();
            stage2 += y as f64 / p;
        }
        if y < m {
            logp += (m - y) as f64 * p_comp.ln();
            stage2 -= (m - y) as f64 / p_comp;
        }
    }

    let s2 = s * s;
    TwoStageTerm {
        logp,
        dq: stage1 * (rp.p - rn.p) + stage2 * rp.p * rn.p / s2,
        drp: stage1 * q.p + stage2 * q.p * q.comp * rn.p / s2,
        drn: stage1 * q.comp - stage2 * q.p * q.comp * rp.p / s2,
    }
}

/// Running sums of log p and log(1−p) over a block, for hyperparameter
/// gradients of beta priors.
#[derive(Default)]
struct BetaSums {
    ln_p: f64,
    ln_comp: f64,
}

impl BetaSums {
    fn accumulate(&mut self, logs: (f64, f64)) {
        self.ln_p += logs.0;
        self.ln_comp += logs.1;
    }
}

/// Beta(a, b) prior on a logit coordinate; returns (ln p, ln(1−p)) for
/// hyper-gradient accumulation.
fn beta_prior(acc: &mut Acc, index: usize, p: &Prob, a: f64, b: f64) -> (f64, f64) {
    acc.prior_jac += (a - 1.0) * p.ln_p + (b - 1.0) * p.ln_comp - ln_beta(a, b);
    acc.add_grad(index, (a - 1.0) * p.comp - (b - 1.0) * p.p);
    (p.ln_p, p.ln_comp)
}

/// Gradient of Σ_c log Beta(p_c | a, b) with respect to log-transformed
/// hyperparameter coordinates.
fn beta_hyper_grad(
    acc: &mut Acc,
    index_a: usize,
    index_b: usize,
    a: f64,
    b: f64,
    sums: &BetaSums,
    count: usize,
) {
    let psi_ab = digamma(a + b);
    let count = count as f64;
    acc.add_grad(index_a, a * (sums.ln_p - count * (digamma(a) - psi_ab)));
    acc.add_grad(index_b, b * (sums.ln_comp - count * (digamma(b) - psi_ab)));
}

/// Gradient of Σ_c log Beta(r_c | μ·k, (1−μ)·k) with respect to the pooled
/// mean (logit coordinate) and concentration (log coordinate).
#[allow(clippy::too_many_arguments)]
fn pooled_rate_hyper_grad(
    acc: &mut Acc,
    mu_index: usize,
    conc_index: usize,
    mu: &Prob,
    conc: f64,
    a: f64,
    b: f64,
    sums: &BetaSums,
    count: usize,
) {
    let count = count as f64;
    let psi_ab = digamma(a + b);
    let d_a = sums.ln_p - count * (digamma(a) - psi_ab);
    let d_b = sums.ln_comp - count * (digamma(b) - psi_ab);
    acc.add_grad(mu_index, conc * (d_a - d_b) * mu.p * mu.comp);
    acc.add_grad(conc_index, (mu.p * d_a + mu.comp * d_b) * conc);
}

/// HalfNormal(σ) prior on a positive value at a log coordinate.
fn half_normal_prior(acc: &mut Acc, index: usize, v: f64, sigma: f64) {
    acc.prior_jac += 0.5 * (2.0 / PI).ln() - sigma.ln() - v * v / (2.0 * sigma * sigma);
    acc.add_grad(index, -v * v / (sigma * sigma));
}

/// Gamma(shape, rate) prior on a positive value at a log coordinate.
fn gamma_prior(acc: &mut Acc, index: usize, v: f64, shape: f64, rate: f64) {
    acc.prior_jac += shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * v.ln() - rate * v;
    acc.add_grad(index, (shape - 1.0) - rate * v);
}

/// Normal(μ, σ) prior on an identity coordinate.
fn normal_prior(acc: &mut Acc, index: usize, x: f64, mu: f64, sigma: f64) {
    acc.prior_jac += -0.5 * (2.0 * PI).ln() - sigma.ln() - (x - mu) * (x - mu) / (2.0 * sigma * sigma);
    acc.add_grad(index, -(x - mu) / (sigma * sigma));
}

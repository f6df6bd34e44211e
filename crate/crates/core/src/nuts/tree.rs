//! No-U-Turn trajectory building: recursive doubling, multinomial sampling
//! over the trajectory, endpoint U-turn termination, and energy-based
//! divergence detection.

use rand::Rng;

use super::integrator::{leapfrog_cached, Point};
use super::{kinetic_energy, sample_momentum, DrawStats, Target};
use crate::math::log_add_exp;

/// One endpoint of a trajectory: position with its momentum.
#[derive(Clone)]
struct End {
    point: Point,
    momentum: Vec<f64>,
}

struct Subtree {
    left: End,
    right: End,
    proposal: Point,
    log_sum_weight: f64,
    sum_accept: f64,
    n_leapfrog: u32,
    divergent: bool,
    turning: bool,
}

struct Ctx<'a, T: Target> {
    target: &'a T,
    eps: f64,
    inv_mass: &'a [f64],
    h0: f64,
    divergence_threshold: f64,
}

/// Endpoint U-turn check: the trajectory turns when the displacement between
/// endpoints opposes the velocity at either end.
fn is_turning(left: &End, right: &End, inv_mass: &[f64]) -> bool {
    let dim = inv_mass.len();
    let mut dot_left = 0.0;
    let mut dot_right = 0.0;
    for i in 0..dim {
        let delta = right.point.theta[i] - left.point.theta[i];
        dot_left += delta * inv_mass[i] * left.momentum[i];
        dot_right += delta * inv_mass[i] * right.momentum[i];
    }
    dot_left < 0.0 || dot_right < 0.0
}

fn leaf<T: Target>(ctx: &Ctx<T>, start: &End, dir: f64) -> Subtree {
    let (point, momentum) = leapfrog_cached(
        ctx.target,
        &start.point,
        &start.momentum,
        dir * ctx.eps,
        ctx.inv_mass,
    );
    let h = if point.logp.is_finite() {
        -point.logp + kinetic_energy(&momentum, ctx.inv_mass)
    } else {
        f64::INFINITY
    };
    let energy_error = h - ctx.h0;
    let divergent = !h.is_finite() || energy_error > ctx.divergence_threshold;
    let log_weight = -energy_error;
    let accept = if log_weight.is_finite() { log_weight.exp().min(1.0) } else { 0.0 };
    let end = End { point: point.clone(), momentum };
    Subtree {
        left: end.clone(),
        right: end,
        proposal: point,
        log_sum_weight: if divergent { f64::NEG_INFINITY } else { log_weight },
        sum_accept: accept,
        n_leapfrog: 1,
        divergent,
        turning: false,
    }
}

fn build_subtree<T: Target, R: Rng>(
    ctx: &Ctx<T>,
    start: &End,
    dir: f64,
    depth: usize,
    rng: &mut R,
) -> Subtree {
    if depth == 0 {
        return leaf(ctx, start, dir);
    }
    let mut first = build_subtree(ctx, start, dir, depth - 1, rng);
    if first.divergent || first.turning {
        return first;
    }
    let grow_from = if dir > 0.0 { first.right.clone() } else { first.left.clone() };
    let second = build_subtree(ctx, &grow_from, dir, depth - 1, rng);

    first.sum_accept += second.sum_accept;
    first.n_leapfrog += second.n_leapfrog;
    if second.divergent || second.turning {
        first.divergent |= second.divergent;
        first.turning |= second.turning;
        return first;
    }

    // Multinomial sampling across the merged subtree.
    let total = log_add_exp(first.log_sum_weight, second.log_sum_weight);
    if (rng.random::<f64>()).ln() < second.log_sum_weight - total {
        first.proposal = second.proposal;
    }
    first.log_sum_weight = total;
    if dir > 0.0 {
        first.right = second.right;
    } else {
        first.left = second.left;
    }
    first.turning = is_turning(&first.left, &first.right, ctx.inv_mass);
    first
}

/// One NUTS transition: refresh momentum, double the trajectory until a
/// U-turn, divergence, or the depth cap, and return a multinomial draw from
/// the trajectory.
pub(crate) fn transition<T: Target, R: Rng>(
    target: &T,
    current: Point,
    eps: f64,
    inv_mass: &[f64],
    max_depth: usize,
    divergence_threshold: f64,
    rng: &mut R,
) -> (Point, DrawStats) {
    let momentum = sample_momentum(inv_mass, rng);
    let h0 = -current.logp + kinetic_energy(&momentum, inv_mass);
    let ctx = Ctx { target, eps, inv_mass, h0, divergence_threshold };

    let mut left = End { point: current.clone(), momentum: momentum.clone() };
    let mut right = End { point: current.clone(), momentum };
    let mut proposal = current;
    let mut log_sum_weight = 0.0_f64;
    let mut sum_accept = 0.0;
    let mut n_leapfrog = 0u32;
    let mut divergent = false;
    let mut depth = 0u32;

    for tree_depth in 0..max_depth {
        let dir: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let start = if dir > 0.0 { right.clone() } else { left.clone() };
        let subtree = build_subtree(&ctx, &start, dir, tree_depth, rng);
        sum_accept += subtree.sum_accept;
        n_leapfrog += subtree.n_leapfrog;
        if subtree.divergent {
            divergent = true;
            break;
        }
        if subtree.turning {
            break;
        }
        // Biased progressive sampling favoring the fresh half.
        if (rng.random::<f64>()).ln() < subtree.log_sum_weight - log_sum_weight {
            proposal = subtree.proposal;
        }
        log_sum_weight = log_add_exp(log_sum_weight, subtree.log_sum_weight);
        if dir > 0.0 {
            right = subtree.right;
        } else {
            left = subtree.left;
        }
        depth = tree_depth as u32 + 1;
        if is_turning(&left, &right, inv_mass) {
            break;
        }
    }

    let stats = DrawStats {
        depth,
        n_leapfrog,
        divergent,
        accept: if n_leapfrog > 0 { sum_accept / n_leapfrog as f64 } else { 0.0 },
        energy: h0,
    };
    (proposal, stats)
}

//! Warmup adaptation: dual-averaging step-size search and windowed diagonal
//! metric estimation.

use rand::Rng;

use super::integrator::{leapfrog_cached, Point};
use super::{kinetic_energy, sample_momentum, Target};

/// Dual-averaging step-size adaptation toward a target acceptance statistic.
#[derive(Debug, Clone)]
pub struct DualAveraging {
    mu: f64,
    log_eps: f64,
    log_eps_bar: f64,
    h_bar: f64,
    step: u64,
    target_accept: f64,
    gamma: f64,
    t0: f64,
    kappa: f64,
}

impl DualAveraging {
    pub fn new(initial_eps: f64, target_accept: f64) -> Self {
        Self {
            mu: (10.0 * initial_eps).ln(),
            log_eps: initial_eps.ln(),
            log_eps_bar: 0.0,
            h_bar: 0.0,
            step: 0,
            target_accept,
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
        }
    }

    pub fn update(&mut self, accept: f64) {
        self.step += 1;
        let t = self.step as f64;
        let eta = 1.0 / (t + self.t0);
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target_accept - accept);
        self.log_eps = self.mu - t.sqrt() / self.gamma * self.h_bar;
        let w = t.powf(-self.kappa);
        self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar;
    }

    /// Step size to use for the next warmup transition.
    pub fn current(&self) -> f64 {
        self.log_eps.exp()
    }

    /// Smoothed step size frozen after warmup.
    pub fn adapted(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

/// Streaming per-coordinate mean/variance.
#[derive(Debug, Clone)]
pub(crate) struct RunningVariance {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningVariance {
    pub fn new(dim: usize) -> Self {
        Self { count: 0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for i in 0..x.len() {
            let delta = x[i] - self.mean[i];
            self.mean[i] += delta / n;
            self.m2[i] += delta * (x[i] - self.mean[i]);
        }
    }

    /// Sample variances shrunk toward a small constant, matching the usual
    /// windowed-adaptation regularization.
    pub fn regularized_variance(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.m2
            .iter()
            .map(|&m2| {
                let var = if self.count > 1 { m2 / (n - 1.0) } else { 1.0 };
                (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
            })
            .collect()
    }
}

/// Warmup layout: an initial step-size-only buffer, one or more variance
/// windows with doubling lengths, and a terminal step-size-only buffer.
#[derive(Debug, Clone)]
pub(crate) struct WarmupSchedule {
    init_end: usize,
    term_start: usize,
    window_ends: Vec<usize>,
}

pub(crate) fn warmup_schedule(tune: usize) -> WarmupSchedule {
    assert!(tune >= 50, "callers validate tune >= 50");
    let (init_end, term_start, base) = if tune >= 150 {
        (75, tune - 50, 25)
    } else {
        (tune * 15 / 100, tune - tune / 10, tune)
    };
    let mut window_ends = Vec::new();
    let mut start = init_end;
    let mut size = base;
    while start < term_start {
        let mut end = start + size;
        // Absorb a remainder too small to double into the final window.
        if end + 2 * size > term_start {
            end = term_start;
        }
        window_ends.push(end.min(term_start));
        start = end;
        size *= 2;
    }
    WarmupSchedule { init_end, term_start, window_ends }
}

impl WarmupSchedule {
    /// Should this warmup step's draw feed the variance estimator?
    pub fn collects(&self, step: usize) -> bool {
        step >= self.init_end && step < self.term_start
    }

    /// Does a variance window close after this step?
    pub fn window_closes(&self, step: usize) -> bool {
        self.window_ends.contains(&(step + 1))
    }
}

/// Heuristic initial step size: double or halve until the one-step acceptance
/// probability crosses 1/2.
pub(crate) fn find_reasonable_epsilon<T: Target, R: Rng>(
    target: &T,
    point: &Point,
    inv_mass: &[f64],
    rng: &mut R,
) -> f64 {
    let mut eps = 1.0_f64;
    let momentum = sample_momentum(inv_mass, rng);
    let h0 = -point.logp + kinetic_energy(&momentum, inv_mass);

    let log_accept = |eps: f64| -> f64 {
        let (next, p) = leapfrog_cached(target, point, &momentum, eps, inv_mass);
        if !next.logp.is_finite() {
            return f64::NEG_INFINITY;
        }
        let h1 = -next.logp + kinetic_energy(&p, inv_mass);
        h0 - h1
    };

    let mut la = log_accept(eps);
    let mut guard = 0;
    while !la.is_finite() && guard < 64 {
        eps *= 0.5;
        la = log_accept(eps);
        guard += 1;
    }
    if !la.is_finite() {
        return 1e-6;
    }
    let dir: f64 = if la > (0.5_f64).ln() { 1.0 } else { -1.0 };
    let mut steps = 0;
    loop {
        if dir > 0.0 && la <= (0.5_f64).ln() {
            break;
        }
        if dir < 0.0 && (la >= (0.5_f64).ln() || eps < 1e-10) {
            break;
        }
        eps *= 2.0_f64.powf(dir);
        if eps > 1e7 {
            break;
        }
        la = log_accept(eps);
        if !la.is_finite() {
            la = f64::NEG_INFINITY;
        }
        steps += 1;
        if steps > 100 {
            break;
        }
    }
    eps.clamp(1e-10, 1e7)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_averaging_tracks_target_on_synthetic_response() {
        // Simulated acceptance falls with step size: accept(eps) = exp(-eps).
        // Dual averaging should settle near the eps whose acceptance equals
        // the target.
        let target = 0.8_f64;
        let mut da = DualAveraging::new(1.0, target);
        for _ in 0..2000 {
            let accept = (-da.current()).exp().min(1.0);
            da.update(accept);
        }
        let eps = da.adapted();
        let expected = -target.ln(); // exp(-eps) = target
        assert!(
            (eps - expected).abs() / expected < 0.05,
            "adapted {eps}, expected {expected}"
        );
    }

    #[test]
    fn running_variance_matches_sample_variance() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let mut rv = RunningVariance::new(1);
        for &x in &xs {
            rv.push(&[x]);
        }
        let n = xs.len() as f64;
        let exact = crate::math::sample_variance(&xs);
        let expected = n / (n + 5.0) * exact + 1e-3 * 5.0 / (n + 5.0);
        let got = rv.regularized_variance()[0];
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn schedule_covers_warmup_without_overlap() {
        for tune in [50, 80, 150, 300, 1000, 2000] {
            let s = warmup_schedule(tune);
            assert!(s.init_end < s.term_start);
            assert!(s.term_start <= tune);
            let mut prev = s.init_end;
            for &end in &s.window_ends {
                assert!(end > prev, "tune={tune}: window end {end} after {prev}");
                prev = end;
            }
            assert_eq!(prev, s.term_start, "windows must end at the terminal buffer");
        }
    }
}

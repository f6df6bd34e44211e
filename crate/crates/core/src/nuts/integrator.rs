//! Leapfrog integration of Hamiltonian dynamics with a diagonal metric.

use super::Target;

/// A position with cached log-density and gradient.
#[derive(Debug, Clone)]
pub(crate) struct Point {
    pub theta: Vec<f64>,
    pub grad: Vec<f64>,
    pub logp: f64,
}

impl Point {
    pub fn at<T: Target>(target: &T, theta: Vec<f64>) -> Self {
        let mut grad = vec![0.0; theta.len()];
        let logp = target.logp_grad(&theta, &mut grad);
        Self { theta, grad, logp }
    }
}

/// One kick-drift-kick update from a cached point. `inv_mass` holds the
/// diagonal of the inverse metric (per-coordinate variance scales).
pub(crate) fn leapfrog_cached<T: Target>(
    target: &T,
    point: &Point,
    momentum: &[f64],
    eps: f64,
    inv_mass: &[f64],
) -> (Point, Vec<f64>) {
    let dim = point.theta.len();
    let half = 0.5 * eps;
    let mut p: Vec<f64> = momentum.iter().zip(&point.grad).map(|(p, g)| p + half * g).collect();
    let mut theta = point.theta.clone();
    for i in 0..dim {
        theta[i] += eps * inv_mass[i] * p[i];
    }
    let next = Point::at(target, theta);
    if next.logp.is_finite() {
        for i in 0..dim {
            p[i] += half * next.grad[i];
        }
    }
    (next, p)
}

/// Result of one standalone leapfrog step.
#[derive(Debug, Clone)]
pub struct LeapfrogStep {
    pub theta: Vec<f64>,
    pub momentum: Vec<f64>,
    pub logp: f64,
    pub grad: Vec<f64>,
}

/// One leapfrog step from raw inputs. `gradient_fn` fills the gradient and
/// returns the log-density; `mass_diag` is the diagonal inverse metric.
pub fn leapfrog<F>(
    theta: &[f64],
    momentum: &[f64],
    step_size: f64,
    mut gradient_fn: F,
    mass_diag: &[f64],
) -> LeapfrogStep
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let dim = theta.len();
    assert_eq!(momentum.len(), dim);
    assert_eq!(mass_diag.len(), dim);
    let mut grad = vec![0.0; dim];
    gradient_fn(theta, &mut grad);
    let half = 0.5 * step_size;
    let mut p: Vec<f64> = momentum.iter().zip(&grad).map(|(p, g)| p + half * g).collect();
    let mut out = theta.to_vec();
    for i in 0..dim {
        out[i] += step_size * mass_diag[i] * p[i];
    }
    let logp = gradient_fn(&out, &mut grad);
    if logp.is_finite() {
        for i in 0..dim {
            p[i] += half * grad[i];
        }
    }
    LeapfrogStep { theta: out, momentum: p, logp, grad }
}

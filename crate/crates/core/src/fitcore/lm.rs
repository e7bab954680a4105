use nalgebra::{Cholesky, DMatrix, DVector};

use super::jacobian::{jacobian_within, DiffScheme};
use super::transform::Bound;
use super::{ConvergenceReason, FitProblem, FitResult};
use crate::error::{Error, Result};

const INITIAL_DAMPING: f64 = 1e-3;
const MAX_DAMPING: f64 = 1e32;
const FD_SCALE: f64 = 1.5e-8;

struct Setup<'p, 'a> {
    problem: &'p FitProblem<'a>,
    bounds: Vec<Bound>,
    free: Vec<usize>,
    sqrt_w: Vec<f64>,
    floor: Vec<f64>,
}

impl Setup<'_, '_> {
    fn physical(&self, theta: &[f64]) -> Vec<f64> {
        let mut p = self.problem.initial_params.clone();
        for (k, &j) in self.free.iter().enumerate() {
            p[j] = self.bounds[j].to_physical(theta[k]);
        }
        p
    }

    fn weighted(&self, p: &[f64]) -> Option<Vec<f64>> {
        let r = (self.problem.residual)(p);
        if r.len() != self.sqrt_w.len() || r.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(r.iter().zip(&self.sqrt_w).map(|(r, w)| r * w).collect())
    }

    /// Weighted Jacobian with respect to the free physical parameters.
    fn jacobian(&self, p: &[f64], base: Option<&[f64]>, scheme: DiffScheme) -> Result<DMatrix<f64>> {
        let sub = |q: &[f64]| {
            let mut full = p.to_vec();
            for (k, &j) in self.free.iter().enumerate() {
                full[j] = q[k];
            }
            let r = (self.problem.residual)(&full);
            r.iter().zip(&self.sqrt_w).map(|(r, w)| r * w).collect::<Vec<_>>()
        };
        let q: Vec<f64> = self.free.iter().map(|&j| p[j]).collect();
        let lo: Vec<f64> = self.free.iter().map(|&j| self.problem.lower_bounds[j]).collect();
        let hi: Vec<f64> = self.free.iter().map(|&j| self.problem.upper_bounds[j]).collect();
        let floor: Vec<f64> = self.free.iter().map(|&j| self.floor[j]).collect();
        let scale = match scheme {
            DiffScheme::Forward => FD_SCALE,
            DiffScheme::Central => 6e-6,
        };
        jacobian_within(&sub, &q, base, scale, &floor, scheme, &lo, &hi)
    }
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn validate(problem: &FitProblem) -> Result<()> {
    let n = problem.initial_params.len();
    if n == 0 {
        return Err(Error::invalid("no parameters to fit"));
    }
    if problem.lower_bounds.len() != n || problem.upper_bounds.len() != n || problem.fixed.len() != n
    {
        return Err(Error::invalid("bounds and fixed mask must match the parameter count"));
    }
    for (name, v) in [
        ("tolerance_gradient", problem.tolerance_gradient),
        ("tolerance_step", problem.tolerance_step),
        ("tolerance_cost", problem.tolerance_cost),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("{name} must be > 0")));
        }
    }
    Ok(())
}

/// Minimises Σ wᵢ rᵢ(p)² by damped Gauss–Newton steps in the unconstrained
/// internal coordinates.
///
/// Damping is Marquardt-scaled, (A + λ·diag A)δ = −g, starting at
/// λ = 1e-3, multiplied by 10 on a rejected step and divided by 10 on an
/// accepted one. Accepted steps never increase the cost.
pub fn lm_fit(problem: &FitProblem) -> Result<FitResult> {
    validate(problem)?;
    let n = problem.initial_params.len();
    let bounds = (0..n)
        .map(|j| Bound::new(problem.lower_bounds[j], problem.upper_bounds[j]))
        .collect::<Result<Vec<_>>>()?;
    let free: Vec<usize> = (0..n).filter(|&j| !problem.fixed[j]).collect();
    let mut theta = Vec::with_capacity(free.len());
    for &j in &free {
        theta.push(bounds[j].to_internal(problem.initial_params[j], j)?);
    }

    let r0 = (problem.residual)(&problem.initial_params);
    if r0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("residuals are not finite at the initial parameters"));
    }
    let m = r0.len();
    let sqrt_w = match &problem.weights {
        None => vec![1.0; m],
        Some(w) => {
            if w.len() != m {
                return Err(Error::invalid(format!("{} weights for {m} residuals", w.len())));
            }
            if let Some(bad) = w.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                return Err(Error::invalid(format!("weights must be positive, got {bad}")));
            }
            w.iter().map(|w| w.sqrt()).collect()
        }
    };
    let floor = problem
        .initial_params
        .iter()
        .zip(problem.lower_bounds.iter().zip(&problem.upper_bounds))
        .map(|(p, (lo, hi))| {
            let width = hi - lo;
            let w = if width.is_finite() { 1e-6 * width } else { 0.0 };
            (1e-3 * p.abs()).max(w).max(1e-12)
        })
        .collect();
    let setup = Setup { problem, bounds, free, sqrt_w, floor };

    let dof = m.saturating_sub(setup.free.len());
    let mut p = setup.physical(&theta);
    let mut rw = setup.weighted(&p).ok_or_else(|| {
        Error::invalid("residuals are not finite at the initial parameters")
    })?;
    let mut cost = sum_sq(&rw);
    let mut cost_history = vec![cost];
    let mut lambda = INITIAL_DAMPING;
    let mut reason = ConvergenceReason::MaxIterations;
    let mut iterations = 0;

    if setup.free.is_empty() || cost == 0.0 {
        reason = ConvergenceReason::ExactFit;
    } else {
        'outer: for iter in 0..problem.max_iterations {
            iterations = iter + 1;
            let jp = setup.jacobian(&p, Some(&rw), DiffScheme::Forward)?;
            let mut jt = jp;
            for (k, &j) in setup.free.iter().enumerate() {
                let d = setup.bounds[j].derivative(theta[k]);
                jt.column_mut(k).scale_mut(d);
            }
            let r = DVector::from_column_slice(&rw);
            let a = jt.transpose() * &jt;
            let g = jt.transpose() * &r;

            let rnorm = cost.sqrt();
            let grad_scaled = (0..g.len())
                .map(|k| {
                    let col = a[(k, k)].sqrt();
                    if col > 0.0 { g[k].abs() / (col * rnorm) } else { 0.0 }
                })
                .fold(0.0, f64::max);
            if grad_scaled < problem.tolerance_gradient {
                reason = ConvergenceReason::Gradient;
                break;
            }

            let max_diag = a.diagonal().max();
            let theta_norm = sum_sq(&theta).sqrt();
            loop {
                let mut damped = a.clone();
                for k in 0..g.len() {
                    damped[(k, k)] += lambda * a[(k, k)].max(1e-12 * max_diag).max(1e-300);
                }
                let step = match Cholesky::new(damped) {
                    Some(ch) => -ch.solve(&g),
                    None => {
                        lambda *= 10.0;
                        if lambda > MAX_DAMPING {
                            reason = ConvergenceReason::Stalled;
                            break 'outer;
                        }
                        continue;
                    }
                };
                let step_small = step.norm() <= problem.tolerance_step * (theta_norm + problem.tolerance_step);
                let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
                let p_trial = setup.physical(&trial);
                let trial_rw = setup.weighted(&p_trial);
                match trial_rw {
                    Some(trw) if sum_sq(&trw) <= cost => {
                        let new_cost = sum_sq(&trw);
                        let predicted = -(2.0 * g.dot(&step) + step.dot(&(&a * &step)));
                        let actual = cost - new_cost;
                        theta = trial;
                        p = p_trial;
                        rw = trw;
                        cost = new_cost;
                        cost_history.push(cost);
                        lambda = (lambda / 10.0).max(1e-15);
                        if cost == 0.0 {
                            reason = ConvergenceReason::ExactFit;
                            break 'outer;
                        }
                        if step_small {
                            reason = ConvergenceReason::Step;
                            break 'outer;
                        }
                        let tol = problem.tolerance_cost * (cost + actual);
                        if actual <= tol && predicted.abs() <= tol {
                            reason = ConvergenceReason::Cost;
                            break 'outer;
                        }
                        break;
                    }
                    other => {
                        if step_small && other.is_some() {
                            reason = ConvergenceReason::Step;
                            break 'outer;
                        }
                        lambda *= 10.0;
                        if lambda > MAX_DAMPING {
                            if other.is_none() {
                                return Err(Error::NonFiniteResidual {
                                    iteration: iterations,
                                    last_params: p,
                                });
                            }
                            reason = ConvergenceReason::Stalled;
                            break 'outer;
                        }
                    }
                }
            }
        }
    }

    let converged = !matches!(reason, ConvergenceReason::MaxIterations | ConvergenceReason::Stalled);
    let covariance = covariance(&setup, &p, cost, dof);
    let mut stderr = vec![0.0; n];
    match &covariance {
        Some(c) => {
            for j in 0..n {
                stderr[j] = c[j][j].max(0.0).sqrt();
            }
        }
        None => {
            for &j in &setup.free {
                stderr[j] = f64::NAN;
            }
        }
    }
    let residuals = (problem.residual)(&p);
    Ok(FitResult {
        params: p,
        stderr,
        covariance,
        chi2: cost,
        dof,
        n_iterations: iterations,
        converged,
        convergence_reason: reason,
        residuals,
        cost_history,
    })
}

/// (JᵀWJ)⁻¹·χ²/dof over the free parameters, embedded in an n×n matrix with
/// zero rows and columns for fixed ones.
fn covariance(setup: &Setup, p: &[f64], chi2: f64, dof: usize) -> Option<Vec<Vec<f64>>> {
    let n = p.len();
    if dof == 0 {
        return None;
    }
    if setup.free.is_empty() {
        return Some(vec![vec![0.0; n]; n]);
    }
    let j = setup.jacobian(p, None, DiffScheme::Central).ok()?;
    let a = j.transpose() * &j;
    // equilibrate before inverting so that badly scaled parameters do not
    // trip the positive-definiteness check
    let d: Vec<f64> = (0..a.nrows()).map(|k| a[(k, k)].sqrt()).collect();
    if d.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c)] / (d[r] * d[c]));
    let svd = scaled.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-14 * smax) {
        return None;
    }
    let inv = Cholesky::new(scaled)?.inverse();
    let factor = chi2 / dof as f64;
    let mut cov = vec![vec![0.0; n]; n];
    for (r, &jr) in setup.free.iter().enumerate() {
        for (c, &jc) in setup.free.iter().enumerate() {
            cov[jr][jc] = inv[(r, c)] / (d[r] * d[c]) * factor;
        }
    }
    Some(cov)
}

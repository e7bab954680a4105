//! Bounded Levenberg–Marquardt least squares with numerical Jacobians and
//! covariance-derived standard errors.
//!
//! The cost is χ² = Σ wᵢ rᵢ². Bounds are handled by mapping each bounded
//! parameter onto an unconstrained internal coordinate (sin² for two-sided
//! bounds, a square for one-sided ones); the covariance is reported in
//! physical coordinates, (JᵀWJ)⁻¹·χ²/dof with J taken at the optimum.

mod jacobian;
mod lm;
mod transform;

pub use jacobian::{numerical_jacobian, DiffScheme};
pub use lm::lm_fit;

use serde::{Deserialize, Serialize};

/// Residual closure: parameters in, residual vector out.
pub type ResidualFn<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>;

pub struct FitProblem<'a> {
    pub residual: ResidualFn<'a>,
    pub initial_params: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    pub upper_bounds: Vec<f64>,
    /// Per-residual positive weights; `None` means unit weights.
    pub weights: Option<Vec<f64>>,
    /// Parameters held at their initial value.
    pub fixed: Vec<bool>,
    pub max_iterations: usize,
    pub tolerance_gradient: f64,
    pub tolerance_step: f64,
    pub tolerance_cost: f64,
}

impl<'a> FitProblem<'a> {
    /// Unbounded problem with default tolerances.
    pub fn new(residual: impl Fn(&[f64]) -> Vec<f64> + 'a, initial_params: Vec<f64>) -> Self {
        let n = initial_params.len();
        FitProblem {
            residual: Box::new(residual),
            initial_params,
            lower_bounds: vec![f64::NEG_INFINITY; n],
            upper_bounds: vec![f64::INFINITY; n],
            weights: None,
            fixed: vec![false; n],
            max_iterations: 200,
            tolerance_gradient: 1e-8,
            tolerance_step: 1e-10,
            tolerance_cost: 1e-10,
        }
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower_bounds = lower;
        self.upper_bounds = upper;
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn with_fixed(mut self, fixed: Vec<bool>) -> Self {
        self.fixed = fixed;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceReason {
    /// Scaled gradient below `tolerance_gradient`.
    Gradient,
    /// Relative step below `tolerance_step`.
    Step,
    /// Actual and predicted relative cost reduction below `tolerance_cost`.
    Cost,
    /// Residuals vanished.
    ExactFit,
    MaxIterations,
    /// Damping grew without finding a downhill step.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// One-sigma uncertainties; NaN when the covariance is unavailable,
    /// zero for fixed parameters.
    pub stderr: Vec<f64>,
    /// Row-major covariance in physical coordinates, `None` when JᵀWJ is singular.
    pub covariance: Option<Vec<Vec<f64>>>,
    /// Weighted residual sum of squares.
    pub chi2: f64,
    pub dof: usize,
    pub n_iterations: usize,
    pub converged: bool,
    pub convergence_reason: ConvergenceReason,
    /// Unweighted residuals at the solution.
    pub residuals: Vec<f64>,
    /// χ² after the initial evaluation and after every accepted step.
    pub cost_history: Vec<f64>,
}

impl FitResult {
    pub fn reduced_chi2(&self) -> f64 {
        if self.dof == 0 {
            f64::NAN
        } else {
            self.chi2 / self.dof as f64
        }
    }

    pub fn covariance_available(&self) -> bool {
        self.covariance.is_some()
    }
}

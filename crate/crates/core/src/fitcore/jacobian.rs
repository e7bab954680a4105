use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffScheme {
    Forward,
    Central,
}

/// Finite-difference Jacobian ∂rᵢ/∂pⱼ of `residual` at `params`.
///
/// The step for parameter j is `scale·max(|pⱼ|, floorⱼ)`. A forward step that
/// would leave `[lower, upper]` is taken backwards instead.
pub fn numerical_jacobian(
    residual: &dyn Fn(&[f64]) -> Vec<f64>,
    params: &[f64],
    scale: f64,
    floor: &[f64],
    scheme: DiffScheme,
) -> Result<DMatrix<f64>> {
    let n = params.len();
    let inf = vec![f64::INFINITY; n];
    let neg = vec![f64::NEG_INFINITY; n];
    jacobian_within(residual, params, None, scale, floor, scheme, &neg, &inf)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn jacobian_within(
    residual: &dyn Fn(&[f64]) -> Vec<f64>,
    params: &[f64],
    base: Option<&[f64]>,
    scale: f64,
    floor: &[f64],
    scheme: DiffScheme,
    lower: &[f64],
    upper: &[f64],
) -> Result<DMatrix<f64>> {
    let owned;
    let r0 = match base {
        Some(r) => r,
        None => {
            owned = residual(params);
            &owned
        }
    };
    let m = r0.len();
    let mut jac = DMatrix::zeros(m, params.len());
    let mut p = params.to_vec();
    for j in 0..params.len() {
        let h = scale * params[j].abs().max(floor.get(j).copied().unwrap_or(0.0));
        if h == 0.0 || !h.is_finite() {
            return Err(Error::invalid(format!("zero finite-difference step for parameter {j}")));
        }
        match scheme {
            DiffScheme::Forward => {
                let step = if params[j] + h <= upper[j] { h } else { -h };
                p[j] = params[j] + step;
                let r = residual(&p);
                p[j] = params[j];
                check(&r, m, j)?;
                for i in 0..m {
                    jac[(i, j)] = (r[i] - r0[i]) / step;
                }
            }
            DiffScheme::Central => {
                // shrink toward the interior if either side crosses a bound
                let room = (upper[j] - params[j]).min(params[j] - lower[j]);
                let h = if room > 0.0 { h.min(room) } else { h };
                p[j] = params[j] + h;
                let rp = residual(&p);
                p[j] = params[j] - h;
                let rm = residual(&p);
                p[j] = params[j];
                check(&rp, m, j)?;
                check(&rm, m, j)?;
                for i in 0..m {
                    jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
                }
            }
        }
    }
    Ok(jac)
}

fn check(r: &[f64], m: usize, index: usize) -> Result<()> {
    if r.len() != m || r.iter().any(|v| !v.is_finite()) {
        return Err(Error::JacobianNonFinite { index });
    }
    Ok(())
}

//! Maps between bounded physical parameters and unconstrained internal ones.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) enum Bound {
    Free,
    /// p = lo + θ²
    Lower(f64),
    /// p = hi − θ²
    Upper(f64),
    /// p = lo + (hi − lo)·sin²θ
    Both(f64, f64),
}

impl Bound {
    pub(crate) fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::invalid(format!("bounds [{lo}, {hi}] not ordered")));
        }
        Ok(match (lo.is_finite(), hi.is_finite()) {
            (false, false) => Bound::Free,
            (true, false) => Bound::Lower(lo),
            (false, true) => Bound::Upper(hi),
            (true, true) => Bound::Both(lo, hi),
        })
    }

    pub(crate) fn to_internal(self, p: f64, index: usize) -> Result<f64> {
        let extreme = || {
            Error::invalid(format!(
                "initial value {p} of parameter {index} is not strictly inside its bounds"
            ))
        };
        if !p.is_finite() {
            return Err(Error::invalid(format!("initial value of parameter {index} is {p}")));
        }
        match self {
            Bound::Free => Ok(p),
            Bound::Lower(lo) if p > lo => Ok((p - lo).sqrt()),
            Bound::Upper(hi) if p < hi => Ok((hi - p).sqrt()),
            Bound::Both(lo, hi) if p > lo && p < hi => Ok(((p - lo) / (hi - lo)).sqrt().asin()),
            _ => Err(extreme()),
        }
    }

    pub(crate) fn to_physical(self, t: f64) -> f64 {
        match self {
            Bound::Free => t,
            Bound::Lower(lo) => lo + t * t,
            Bound::Upper(hi) => hi - t * t,
            Bound::Both(lo, hi) => {
                let s = t.sin();
                (lo + (hi - lo) * s * s).clamp(lo, hi)
            }
        }
    }

    /// dp/dθ
    pub(crate) fn derivative(self, t: f64) -> f64 {
        match self {
            Bound::Free => 1.0,
            Bound::Lower(_) => 2.0 * t,
            Bound::Upper(_) => -2.0 * t,
            Bound::Both(lo, hi) => (hi - lo) * (2.0 * t).sin(),
        }
    }
}

//! Closed-form constant for the p-norm ball analysis.

use crate::error::{Error, Result};

/// γ_{k,p,d} = −(k (1+β)^{−q} + (d−k)(1+β^{−1})^{−q})^{1/q} with β = (k/(d−k))^{p−1}.
pub fn pnorm_gamma(k: usize, p: f64, d: usize) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must lie in (1,∞), got {p}")));
    }
    if k == 0 || k >= d {
        return Err(Error::InvalidParameter(format!("k must lie in 1..{d}, got {k}")));
    }
    let (kf, rest) = (k as f64, (d - k) as f64);
    let q = p / (p - 1.0);
    let beta = (kf / rest).powf(p - 1.0);
    let h = kf * (1.0 + beta).powf(-q) + rest * (1.0 + 1.0 / beta).powf(-q);
    Ok(-h.powf(1.0 / q))
}

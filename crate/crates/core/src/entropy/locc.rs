//! Pure-state conversion distance and the relative-entropy continuity helper.

use crate::ball::{majorization_maximizer, majorization_minimizer};
use crate::error::{Error, Result};
use crate::majorization::{partial_sums_desc, ProbabilityVector};
use serde::Serialize;

/// δ* = 2 max_k Σ_{i≤k} (q↓_i − p↓_i).
pub fn locc_delta_star(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    let (sp, sq) = (partial_sums_desc(p.as_slice()), partial_sums_desc(q.as_slice()));
    let m = sq.iter().zip(&sp).map(|(a, b)| a - b).fold(0.0, f64::max);
    Ok(2.0 * m)
}

/// Extremal states certifying δ*: total-variation radius δ*/2 suffices for both.
#[derive(Debug, Clone, Serialize)]
pub struct LoccWitnesses {
    pub delta_star: f64,
    pub radius: f64,
    /// Maximizer of the ball around p; majorizes q.
    pub source_max: ProbabilityVector,
    /// Minimizer of the ball around q; majorized by p.
    pub target_min: ProbabilityVector,
    /// Trace-distance bound √(2δ*) between a Schmidt state and its approximation.
    pub trace_distance_bound: f64,
}

pub fn locc_witnesses(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<LoccWitnesses> {
    let delta_star = locc_delta_star(p, q)?;
    let radius = 0.5 * delta_star;
    Ok(LoccWitnesses {
        delta_star,
        radius,
        source_max: majorization_maximizer(p, radius)?,
        target_min: majorization_minimizer(q, radius)?.result,
        trace_distance_bound: (2.0 * delta_star).sqrt(),
    })
}

/// Bound on |D(ρ‖ω) − D(σ‖ω)| over T(ρ,σ) ≤ ε, given the extreme eigenvalues of ω (base 2).
pub fn relative_entropy_bound(d: usize, eps: f64, lambda_max: f64, lambda_min: f64) -> Result<f64> {
    if d < 2 || !(0.0..=1.0 - 1.0 / d as f64).contains(&eps) {
        return Err(Error::InvalidParameter("need d >= 2 and 0 <= ε <= 1 − 1/d".into()));
    }
    if !(lambda_min > 0.0) || lambda_max < lambda_min {
        return Err(Error::InvalidParameter("need 0 < λ_min <= λ_max".into()));
    }
    let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    Ok(eps * ((d - 1) as f64).log2() + h(eps) + h(1.0 - eps) + eps * (lambda_max.log2() - lambda_min.log2()))
}

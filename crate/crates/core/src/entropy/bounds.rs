//! Tight uniform continuity bounds and Lipschitz constants.

use super::{mills_ratio_maximum, EntropyFunctional};
use crate::ball::majorization_minimizer;
use crate::error::{Error, Result};
use crate::majorization::ProbabilityVector;
use serde::Serialize;
use std::f64::consts::LN_2;

/// Which branch of a continuity bound produced the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BelowThreshold,
    Saturated,
    LipschitzLinear,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::BelowThreshold => "below_threshold",
            Regime::Saturated => "saturated",
            Regime::LipschitzLinear => "lipschitz_linear",
        }
    }
}

/// Uniform bound on |H(p) − H(q)| over pairs with TV(p,q) ≤ ε.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityBound {
    pub value: f64,
    pub regime: Regime,
    pub threshold: f64,
}

/// Optimal Lipschitz constant with respect to total variation, or what is known of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LipschitzConstant {
    Exact { value: f64 },
    Bracket { lower: f64, upper: f64 },
    UpperBound { value: f64 },
    Infinite,
}

impl LipschitzConstant {
    /// A valid Lipschitz constant (the best known upper estimate).
    pub fn upper(&self) -> f64 {
        match *self {
            Self::Exact { value } | Self::UpperBound { value } => value,
            Self::Bracket { upper, .. } => upper,
            Self::Infinite => f64::INFINITY,
        }
    }

    pub fn exact(&self) -> Option<f64> {
        match *self {
            Self::Exact { value } => Some(value),
            _ => None,
        }
    }
}

fn binary_entropy(x: f64) -> f64 {
    let t = |y: f64| if y > 0.0 { -y * y.log2() } else { 0.0 };
    t(x) + t(1.0 - x)
}

/// Tight bound g(ε) for the family in dimension d.
pub fn uniform_continuity_bound(f: &EntropyFunctional, d: usize, eps: f64) -> Result<ContinuityBound> {
    f.validate()?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("radius must lie in [0,1], got {eps}")));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let f = f.clone().with_dim(d);
    f.check_dim(d)?;
    let threshold = 1.0 - 1.0 / d as f64;
    let pure = ProbabilityVector::pure(d);
    let range = f.evaluate(&ProbabilityVector::uniform(d))? - f.evaluate(&pure)?;
    if d == 1 || eps == 0.0 {
        return Ok(ContinuityBound { value: 0.0, regime: Regime::BelowThreshold, threshold });
    }
    let saturated = ContinuityBound { value: range, regime: Regime::Saturated, threshold };
    let dm1 = (d - 1) as f64;
    use EntropyFunctional::*;
    let concave = |value: f64| {
        if eps >= threshold {
            saturated.clone()
        } else {
            ContinuityBound { value, regime: Regime::BelowThreshold, threshold }
        }
    };
    let linear = |k: f64| {
        let v = eps * k;
        if v >= range {
            saturated.clone()
        } else {
            ContinuityBound { value: v, regime: Regime::LipschitzLinear, threshold }
        }
    };
    Ok(match &f {
        Shannon => concave(eps * dm1.log2() + binary_entropy(eps)),
        Renyi { alpha } if *alpha < 1.0 => {
            concave(((1.0 - eps).powf(*alpha) + dm1.powf(1.0 - alpha) * eps.powf(*alpha)).log2() / (1.0 - alpha))
        }
        Tsallis { alpha } => {
            concave((eps.powf(*alpha) * dm1.powf(1.0 - alpha) + (1.0 - eps).powf(*alpha) - 1.0) / (1.0 - alpha))
        }
        Unified { alpha, s } if *s > 1.0 => {
            let _ = alpha;
            return Err(Error::Unsupported("unified entropy with s > 1 has no tight bound".into()));
        }
        Unified { alpha, s } if *alpha < 1.0 => {
            let ps = (1.0 - eps).powf(*alpha) + dm1.powf(1.0 - alpha) * eps.powf(*alpha);
            concave((ps.powf(*s) - 1.0) / (s * (1.0 - alpha)))
        }
        FEntropy(fe) => concave(-fe.f(1.0 - eps) - dm1 * fe.f(eps / dm1)),
        Concurrence => concave((2.0 * (1.0 - (1.0 - eps).powi(2) - eps * eps / dm1)).max(0.0).sqrt()),
        DistinctOutcomes { trials, .. } => {
            let n = *trials as i32;
            concave((dm1.powi(n) - (dm1 - eps).powi(n)) / dm1.powi(n - 1) - eps.powi(n))
        }
        MinEntropy => {
            if eps >= threshold {
                saturated
            } else {
                ContinuityBound { value: (1.0 + eps * d as f64).log2(), regime: Regime::BelowThreshold, threshold }
            }
        }
        Renyi { .. } | Unified { .. } | Guesswork { .. } => linear(lipschitz_constant(&f, d)?.upper()),
        GraphComponents => {
            return Err(Error::Unsupported("connected components only admit a Lipschitz bound".into()))
        }
    })
}

/// Optimal Lipschitz constant of the family in dimension d.
pub fn lipschitz_constant(f: &EntropyFunctional, d: usize) -> Result<LipschitzConstant> {
    f.validate()?;
    if d < 2 {
        return Err(Error::InvalidParameter("Lipschitz constants need d >= 2".into()));
    }
    let f = f.clone().with_dim(d);
    f.check_dim(d)?;
    let df = d as f64;
    use EntropyFunctional::*;
    use LipschitzConstant::*;
    Ok(match &f {
        Shannon | Concurrence => Infinite,
        Renyi { alpha } | Tsallis { alpha } | Unified { alpha, .. } if *alpha < 1.0 => Infinite,
        Tsallis { alpha } => Exact { value: alpha / (alpha - 1.0) },
        Renyi { alpha } if *alpha == 2.0 => Exact { value: renyi2_lipschitz(d) },
        Renyi { alpha } => {
            let a = *alpha;
            let lower = a / (a - 1.0) * (df - 2.0).powf(1.0 - 1.0 / a) / (2.0 * LN_2);
            let upper = if a < 2.0 {
                a / (a - 1.0) * df.powf(a - 1.0) / LN_2
            } else {
                df * a / ((a - 1.0) * LN_2)
            };
            Bracket { lower, upper }
        }
        Unified { s, .. } if *s > 1.0 => {
            return Err(Error::Unsupported("unified entropy with s > 1 has no Lipschitz analysis".into()))
        }
        Unified { alpha, s } => {
            let a = *alpha;
            let value = if s * a < 1.0 { a / (a - 1.0) * df.powf(1.0 - a * s) } else { a / (a - 1.0) };
            UpperBound { value }
        }
        MinEntropy => Exact { value: df / LN_2 },
        FEntropy(fe) => {
            let k = fe.df(1.0) - fe.df(0.0);
            if k.is_finite() {
                Exact { value: k }
            } else {
                Infinite
            }
        }
        Guesswork { costs } => Exact { value: costs[d - 1] - costs[0] },
        DistinctOutcomes { trials, .. } => Exact { value: *trials as f64 },
        GraphComponents => {
            let (x0, mu) = mills_ratio_maximum();
            let upper = 3.0 + mu * (df - 2.0).max(0.0).sqrt();
            if d >= 3 {
                let m = df - 2.0;
                let lower = mu * m.sqrt() / 2f64.sqrt() - mu * x0 / 2.0 - (2.0 / m).sqrt() * x0 - x0 * x0 / m
                    - m.sqrt() * (-m).exp() * x0 * (x0 * x0 / 2.0).exp() / 2f64.sqrt();
                Bracket { lower: lower.max(0.0), upper }
            } else {
                UpperBound { value: upper }
            }
        }
    })
}

/// Exact Lipschitz constant of the collision entropy.
fn renyi2_lipschitz(d: usize) -> f64 {
    if d == 2 {
        2.0 / LN_2
    } else {
        let df = d as f64;
        (df - 2.0) / (((df - 1.0).sqrt() - 1.0) * LN_2)
    }
}

/// Value of the functional at the minimizer of the δ-ball around p.
pub fn smoothed_value(f: &EntropyFunctional, p: &ProbabilityVector, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("smoothing radius must lie in [0,1], got {delta}")));
    }
    f.evaluate(&majorization_minimizer(p, delta)?.result)
}

/// Optimal Lipschitz constant of the smoothed Shannon entropy.
pub fn smoothed_shannon_lipschitz(d: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) || d < 2 {
        return Err(Error::InvalidParameter("need 0 < δ < 1 and d >= 2".into()));
    }
    Ok((1.0 / delta - 1.0).log2() + ((d - 1) as f64).log2())
}

/// Optimal Lipschitz constant of the smoothed Rényi entropy of order below one.
pub fn smoothed_renyi_lipschitz(alpha: f64, d: usize, delta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || !(delta > 0.0 && delta < 1.0) || d < 2 {
        return Err(Error::InvalidParameter("need 0 < α < 1, 0 < δ < 1 and d >= 2".into()));
    }
    let dm1 = (d - 1) as f64;
    let num = (delta / dm1).powf(alpha - 1.0) - (1.0 - delta).powf(alpha - 1.0);
    let den = (1.0 - delta).powf(alpha) + dm1.powf(alpha - 1.0) * delta.powf(alpha);
    Ok(alpha / (1.0 - alpha) / LN_2 * num / den)
}

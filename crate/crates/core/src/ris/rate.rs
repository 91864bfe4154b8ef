//! Perron roots of the deformed maps, the cumulant rate Λ(α) and its Legendre transform.

use super::{deformed_map, RisProtocol};
use crate::error::{Error, Result};
use crate::qlinalg::eigenvalues_general;
use crate::quad::adaptive;
use std::sync::Arc;

/// Absolute quadrature tolerance for Λ(α).
pub const LAMBDA_QUAD_TOL: f64 = 1e-7;
/// Step of the central differences for Λ′(0) and Λ″(0).
pub const DIFF_STEP: f64 = 1e-3;
const QUAD_ORDER: usize = 16;

/// Perron root of the deformed map at (s, α).
pub fn lambda_alpha(proto: &RisProtocol, s: f64, alpha: f64) -> Result<f64> {
    let m = deformed_map(proto, s, alpha)?;
    let ev = eigenvalues_general(m.matrix())?;
    let r = ev.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    let root = ev
        .iter()
        .filter(|z| z.norm() >= r * (1.0 - 1e-7))
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .copied()
        .ok_or_else(|| Error::Numerical("empty spectrum".into()))?;
    if root.re <= 0.0 || root.im.abs() > 1e-8 * r.max(1.0) {
        return Err(Error::Numerical(format!("Perron root at s = {s}, α = {alpha} is not real positive: {root}")));
    }
    Ok(root.re)
}

/// Λ(α) = ∫₀¹ ln λ^{(α)}(s) ds by adaptive composite Gauss–Legendre quadrature.
pub fn big_lambda(proto: &RisProtocol, alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(0.0);
    }
    adaptive(0.0, 1.0, QUAD_ORDER, LAMBDA_QUAD_TOL, |s| Ok(lambda_alpha(proto, s, alpha)?.ln()))
}

fn log_lambda(proto: &RisProtocol, s: f64, alpha: f64) -> Result<f64> {
    Ok(lambda_alpha(proto, s, alpha)?.ln())
}

/// Λ′(0) and Λ″(0) from central differences with one Richardson step, taken under the integral.
pub fn lambda_derivatives(proto: &RisProtocol) -> Result<(f64, f64)> {
    let h = DIFF_STEP;
    let d1 = adaptive(0.0, 1.0, QUAD_ORDER, 1e-10, |s| {
        let c = |h: f64| -> Result<f64> { Ok((log_lambda(proto, s, h)? - log_lambda(proto, s, -h)?) / (2.0 * h)) };
        Ok((4.0 * c(h / 2.0)? - c(h)?) / 3.0)
    })?;
    let d2 = adaptive(0.0, 1.0, QUAD_ORDER, 1e-9, |s| {
        let l0 = log_lambda(proto, s, 0.0)?;
        let c = |h: f64| -> Result<f64> {
            Ok((log_lambda(proto, s, h)? - 2.0 * l0 + log_lambda(proto, s, -h)?) / (h * h))
        };
        Ok((4.0 * c(h / 2.0)? - c(h)?) / 3.0)
    })?;
    Ok((d1, d2))
}

type Evaluator = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Λ sampled on a symmetric α grid, with derivatives at 0 and an evaluator for refinement.
#[derive(Clone)]
pub struct RateFunction {
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
    pub d1: f64,
    pub d2: f64,
    eval: Evaluator,
}

impl std::fmt::Debug for RateFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RateFunction")
            .field("alphas", &self.alphas)
            .field("values", &self.values)
            .field("d1", &self.d1)
            .field("d2", &self.d2)
            .finish()
    }
}

impl RateFunction {
    /// Samples Λ of a protocol on `n` equally spaced points of [−α_max, α_max].
    pub fn from_protocol(proto: &RisProtocol, alpha_max: f64, n: usize) -> Result<Self> {
        let (d1, d2) = lambda_derivatives(proto)?;
        let p = proto.clone();
        Self::from_fn(move |a| big_lambda(&p, a), alpha_max, n, d1, d2)
    }

    /// Samples an arbitrary cumulant function.
    pub fn from_fn(
        f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
        alpha_max: f64,
        n: usize,
        d1: f64,
        d2: f64,
    ) -> Result<Self> {
        if !(alpha_max > 0.0) || n < 3 {
            return Err(Error::InvalidParameter("need α_max > 0 and at least three grid points".into()));
        }
        let alphas: Vec<f64> = (0..n).map(|i| -alpha_max + 2.0 * alpha_max * i as f64 / (n - 1) as f64).collect();
        let values = alphas.iter().map(|&a| f(a)).collect::<Result<Vec<_>>>()?;
        Ok(RateFunction { alphas, values, d1, d2, eval: Arc::new(f) })
    }

    pub fn eval(&self, alpha: f64) -> Result<f64> {
        (self.eval)(alpha)
    }

    /// Observed slope range [ν₋, ν₊] of the sampled Λ.
    pub fn slope_range(&self) -> (f64, f64) {
        let n = self.alphas.len();
        let lo = (self.values[1] - self.values[0]) / (self.alphas[1] - self.alphas[0]);
        let hi = (self.values[n - 1] - self.values[n - 2]) / (self.alphas[n - 1] - self.alphas[n - 2]);
        (lo, hi)
    }

    /// True when every second difference on the grid is at least −tol.
    pub fn is_convex(&self, tol: f64) -> bool {
        let h = self.alphas[1] - self.alphas[0];
        self.values.windows(3).all(|w| (w[0] - 2.0 * w[1] + w[2]) / (h * h) >= -tol)
    }

    /// Λ*(x) = sup_α (αx − Λ(α)); +∞ outside the observed slope range.
    pub fn legendre(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.slope_range();
        let slack = 1e-9 * (1.0 + x.abs());
        if x < lo - slack || x > hi + slack {
            return Ok(f64::INFINITY);
        }
        let g = |a: f64, l: f64| a * x - l;
        let (best, _) = self
            .alphas
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (&a, &l))| (i, g(a, l)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty grid");
        let n = self.alphas.len();
        let mut a = self.alphas[best.saturating_sub(1)];
        let mut b = self.alphas[(best + 1).min(n - 1)];
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let f = |t: f64| -> Result<f64> { Ok(g(t, self.eval(t)?)) };
        let mut c1 = b - phi * (b - a);
        let mut c2 = a + phi * (b - a);
        let mut f1 = f(c1)?;
        let mut f2 = f(c2)?;
        while b - a > 1e-9 {
            if f1 < f2 {
                a = c1;
                c1 = c2;
                f1 = f2;
                c2 = a + phi * (b - a);
                f2 = f(c2)?;
            } else {
                b = c2;
                c2 = c1;
                f2 = f1;
                c1 = b - phi * (b - a);
                f1 = f(c1)?;
            }
        }
        let grid_best = g(self.alphas[best], self.values[best]);
        Ok(f1.max(f2).max(grid_best))
    }
}

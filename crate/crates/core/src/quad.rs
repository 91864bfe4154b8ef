//! Gauss–Legendre quadrature helpers.

use crate::error::{Error, Result};
use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;

/// Fixed-order rule on [a, b] for a fallible integrand.
pub fn integrate<F>(rule: &GaussLegendre, a: f64, b: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut err = None;
    let v = rule.integrate(a, b, |x| match f(x) {
        Ok(y) => y,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

pub fn rule(order: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(order).expect("positive quadrature order"))
}

/// Composite rule refined by panel doubling until successive estimates agree to `tol`.
pub fn adaptive<F>(a: f64, b: f64, order: usize, tol: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let gl = rule(order);
    let mut composite = |panels: usize| -> Result<f64> {
        let h = (b - a) / panels as f64;
        (0..panels).try_fold(0.0, |acc, i| {
            let lo = a + i as f64 * h;
            Ok(acc + integrate(&gl, lo, lo + h, &mut f)?)
        })
    };
    let mut panels = 1;
    let mut prev = composite(panels)?;
    while panels < 1 << 12 {
        panels *= 2;
        let next = composite(panels)?;
        if (next - prev).abs() <= tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Numerical(format!("quadrature did not reach tolerance {tol:e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_smooth_functions() {
        let v = integrate(&rule(16), 0.0, 1.0, |x| Ok(x.exp())).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-14);
        let v = adaptive(0.0, 1.0, 8, 1e-12, |x| Ok((3.0 * x).sin())).unwrap();
        assert!((v - (1.0 - 3f64.cos()) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn propagates_errors() {
        let r = integrate(&rule(4), 0.0, 1.0, |_| Err(Error::Numerical("boom".into())));
        assert!(r.is_err());
    }
}

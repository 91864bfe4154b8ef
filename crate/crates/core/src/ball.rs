//! Majorization extrema over total-variation balls.

use crate::error::{Error, Result};
use crate::majorization::{descending_order, majorizes_slice, total_variation, ProbabilityVector, MAJ_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Relative slack when testing the block inequalities.
const BLOCK_TOL: f64 = 1e-12;

/// The minimizer together with its flattening parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallExtremumDetail {
    pub gamma_plus: f64,
    pub m_plus: usize,
    pub gamma_minus: f64,
    pub m_minus: usize,
    pub result: ProbabilityVector,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("radius must be finite and >= 0, got {eps}")));
    }
    Ok(())
}

/// Distance from `r` to the uniform vector.
pub fn tv_to_uniform(r: &[f64]) -> f64 {
    let u = 1.0 / r.len() as f64;
    0.5 * r.iter().map(|x| (x - u).abs()).sum::<f64>()
}

fn unsort(sorted: &[f64], order: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; sorted.len()];
    for (k, &i) in order.iter().enumerate() {
        out[i] = sorted[k];
    }
    out
}

/// Element of the ε-ball around `r` that is majorized by every other element.
pub fn majorization_minimizer(r: &ProbabilityVector, eps: f64) -> Result<BallExtremumDetail> {
    check_eps(eps)?;
    Ok(minimizer_slice(r.as_slice(), eps))
}

pub(crate) fn minimizer_slice(r: &[f64], eps: f64) -> BallExtremumDetail {
    let d = r.len();
    let u = 1.0 / d as f64;
    let uniform = || BallExtremumDetail {
        gamma_plus: u,
        m_plus: 0,
        gamma_minus: u,
        m_minus: 0,
        result: ProbabilityVector::uniform(d),
    };
    if eps == 0.0 {
        let s = crate::majorization::sorted_desc(r);
        return BallExtremumDetail {
            gamma_plus: s[0],
            m_plus: 0,
            gamma_minus: s[d - 1],
            m_minus: 0,
            result: ProbabilityVector::from_raw(r.to_vec()),
        };
    }
    if d == 1 || tv_to_uniform(r) <= eps {
        return uniform();
    }
    let order = descending_order(r);
    let s: Vec<f64> = order.iter().map(|&i| r[i]).collect();

    let mut head = 0.0;
    let mut plus = None;
    for m in 1..d {
        head += s[m - 1];
        let g = (head - eps) / m as f64;
        if g >= s[m] - BLOCK_TOL * s[m].abs().max(u) {
            plus = Some((m, g));
            break;
        }
    }
    let mut tail = 0.0;
    let mut minus = None;
    for m in 1..d {
        tail += s[d - m];
        let g = (tail + eps) / m as f64;
        let next = s[d - 1 - m];
        if g <= next + BLOCK_TOL * next.abs().max(u) {
            minus = Some((m, g));
            break;
        }
    }
    let (Some((mp, gp)), Some((mm, gm))) = (plus, minus) else {
        return uniform();
    };
    if mp + mm > d || gp <= gm {
        return uniform();
    }
    let mut out = s.clone();
    out[..mp].iter_mut().for_each(|x| *x = gp);
    out[d - mm..].iter_mut().for_each(|x| *x = gm);
    BallExtremumDetail {
        gamma_plus: gp,
        m_plus: mp,
        gamma_minus: gm,
        m_minus: mm,
        result: ProbabilityVector::from_raw(unsort(&out, &order)),
    }
}

/// Element of the ε-ball around `r` that majorizes every other element.
pub fn majorization_maximizer(r: &ProbabilityVector, eps: f64) -> Result<ProbabilityVector> {
    check_eps(eps)?;
    Ok(ProbabilityVector::from_raw(maximizer_slice(r.as_slice(), eps)))
}

pub(crate) fn maximizer_slice(r: &[f64], eps: f64) -> Vec<f64> {
    let d = r.len();
    if d == 1 || eps == 0.0 {
        return r.to_vec();
    }
    let order = descending_order(r);
    let mut s: Vec<f64> = order.iter().map(|&i| r[i]).collect();
    // largest l <= d-1 whose tail sum stays within eps
    let mut l = 0;
    let mut q = 0.0;
    while l < d - 1 && q + s[d - 1 - l] <= eps {
        q += s[d - 1 - l];
        l += 1;
    }
    if l == d - 1 {
        s.iter_mut().for_each(|x| *x = 0.0);
        s[0] = 1.0;
    } else {
        s[d - l..].iter_mut().for_each(|x| *x = 0.0);
        s[d - l - 1] -= eps - q;
        s[0] += eps;
    }
    unsort(&s, &order)
}

/// Draws a point of the ε-ball by moving capped random mass between random subsets.
pub fn sample_ball<R: Rng + ?Sized>(r: &[f64], eps: f64, rng: &mut R) -> Vec<f64> {
    let d = r.len();
    let t = if rng.random_bool(0.5) { eps } else { eps * rng.random::<f64>() };
    let donors: Vec<usize> = (0..d).filter(|_| rng.random_bool(0.5)).collect();
    let receivers: Vec<usize> = (0..d).filter(|_| rng.random_bool(0.5)).collect();
    if donors.is_empty() || receivers.is_empty() {
        return r.to_vec();
    }
    let dirichlet = |n: usize, rng: &mut R| -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    };
    let mut q = r.to_vec();
    let mut moved = 0.0;
    for (&i, w) in donors.iter().zip(dirichlet(donors.len(), rng)) {
        let take = (w * t).min(q[i]);
        q[i] -= take;
        moved += take;
    }
    for (&i, w) in receivers.iter().zip(dirichlet(receivers.len(), rng)) {
        q[i] += w * moved;
    }
    q
}

/// Checks minimizer ≺ q ≺ maximizer on random ball samples.
pub fn randomized_dominance_oracle(r: &ProbabilityVector, eps: f64, n_samples: usize, seed: u64) -> bool {
    let Ok(lo) = majorization_minimizer(r, eps) else { return false };
    let Ok(hi) = majorization_maximizer(r, eps) else { return false };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples).all(|_| {
        let q = sample_ball(r.as_slice(), eps, &mut rng);
        debug_assert!(total_variation(&q, r.as_slice()) <= eps + 1e-12);
        majorizes_slice(&q, lo.result.as_slice(), MAJ_TOL).unwrap_or(false)
            && majorizes_slice(hi.as_slice(), &q, MAJ_TOL).unwrap_or(false)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn minimizer_of_pure_state() {
        let d = 5;
        let eps = 0.3;
        let m = majorization_minimizer(&ProbabilityVector::pure(d), eps).unwrap();
        let mut want = vec![eps / 4.0; d];
        want[0] = 1.0 - eps;
        assert!(close(m.result.as_slice(), &want, 1e-15));
        assert_eq!((m.m_plus, m.m_minus), (1, 4));
    }

    #[test]
    fn minimizer_figure_example() {
        let r = pv(&[0.32, 0.26, 0.19, 0.13, 0.10]);
        let m = majorization_minimizer(&r, 0.02).unwrap();
        assert!(close(m.result.as_slice(), &[0.30, 0.26, 0.19, 0.13, 0.12], 1e-14));
        let m = majorization_minimizer(&r, 0.18).unwrap();
        assert!(close(m.result.as_slice(), &[0.2; 5], 1e-15));
        assert_eq!(m.m_plus, 0);
        assert_eq!(m.gamma_plus, 0.2);
    }

    #[test]
    fn zero_radius_is_identity() {
        let r = pv(&[0.1, 0.6, 0.3]);
        assert_eq!(majorization_minimizer(&r, 0.0).unwrap().result, r);
        assert_eq!(majorization_maximizer(&r, 0.0).unwrap(), r);
    }

    #[test]
    fn negative_radius_rejected() {
        let r = pv(&[0.5, 0.5]);
        assert!(majorization_minimizer(&r, -0.1).is_err());
        assert!(majorization_maximizer(&r, -0.1).is_err());
    }

    #[test]
    fn maximizer_examples() {
        let r = pv(&[0.21, 0.24, 0.55]);
        let m = majorization_maximizer(&r, 0.1).unwrap();
        assert!(close(m.as_slice(), &[0.11, 0.24, 0.65], 1e-15));
        let r = pv(&[0.4, 0.35, 0.25]);
        let m = majorization_maximizer(&r, 0.6).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 0.0, 0.0]);
        let r = pv(&[0.5, 0.3, 0.15, 0.05]);
        let m = majorization_maximizer(&r, 0.1).unwrap();
        assert!(close(m.as_slice(), &[0.6, 0.3, 0.1, 0.0], 1e-14));
    }

    #[test]
    fn oracle_on_uniform_and_random() {
        assert!(randomized_dominance_oracle(&ProbabilityVector::uniform(4), 0.2, 500, 1));
        let r = pv(&[0.4, 0.3, 0.2, 0.1]);
        assert!(randomized_dominance_oracle(&r, 0.05, 10_000, 7));
    }

    #[test]
    fn minimizer_uniform_at_boundary_is_continuous() {
        let r = pv(&[0.32, 0.26, 0.19, 0.13, 0.10]);
        let tv = tv_to_uniform(r.as_slice());
        let a = majorization_minimizer(&r, tv).unwrap().result;
        let b = majorization_minimizer(&r, tv - 1e-9).unwrap().result;
        assert!(total_variation(a.as_slice(), b.as_slice()) < 1e-8);
    }
}

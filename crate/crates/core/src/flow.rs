//! Majorization flow: generator, degeneracy horizon, path and derivative formulas.

use crate::ball::{majorization_minimizer, minimizer_slice};
use crate::entropy::EntropyFunctional;
use crate::error::{Error, Result};
use crate::majorization::{descending_order, ProbabilityVector};
use crate::quad;
use serde::Serialize;

/// Absolute tolerance for treating two entries as one level.
const LEVEL_TOL: f64 = 1e-13;

/// A kink of the piecewise-linear flow path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowBreakpoint {
    pub epsilon: f64,
    pub point: ProbabilityVector,
    pub k_plus: usize,
    pub k_minus: usize,
}

/// Indices of the maximal and minimal entries; both empty when `r` is flat.
pub fn extreme_blocks(r: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let hi = r.iter().copied().fold(f64::MIN, f64::max);
    let lo = r.iter().copied().fold(f64::MAX, f64::min);
    if hi - lo <= LEVEL_TOL {
        return (Vec::new(), Vec::new());
    }
    let top = (0..r.len()).filter(|&i| hi - r[i] <= LEVEL_TOL).collect();
    let bottom = (0..r.len()).filter(|&i| r[i] - lo <= LEVEL_TOL).collect();
    (top, bottom)
}

fn generator_slice(r: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; r.len()];
    let (top, bottom) = extreme_blocks(r);
    for &i in &top {
        g[i] = -1.0 / top.len() as f64;
    }
    for &i in &bottom {
        g[i] = 1.0 / bottom.len() as f64;
    }
    g
}

/// Direction in which the minimizer moves: flattens the extreme blocks at unit speed.
pub fn flow_generator(r: &ProbabilityVector) -> Vec<f64> {
    generator_slice(r.as_slice())
}

/// Distinct levels of `r` in decreasing order with their multiplicities.
fn levels(r: &[f64]) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for i in descending_order(r) {
        match out.last_mut() {
            Some((v, k)) if *v - r[i] <= LEVEL_TOL => *k += 1,
            _ => out.push((r[i], 1)),
        }
    }
    out
}

fn horizon_slice(r: &[f64]) -> f64 {
    let lv = levels(r);
    let l = lv.len();
    if l < 2 {
        return 0.0;
    }
    let (kp, km) = (lv[0].1 as f64, lv[l - 1].1 as f64);
    if l == 2 {
        kp * km * (lv[0].0 - lv[1].0) / (kp + km)
    } else {
        (kp * (lv[0].0 - lv[1].0)).min(km * (lv[l - 2].0 - lv[l - 1].0))
    }
}

/// Largest radius over which the flow stays linear from `r`.
pub fn degeneracy_horizon(r: &ProbabilityVector) -> f64 {
    horizon_slice(r.as_slice())
}

// Merges entries that the last step brought within tolerance of each other.
fn snap_levels(r: &mut [f64]) {
    let order = descending_order(r);
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && r[order[start]] - r[order[end]] <= 1e-12 {
            end += 1;
        }
        if end - start > 1 {
            let mean = order[start..end].iter().map(|&i| r[i]).sum::<f64>() / (end - start) as f64;
            order[start..end].iter().for_each(|&i| r[i] = mean);
        }
        start = end;
    }
}

/// Walks the flow from `r` for total radius `eps`, recording each breakpoint.
pub fn flow_path(r: &ProbabilityVector, eps: f64) -> Result<Vec<FlowBreakpoint>> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be >= 0, got {eps}")));
    }
    let bp = |epsilon: f64, v: &[f64]| {
        let (top, bottom) = extreme_blocks(v);
        FlowBreakpoint {
            epsilon,
            point: ProbabilityVector::from_raw(v.to_vec()),
            k_plus: top.len(),
            k_minus: bottom.len(),
        }
    };
    let mut cur = r.as_slice().to_vec();
    let mut done = 0.0;
    let mut path = vec![bp(0.0, &cur)];
    while done < eps {
        let delta = horizon_slice(&cur);
        if delta <= 0.0 {
            break;
        }
        let step = delta.min(eps - done);
        let g = generator_slice(&cur);
        cur.iter_mut().zip(&g).for_each(|(x, gi)| *x += step * gi);
        snap_levels(&mut cur);
        done += step;
        path.push(bp(done, &cur));
    }
    Ok(path)
}

/// Derivative of `f` along the flow at `r`.
pub fn gamma_h(f: &EntropyFunctional, r: &ProbabilityVector) -> Result<f64> {
    f.gamma(r)
}

/// Largest increase of `f` over the ε-ball, H(minimizer) − H(r).
pub fn delta_eps_h(f: &EntropyFunctional, r: &ProbabilityVector, eps: f64) -> Result<f64> {
    let m = majorization_minimizer(r, eps)?;
    Ok(f.evaluate(&m.result)? - f.evaluate(r)?)
}

/// Same increase computed by integrating the flow derivative segment by segment.
pub fn delta_eps_h_quadrature(f: &EntropyFunctional, r: &ProbabilityVector, eps: f64) -> Result<f64> {
    let path = flow_path(r, eps)?;
    let gl = quad::rule(16);
    let mut total = 0.0;
    for w in path.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let g = generator_slice(a.point.as_slice());
        let x0 = a.point.as_slice();
        total += quad::integrate(&gl, 0.0, b.epsilon - a.epsilon, |s| {
            let x: Vec<f64> = x0.iter().zip(&g).map(|(xi, gi)| xi + s * gi).collect();
            f.gamma_slice(&x)
        })?;
    }
    Ok(total)
}

/// Value of the flow at radius `eps`, computed through the ball minimizer.
pub fn flow_point(r: &[f64], eps: f64) -> Vec<f64> {
    minimizer_slice(r, eps).result.into_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorization::total_variation;

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn generator_examples() {
        assert_eq!(flow_generator(&ProbabilityVector::uniform(3)), vec![0.0; 3]);
        assert_eq!(flow_generator(&pv(&[0.5, 0.3, 0.2])), vec![-1.0, 0.0, 1.0]);
        assert_eq!(flow_generator(&pv(&[0.4, 0.4, 0.2])), vec![-0.5, -0.5, 1.0]);
    }

    #[test]
    fn horizon_examples() {
        assert!((degeneracy_horizon(&pv(&[0.7, 0.3])) - 0.2).abs() < 1e-15);
        assert_eq!(degeneracy_horizon(&ProbabilityVector::uniform(4)), 0.0);
        assert!((degeneracy_horizon(&pv(&[0.5, 0.3, 0.2])) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn path_examples() {
        let p = flow_path(&pv(&[0.5, 0.3, 0.2]), 0.0).unwrap();
        assert_eq!(p.len(), 1);
        let d = 4;
        let p = flow_path(&ProbabilityVector::pure(d), 0.9).unwrap();
        let end = p.last().unwrap();
        assert!(total_variation(end.point.as_slice(), &[0.25; 4]) < 1e-15);
        assert!(p.len() <= d);
    }

    #[test]
    fn path_endpoint_matches_minimizer() {
        let r = pv(&[0.32, 0.26, 0.19, 0.13, 0.10]);
        for eps in [0.01, 0.05, 0.1, 0.15, 0.2] {
            let end = flow_path(&r, eps).unwrap().pop().unwrap();
            let m = majorization_minimizer(&r, eps).unwrap();
            assert!(total_variation(end.point.as_slice(), m.result.as_slice()) < 1e-12);
        }
    }

    #[test]
    fn audenaert_fannes_increase() {
        let d = 5;
        let eps = 0.3;
        let v = delta_eps_h(&EntropyFunctional::Shannon, &ProbabilityVector::pure(d), eps).unwrap();
        let h2 = -eps * eps.log2() - (1.0 - eps) * (1.0 - eps).log2();
        assert!((v - (eps * 4f64.log2() + h2)).abs() < 1e-13);
        assert_eq!(delta_eps_h(&EntropyFunctional::Shannon, &ProbabilityVector::pure(d), 0.0).unwrap(), 0.0);
    }
}

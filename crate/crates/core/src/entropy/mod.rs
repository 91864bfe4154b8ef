//! Schur-concave functionals, their derivatives along the flow and continuity data.

mod bounds;
mod locc;
mod mills;
mod pnorm;

pub use bounds::{
    lipschitz_constant, smoothed_renyi_lipschitz, smoothed_shannon_lipschitz, smoothed_value,
    uniform_continuity_bound, ContinuityBound, LipschitzConstant, Regime,
};
pub use locc::{locc_delta_star, locc_witnesses, relative_entropy_bound, LoccWitnesses};
pub use mills::{mills_f, mills_ratio, mills_ratio_maximum};
pub use pnorm::pnorm_gamma;

use crate::error::{Error, Result};
use crate::majorization::{descending_order, ProbabilityVector};
use rand::Rng;
use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// Largest dimension accepted by the connected-components functional.
pub const GRAPH_MAX_DIM: usize = 20;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Entropy induced by a convex function f with f(0) = f(1) = 0.
#[derive(Clone)]
pub struct FEntropy {
    f: ScalarFn,
    df: ScalarFn,
}

impl FEntropy {
    pub fn new(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if f(0.0).abs() > 1e-12 || f(1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("f must vanish at 0 and 1".into()));
        }
        Ok(Self { f: Arc::new(f), df: Arc::new(df) })
    }

    pub fn f(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn df(&self, x: f64) -> f64 {
        (self.df)(x)
    }
}

impl fmt::Debug for FEntropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FEntropy")
    }
}

/// A Schur-concave functional on probability vectors.
#[derive(Debug, Clone)]
pub enum EntropyFunctional {
    Shannon,
    Renyi { alpha: f64 },
    Tsallis { alpha: f64 },
    Unified { alpha: f64, s: f64 },
    MinEntropy,
    FEntropy(FEntropy),
    Concurrence,
    Guesswork { costs: Vec<f64> },
    DistinctOutcomes { trials: u32, symbols: usize },
    GraphComponents,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() || alpha == 1.0 {
        return Err(Error::InvalidParameter(format!("order must lie in (0,1)∪(1,∞), got {alpha}")));
    }
    Ok(())
}

impl EntropyFunctional {
    /// Checks family parameters.
    pub fn validate(&self) -> Result<()> {
        use EntropyFunctional::*;
        match self {
            Renyi { alpha } | Tsallis { alpha } => check_alpha(*alpha),
            Unified { alpha, s } => {
                check_alpha(*alpha)?;
                if *s == 0.0 || !s.is_finite() {
                    return Err(Error::InvalidParameter("unified entropy needs finite s != 0".into()));
                }
                Ok(())
            }
            Guesswork { costs } => {
                if costs.is_empty() || costs[0] < 0.0 || costs.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::InvalidParameter("costs must be nonnegative and nondecreasing".into()));
                }
                Ok(())
            }
            DistinctOutcomes { trials, symbols } => {
                if *trials == 0 || *symbols == 0 {
                    return Err(Error::InvalidParameter("trials and symbols must be positive".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Standard guesswork with costs 1..d.
    pub fn guesswork(d: usize) -> Self {
        Self::Guesswork { costs: (1..=d).map(|i| i as f64).collect() }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        match self {
            Self::Guesswork { costs } if costs.len() != d => {
                Err(Error::DimensionMismatch { expected: costs.len(), got: d })
            }
            Self::DistinctOutcomes { symbols, .. } if *symbols != d => {
                Err(Error::DimensionMismatch { expected: *symbols, got: d })
            }
            Self::GraphComponents if d > GRAPH_MAX_DIM => {
                Err(Error::Unsupported(format!("graph components limited to d <= {GRAPH_MAX_DIM}")))
            }
            _ => Ok(()),
        }
    }

    /// Value of the functional at `p`.
    pub fn evaluate(&self, p: &ProbabilityVector) -> Result<f64> {
        self.evaluate_slice(p.as_slice())
    }

    /// Value of the functional on a raw vector.
    pub fn evaluate_slice(&self, p: &[f64]) -> Result<f64> {
        self.validate()?;
        self.check_dim(p.len())?;
        use EntropyFunctional::*;
        let pos = || p.iter().copied().filter(|&x| x > 0.0);
        Ok(match self {
            Shannon => -pos().map(|x| x * x.log2()).sum::<f64>(),
            Renyi { alpha } => power_sum(p, *alpha).log2() / (1.0 - alpha),
            Tsallis { alpha } => (power_sum(p, *alpha) - 1.0) / (1.0 - alpha),
            Unified { alpha, s } => (power_sum(p, *alpha).powf(*s) - 1.0) / (s * (1.0 - alpha)),
            MinEntropy => -p.iter().copied().fold(f64::MIN, f64::max).log2(),
            FEntropy(fe) => -p.iter().map(|&x| fe.f(x.max(0.0))).sum::<f64>(),
            Concurrence => (2.0 * (1.0 - p.iter().map(|x| x * x).sum::<f64>())).max(0.0).sqrt(),
            Guesswork { costs } => {
                descending_order(p).iter().zip(costs).map(|(&i, c)| c * p[i]).sum()
            }
            DistinctOutcomes { trials, symbols } => {
                *symbols as f64 - p.iter().map(|x| (1.0 - x).powi(*trials as i32)).sum::<f64>()
            }
            GraphComponents => {
                let e = elementary_symmetric(p);
                let mut fact = 1.0;
                let mut total = 0.0;
                for (k, ek) in e.iter().enumerate().skip(1) {
                    total += fact * ek;
                    fact *= k as f64;
                }
                total
            }
        })
    }

    /// Gradient of the functional, or of its sorted extension for guesswork.
    /// Entries may be infinite at the boundary of the simplex.
    fn gradient(&self, r: &[f64]) -> Vec<f64> {
        use EntropyFunctional::*;
        match self {
            Shannon => r.iter().map(|&x| -(x.ln() + 1.0) / LN_2).collect(),
            Renyi { alpha } => {
                let z = power_sum(r, *alpha);
                r.iter().map(|&x| alpha * x.powf(alpha - 1.0) / ((1.0 - alpha) * LN_2 * z)).collect()
            }
            Tsallis { alpha } => r.iter().map(|&x| alpha * x.powf(alpha - 1.0) / (1.0 - alpha)).collect(),
            Unified { alpha, s } => {
                let pre = power_sum(r, *alpha).powf(s - 1.0);
                r.iter().map(|&x| pre * alpha * x.powf(alpha - 1.0) / (1.0 - alpha)).collect()
            }
            FEntropy(fe) => r.iter().map(|&x| -fe.df(x)).collect(),
            Concurrence => {
                let c = (2.0 * (1.0 - r.iter().map(|x| x * x).sum::<f64>())).max(0.0).sqrt();
                r.iter().map(|&x| -2.0 * x / c).collect()
            }
            DistinctOutcomes { trials, .. } => {
                let n = *trials as f64;
                r.iter().map(|&x| n * (1.0 - x).powi(*trials as i32 - 1)).collect()
            }
            GraphComponents => (0..r.len())
                .map(|i| {
                    let rest: Vec<f64> = r.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &x)| x).collect();
                    let mut fact = 1.0;
                    let mut total = 0.0;
                    for (k, ek) in elementary_symmetric(&rest).iter().enumerate() {
                        total += fact * ek;
                        fact *= (k + 1) as f64;
                    }
                    total
                })
                .collect(),
            MinEntropy | Guesswork { .. } => unreachable!("handled by gamma"),
        }
    }

    /// One-sided derivative of the functional along the majorization flow at `r`.
    pub fn gamma(&self, r: &ProbabilityVector) -> Result<f64> {
        self.gamma_slice(r.as_slice())
    }

    pub(crate) fn gamma_slice(&self, r: &[f64]) -> Result<f64> {
        self.validate()?;
        self.check_dim(r.len())?;
        let (top, bottom) = crate::flow::extreme_blocks(r);
        if top.is_empty() {
            return Ok(0.0);
        }
        let (kp, km) = (top.len() as f64, bottom.len() as f64);
        use EntropyFunctional::*;
        let g = match self {
            MinEntropy => 1.0 / (kp * LN_2 * r[top[0]]),
            Guesswork { costs } => {
                // sorted extension: positions of the extreme blocks in the sorted order
                let d = r.len();
                let low: f64 = costs[d - bottom.len()..].iter().sum::<f64>() / km;
                let high: f64 = costs[..top.len()].iter().sum::<f64>() / kp;
                low - high
            }
            _ => {
                let grad = self.gradient(r);
                let low = bottom.iter().map(|&i| grad[i]).sum::<f64>() / km;
                let high = top.iter().map(|&i| grad[i]).sum::<f64>() / kp;
                if low == f64::INFINITY || high == f64::NEG_INFINITY {
                    f64::INFINITY
                } else {
                    low - high
                }
            }
        };
        if g.is_nan() {
            return Err(Error::Numerical("flow derivative undefined at this point".into()));
        }
        Ok(g)
    }

    /// Short identifier used in CSV output.
    pub fn name(&self) -> String {
        use EntropyFunctional::*;
        match self {
            Shannon => "shannon".into(),
            Renyi { alpha } => format!("renyi:alpha={alpha}"),
            Tsallis { alpha } => format!("tsallis:alpha={alpha}"),
            Unified { alpha, s } => format!("unified:alpha={alpha},s={s}"),
            MinEntropy => "minent".into(),
            FEntropy(_) => "fentropy".into(),
            Concurrence => "concurrence".into(),
            Guesswork { costs } => format!(
                "guesswork:costs={}",
                costs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
            ),
            DistinctOutcomes { trials, symbols } => format!("distinct:n={trials},m={symbols}"),
            GraphComponents => "graph".into(),
        }
    }
}

fn power_sum(p: &[f64], alpha: f64) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|x| x.powf(alpha)).sum()
}

/// Elementary symmetric polynomials e_0..e_n of the entries.
pub fn elementary_symmetric(p: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; p.len() + 1];
    e[0] = 1.0;
    for (n, &x) in p.iter().enumerate() {
        for k in (1..=n + 1).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

/// Draws one random graph (node i linked to a p-distributed node) and counts its components.
pub fn sample_graph_components<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let n = p.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for i in 0..n {
        let mut u = rng.random::<f64>();
        let mut j = n - 1;
        for (k, &w) in p.iter().enumerate() {
            if u < w {
                j = k;
                break;
            }
            u -= w;
        }
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components
}

impl FromStr for EntropyFunctional {
    type Err = Error;

    /// Parses `family[:key=value,...]`, e.g. `renyi:alpha=2` or `guesswork:costs=1;2;3`.
    fn from_str(s: &str) -> Result<Self> {
        let (family, args) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = std::collections::HashMap::new();
        for part in args.split(',').filter(|x| !x.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("malformed argument '{part}'")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let num = |key: &str| -> Result<f64> {
            let v = kv.get(key).ok_or_else(|| Error::InvalidParameter(format!("missing '{key}'")))?;
            match v.as_str() {
                "inf" | "infinity" => Ok(f64::INFINITY),
                _ => v.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad number '{v}'"))),
            }
        };
        let f = match family.trim().to_ascii_lowercase().as_str() {
            "shannon" | "vonneumann" => Self::Shannon,
            "renyi" => {
                let alpha = num("alpha")?;
                if alpha.is_infinite() {
                    Self::MinEntropy
                } else {
                    Self::Renyi { alpha }
                }
            }
            "tsallis" => Self::Tsallis { alpha: num("alpha")? },
            "unified" => Self::Unified { alpha: num("alpha")?, s: num("s")? },
            "minent" | "min" | "minentropy" => Self::MinEntropy,
            "concurrence" => Self::Concurrence,
            "guesswork" => match kv.get("costs") {
                Some(c) => Self::Guesswork {
                    costs: c
                        .split(';')
                        .map(|x| x.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| Error::InvalidParameter(format!("bad costs '{c}'")))?,
                },
                None => Self::Guesswork { costs: Vec::new() },
            },
            "distinct" => Self::DistinctOutcomes {
                trials: num("n")? as u32,
                symbols: kv.get("m").map(|m| m.parse().unwrap_or(0)).unwrap_or(0),
            },
            "graph" => Self::GraphComponents,
            other => return Err(Error::InvalidParameter(format!("unknown functional '{other}'"))),
        };
        Ok(f)
    }
}

impl EntropyFunctional {
    /// Fills dimension-dependent defaults left open by the parser.
    pub fn with_dim(self, d: usize) -> Self {
        match self {
            Self::Guesswork { costs } if costs.is_empty() => Self::guesswork(d),
            Self::DistinctOutcomes { trials, symbols: 0 } => Self::DistinctOutcomes { trials, symbols: d },
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let u = ProbabilityVector::uniform(8);
        assert!((EntropyFunctional::Shannon.evaluate(&u).unwrap() - 3.0).abs() < 1e-14);
        let g = EntropyFunctional::Guesswork { costs: vec![1.0, 2.0, 3.0] };
        assert!((g.evaluate(&pv(&[0.2, 0.5, 0.3])).unwrap() - 1.7).abs() < 1e-14);
        let ec = EntropyFunctional::GraphComponents;
        assert_eq!(ec.evaluate(&ProbabilityVector::pure(6)).unwrap(), 1.0);
        let k = EntropyFunctional::DistinctOutcomes { trials: 2, symbols: 2 };
        assert!((k.evaluate(&pv(&[0.5, 0.5])).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn parameter_validation() {
        let p = pv(&[0.5, 0.5]);
        assert!(EntropyFunctional::Renyi { alpha: 1.0 }.evaluate(&p).is_err());
        assert!(EntropyFunctional::Tsallis { alpha: -1.0 }.evaluate(&p).is_err());
        assert!(EntropyFunctional::Unified { alpha: 2.0, s: 0.0 }.evaluate(&p).is_err());
        assert!(EntropyFunctional::Guesswork { costs: vec![2.0, 1.0] }.evaluate(&p).is_err());
        assert!(EntropyFunctional::GraphComponents.evaluate(&ProbabilityVector::uniform(21)).is_err());
        assert!(FEntropy::new(|x| x * x, |x| 2.0 * x).is_err());
    }

    #[test]
    fn graph_components_matches_subset_sum() {
        let p = [0.1, 0.2, 0.3, 0.15, 0.25];
        let n = p.len();
        let mut brute = 0.0;
        for mask in 1u32..(1 << n) {
            let k = mask.count_ones() as u64;
            let fact: f64 = (1..k).product::<u64>() as f64;
            let prod: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| p[i]).product();
            brute += fact * prod;
        }
        let v = EntropyFunctional::GraphComponents.evaluate_slice(&p).unwrap();
        assert!((v - brute).abs() < 1e-14);
    }

    #[test]
    fn distinct_outcomes_brute_force() {
        // three symbols, two trials
        let p = [0.5, 0.3, 0.2];
        let mut brute = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                brute += p[a] * p[b] * if a == b { 1.0 } else { 2.0 };
            }
        }
        let k = EntropyFunctional::DistinctOutcomes { trials: 2, symbols: 3 };
        assert!((k.evaluate_slice(&p).unwrap() - brute).abs() < 1e-15);
    }

    #[test]
    fn gamma_examples() {
        let r = pv(&[0.5, 0.3, 0.2]);
        let g = EntropyFunctional::Shannon.gamma(&r).unwrap();
        assert!((g - (0.5f64 / 0.2).log2()).abs() < 1e-12);
        let g = EntropyFunctional::MinEntropy.gamma(&r).unwrap();
        assert!((g - 1.0 / (LN_2 * 0.5)).abs() < 1e-12);
        let g = EntropyFunctional::guesswork(3).gamma(&r).unwrap();
        assert!((g - 2.0).abs() < 1e-12);
        let u = ProbabilityVector::uniform(4);
        assert_eq!(EntropyFunctional::Shannon.gamma(&u).unwrap(), 0.0);
        let edge = pv(&[0.6, 0.4, 0.0]);
        assert_eq!(EntropyFunctional::Shannon.gamma(&edge).unwrap(), f64::INFINITY);
        assert!(EntropyFunctional::Renyi { alpha: 2.0 }.gamma(&edge).unwrap().is_finite());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["shannon", "renyi:alpha=2", "tsallis:alpha=0.5", "unified:alpha=2,s=0.5", "minent", "graph"] {
            let f: EntropyFunctional = s.parse().unwrap();
            assert_eq!(f.name(), s);
        }
        assert!(matches!("renyi:alpha=inf".parse::<EntropyFunctional>(), Ok(EntropyFunctional::MinEntropy)));
        assert!("bogus".parse::<EntropyFunctional>().is_err());
        let g = "guesswork".parse::<EntropyFunctional>().unwrap().with_dim(3);
        assert_eq!(g.name(), "guesswork:costs=1;2;3");
    }

    #[test]
    fn graph_sampler_pure_state_is_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            assert_eq!(sample_graph_components(&[1.0, 0.0, 0.0, 0.0], &mut rng), 1);
        }
    }
}

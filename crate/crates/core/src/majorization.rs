//! Probability vectors and the majorization preorder.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default absolute tolerance on partial sums.
pub const MAJ_TOL: f64 = 1e-9;

/// Normalization tolerance for a vector of length `d`.
pub fn tol_norm(d: usize) -> f64 {
    1e-10 * d as f64
}

/// A length-d vector of nonnegative reals summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        let d = entries.len();
        if d == 0 {
            return Err(Error::InvalidProbability("empty vector".into()));
        }
        let tn = tol_norm(d);
        if let Some(x) = entries.iter().find(|x| !x.is_finite() || **x < -tn) {
            return Err(Error::InvalidProbability(format!("entry {x} out of range")));
        }
        let s: f64 = entries.iter().sum();
        if (s - 1.0).abs() > tn {
            return Err(Error::InvalidProbability(format!("sum {s} differs from 1")));
        }
        Ok(Self(entries))
    }

    /// Uniform vector of length `d`.
    pub fn uniform(d: usize) -> Self {
        assert!(d >= 1);
        Self(vec![1.0 / d as f64; d])
    }

    /// Point mass on the first entry.
    pub fn pure(d: usize) -> Self {
        assert!(d >= 1);
        let mut v = vec![0.0; d];
        v[0] = 1.0;
        Self(v)
    }

    /// Wraps entries already known to be valid up to rounding.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_uniform(&self, tol: f64) -> bool {
        let u = 1.0 / self.dim() as f64;
        self.0.iter().all(|x| (x - u).abs() <= tol)
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Self {
        p.0
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A probability vector with nonincreasing entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortedProbabilityVector(Vec<f64>);

impl SortedProbabilityVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_probability(&self) -> ProbabilityVector {
        ProbabilityVector(self.0.clone())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for SortedProbabilityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Indices of `x` ordered by nonincreasing value; ties keep input order.
pub fn descending_order(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].total_cmp(&x[a]));
    idx
}

/// Stable descending sort of a raw slice.
pub fn sorted_desc(x: &[f64]) -> Vec<f64> {
    descending_order(x).into_iter().map(|i| x[i]).collect()
}

/// Stable descending sort.
pub fn sort_descending(p: &ProbabilityVector) -> SortedProbabilityVector {
    SortedProbabilityVector(sorted_desc(p.as_slice()))
}

/// Top-k partial sums of the sorted vector, k = 1..d.
pub fn partial_sums_desc(x: &[f64]) -> Vec<f64> {
    sorted_desc(x)
        .into_iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// True iff `x` majorizes `y` up to `tol` on every partial sum.
pub fn majorizes(x: &ProbabilityVector, y: &ProbabilityVector, tol: f64) -> Result<bool> {
    majorizes_slice(x.as_slice(), y.as_slice(), tol)
}

/// Slice version of [`majorizes`] with no normalization requirement.
pub fn majorizes_slice(x: &[f64], y: &[f64], tol: f64) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let sx = partial_sums_desc(x);
    let sy = partial_sums_desc(y);
    let d = x.len();
    if (sx[d - 1] - sy[d - 1]).abs() > tol {
        return Ok(false);
    }
    Ok(sx.iter().zip(&sy).all(|(a, b)| *a >= *b - tol))
}

fn common_dim(set: &[ProbabilityVector]) -> Result<usize> {
    let first = set.first().ok_or(Error::EmptySet)?;
    let d = first.dim();
    if let Some(q) = set.iter().find(|q| q.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: q.dim() });
    }
    Ok(d)
}

/// Greatest lower bound of a finite set, returned as its sorted representative.
pub fn majorization_infimum(set: &[ProbabilityVector]) -> Result<SortedProbabilityVector> {
    let d = common_dim(set)?;
    let mut y = vec![f64::INFINITY; d];
    for q in set {
        for (yk, sk) in y.iter_mut().zip(partial_sums_desc(q.as_slice())) {
            *yk = yk.min(sk);
        }
    }
    let mut prev = 0.0;
    let s = y
        .into_iter()
        .map(|yk| {
            let v = yk - prev;
            prev = yk;
            v
        })
        .collect();
    Ok(SortedProbabilityVector(s))
}

/// An element of the set majorized by every other element, if one exists.
pub fn majorization_minimum(set: &[ProbabilityVector]) -> Result<Option<ProbabilityVector>> {
    let inf = majorization_infimum(set)?;
    let tol = MAJ_TOL;
    Ok(set
        .iter()
        .find(|q| {
            sort_descending(q)
                .as_slice()
                .iter()
                .zip(inf.as_slice())
                .all(|(a, b)| (a - b).abs() <= tol)
        })
        .cloned())
}

/// Total variation distance, half the 1-norm difference.
pub fn total_variation(x: &[f64], y: &[f64]) -> f64 {
    0.5 * x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

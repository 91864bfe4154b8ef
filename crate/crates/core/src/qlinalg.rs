//! Density matrices, superoperators and Choi matrices.
//!
//! Operators are vectorized by stacking columns: vec(X)[i + j·d] = X[i, j].
//! Bipartite indices are ordered (a, b) ↦ a·d_B + b.

use crate::ball::minimizer_slice;
use crate::error::{Error, Result};
use crate::majorization::{majorizes_slice, MAJ_TOL};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Residual allowed before a matrix counts as non-Hermitian.
pub const HERM_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| c(x, 0.0)))
}

pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&x| c(x, 0.0))))
}

pub fn ket_bra(d: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(i, j)] = c(1.0, 0.0);
    m
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.trace()
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn hermitian_residual(a: &CMatrix) -> f64 {
    frobenius(&(a - a.adjoint()))
}

/// Symmetrizes a matrix that is Hermitian up to tolerance.
pub fn hermitize(a: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    let res = hermitian_residual(a);
    if res > HERM_TOL * frobenius(a).max(1.0) {
        return Err(Error::NotHermitian(res));
    }
    Ok((a + a.adjoint()).scale(0.5))
}

/// Eigenvalues in decreasing order with matching orthonormal eigenvectors as columns.
pub fn eigdecompose_hermitian(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let h = hermitize(a)?;
    let eig = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_columns(&idx.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    Ok((vals, vecs))
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_function(a: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let (vals, vecs) = eigdecompose_hermitian(a)?;
    let fd = CVector::from_iterator(vals.len(), vals.iter().map(|&x| c(f(x), 0.0)));
    Ok(&vecs * CMatrix::from_diagonal(&fd) * vecs.adjoint())
}

/// exp(−i t H) for Hermitian H.
pub fn unitary_exp(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let (vals, vecs) = eigdecompose_hermitian(h)?;
    let fd = CVector::from_iterator(vals.len(), vals.iter().map(|&x| Complex64::from_polar(1.0, -t * x)));
    Ok(&vecs * CMatrix::from_diagonal(&fd) * vecs.adjoint())
}

/// Eigenvalues of a general square matrix via the complex Schur form.
pub fn eigenvalues_general(a: &CMatrix) -> Result<Vec<Complex64>> {
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Unit vector spanning the numerical kernel of `a − λ·1`.
pub fn null_vector(a: &CMatrix, lambda: Complex64) -> CVector {
    let n = a.nrows();
    let shifted = a - CMatrix::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let k = (0..n)
        .min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
        .expect("nonempty matrix");
    v_t.row(k).adjoint().into_owned()
}

/// A unit-trace positive semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_json(&self.0).serialize(s)
    }
}

/// Serializes complex numbers as `[re, im]` pairs.
pub fn complex_pairs<S: serde::Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
}

impl DensityMatrix {
    pub fn new(data: CMatrix) -> Result<Self> {
        let h = hermitize(&data)?;
        let tr = h.trace().re;
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("trace {tr} differs from 1")));
        }
        let (vals, _) = eigdecompose_hermitian(&h)?;
        if vals.last().copied().unwrap_or(0.0) < -1e-9 {
            return Err(Error::InvalidParameter("matrix is not positive semidefinite".into()));
        }
        Ok(Self(h))
    }

    /// Normalizes a Hermitian PSD matrix to unit trace.
    pub fn from_unnormalized(data: CMatrix) -> Result<Self> {
        let tr = data.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidParameter("matrix has nonpositive trace".into()));
        }
        Self::new(data.unscale(tr))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(CMatrix::identity(d, d).unscale(d as f64))
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        Self::new(diag(p))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Eigenvalues in decreasing order.
    pub fn spectrum(&self) -> Vec<f64> {
        eigdecompose_hermitian(&self.0).map(|(v, _)| v).unwrap_or_default()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.spectrum().last().copied().unwrap_or(0.0)
    }
}

/// Half the trace norm of the difference.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: sigma.dim() });
    }
    let (vals, _) = eigdecompose_hermitian(&(rho.matrix() - sigma.matrix()))?;
    Ok(0.5 * vals.iter().map(|x| x.abs()).sum::<f64>())
}

/// Trace norm of an arbitrary square matrix.
pub fn trace_norm(a: &CMatrix) -> f64 {
    a.clone().svd(false, false).singular_values.iter().sum()
}

/// True iff the spectrum of ρ majorizes that of σ.
pub fn state_majorizes(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<bool> {
    majorizes_slice(&rho.spectrum(), &sigma.spectrum(), MAJ_TOL)
}

/// Minimizer of the ε trace-distance ball around ρ, sharing ρ's eigenbasis.
pub fn state_ball_minimizer(rho: &DensityMatrix, eps: f64) -> Result<DensityMatrix> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be >= 0, got {eps}")));
    }
    let (vals, vecs) = eigdecompose_hermitian(rho.matrix())?;
    let flat = minimizer_slice(&vals, eps).result.into_vec();
    let fd = CVector::from_iterator(flat.len(), flat.iter().map(|&x| c(x, 0.0)));
    DensityMatrix::new(&vecs * CMatrix::from_diagonal(&fd) * vecs.adjoint())
}

/// Which tensor factor an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

fn check_factor(x: &CMatrix, da: usize, db: usize) -> Result<()> {
    if x.nrows() != da * db || x.ncols() != da * db {
        return Err(Error::DimensionMismatch { expected: da * db, got: x.nrows() });
    }
    Ok(())
}

/// Traces out the given factor of an operator on A⊗B.
pub fn partial_trace(x: &CMatrix, da: usize, db: usize, side: Side) -> Result<CMatrix> {
    check_factor(x, da, db)?;
    Ok(match side {
        Side::Second => CMatrix::from_fn(da, da, |a, a2| (0..db).map(|b| x[(a * db + b, a2 * db + b)]).sum()),
        Side::First => CMatrix::from_fn(db, db, |b, b2| (0..da).map(|a| x[(a * db + b, a * db + b2)]).sum()),
    })
}

/// Transposes the given factor of an operator on A⊗B.
pub fn partial_transpose(x: &CMatrix, da: usize, db: usize, side: Side) -> Result<CMatrix> {
    check_factor(x, da, db)?;
    Ok(CMatrix::from_fn(da * db, da * db, |r, col| {
        let (a, b) = (r / db, r % db);
        let (a2, b2) = (col / db, col % db);
        match side {
            Side::Second => x[(a * db + b2, a2 * db + b)],
            Side::First => x[(a2 * db + b, a * db + b2)],
        }
    }))
}

/// A linear map on d×d matrices, stored as a d²×d² matrix on column-stacked vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMatrix,
}

/// Choi matrix Σ_ij Φ(|i⟩⟨j|) ⊗ |i⟩⟨j| with output factor first.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    matrix: CMatrix,
}

impl ChoiMatrix {
    pub fn new(dim: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: matrix.nrows() });
        }
        Ok(Self { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

pub fn vectorize(x: &CMatrix) -> CVector {
    CVector::from_column_slice(x.as_slice())
}

pub fn unvectorize(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

impl Superoperator {
    pub fn new(dim: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: matrix.nrows() });
        }
        Ok(Self { dim, matrix })
    }

    /// Builds the matrix of a map by applying it to every matrix unit.
    pub fn from_fn(dim: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let mut m = CMatrix::zeros(dim * dim, dim * dim);
        for j in 0..dim {
            for i in 0..dim {
                let col = vectorize(&f(&ket_bra(dim, i, j)));
                m.set_column(i + j * dim, &col);
            }
        }
        Self { dim, matrix: m }
    }

    /// X ↦ Σ K X K†.
    pub fn from_kraus(ops: &[CMatrix]) -> Result<Self> {
        let d = ops.first().ok_or(Error::EmptySet)?.nrows();
        let mut m = CMatrix::zeros(d * d, d * d);
        for k in ops {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, got: k.nrows() });
            }
            m += kron(&k.conjugate(), k);
        }
        Ok(Self { dim: d, matrix: m })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, matrix: CMatrix::identity(dim * dim, dim * dim) }
    }

    /// X ↦ U X U†.
    pub fn unitary(u: &CMatrix) -> Self {
        Self::from_kraus(std::slice::from_ref(u)).expect("square unitary")
    }

    /// X ↦ tr(X) σ.
    pub fn replacement(sigma: &CMatrix) -> Self {
        let d = sigma.nrows();
        Self::from_fn(d, |x| sigma * x.trace())
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, matrix: CMatrix::zeros(dim * dim, dim * dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        unvectorize(&(&self.matrix * vectorize(x)), self.dim)
    }

    /// Composition self ∘ other.
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        Superoperator { dim: self.dim, matrix: &self.matrix * &other.matrix }
    }

    pub fn power(&self, n: usize) -> Superoperator {
        let mut out = Superoperator::identity(self.dim);
        for _ in 0..n {
            out = self.compose(&out);
        }
        out
    }

    pub fn add(&self, other: &Superoperator) -> Superoperator {
        Superoperator { dim: self.dim, matrix: &self.matrix + &other.matrix }
    }

    pub fn scale(&self, z: Complex64) -> Superoperator {
        Superoperator { dim: self.dim, matrix: &self.matrix * z }
    }

    /// Hilbert–Schmidt adjoint map.
    pub fn adjoint(&self) -> Superoperator {
        Superoperator { dim: self.dim, matrix: self.matrix.adjoint() }
    }

    /// ‖Φ*(1) − 1‖₂.
    pub fn trace_preservation_residual(&self) -> f64 {
        let id = CMatrix::identity(self.dim, self.dim);
        frobenius(&(self.adjoint().apply(&id) - id))
    }

    pub fn choi(&self) -> ChoiMatrix {
        let d = self.dim;
        let m = CMatrix::from_fn(d * d, d * d, |r, col| {
            let (a, i) = (r / d, r % d);
            let (b, j) = (col / d, col % d);
            self.matrix[(a + b * d, i + j * d)]
        });
        ChoiMatrix { dim: d, matrix: m }
    }

    pub fn choi_inverse(j: &ChoiMatrix) -> Superoperator {
        let d = j.dim;
        let m = CMatrix::from_fn(d * d, d * d, |r, col| {
            let (a, b) = (r % d, r / d);
            let (i, jj) = (col % d, col / d);
            j.matrix[(a * d + i, b * d + jj)]
        });
        Superoperator { dim: d, matrix: m }
    }

    /// Verifies trace preservation and complete positivity.
    pub fn validate_channel(&self, tol: f64) -> Result<()> {
        let tp = self.trace_preservation_residual();
        if tp > tol {
            return Err(Error::NotTp(tp));
        }
        let j = self.choi();
        let (vals, _) = eigdecompose_hermitian(j.matrix())?;
        let min = vals.last().copied().unwrap_or(0.0);
        if min < -tol.max(1e-10 * self.dim as f64) {
            return Err(Error::NotCp(min));
        }
        Ok(())
    }
}

/// Kraus operators from a Choi matrix, dropping eigenvalues below `rank_tol`.
pub fn kraus_from_choi(j: &ChoiMatrix, rank_tol: Option<f64>) -> Result<Vec<CMatrix>> {
    let d = j.dim;
    let (vals, vecs) = eigdecompose_hermitian(j.matrix())?;
    let tol = rank_tol.unwrap_or(1e-10 * j.matrix().trace().re.abs().max(1.0));
    if let Some(&min) = vals.last() {
        if min < -tol {
            return Err(Error::NotCp(min));
        }
    }
    Ok(vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > tol)
        .map(|(k, &v)| {
            let s = v.sqrt();
            CMatrix::from_fn(d, d, |a, i| vecs[(a * d + i, k)] * s)
        })
        .collect())
}

/// True iff the partial transpose of J has no eigenvalue below −tol.
pub fn is_ppt(j: &ChoiMatrix, tol: f64) -> Result<bool> {
    Ok(min_pt_eigenvalue(j)? >= -tol)
}

/// Smallest eigenvalue of the partial transpose of J.
pub fn min_pt_eigenvalue(j: &ChoiMatrix) -> Result<f64> {
    let pt = partial_transpose(j.matrix(), j.dim, j.dim, Side::Second)?;
    let (vals, _) = eigdecompose_hermitian(&pt)?;
    Ok(vals.last().copied().unwrap_or(0.0))
}

/// Sufficient separability test: ω⊗σ + Δ is separable when ‖Δ‖₂ ≤ λ_min(ω)·λ_min(σ).
pub fn separable_ball_test(omega: &CMatrix, sigma: &CMatrix, delta: &CMatrix) -> Result<bool> {
    let (wo, _) = eigdecompose_hermitian(omega)?;
    let (ws, _) = eigdecompose_hermitian(sigma)?;
    hermitize(delta)?;
    let lo = wo.last().copied().unwrap_or(0.0);
    let ls = ws.last().copied().unwrap_or(0.0);
    if lo <= 0.0 || ls <= 0.0 {
        return Ok(false);
    }
    Ok(frobenius(delta) <= lo * ls)
}

/// Quantum relative entropy D(ρ‖σ) in natural units; +∞ on support violation.
pub fn relative_entropy(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let (rv, rvec) = eigdecompose_hermitian(rho)?;
    let (sv, svec) = eigdecompose_hermitian(sigma)?;
    let overlap = rvec.adjoint() * &svec;
    let mut d = 0.0;
    for (i, &p) in rv.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        d += p * p.ln();
        for (k, &q) in sv.iter().enumerate() {
            let w = overlap[(i, k)].norm_sqr();
            if w <= 1e-300 {
                continue;
            }
            if q <= 0.0 {
                return Ok(f64::INFINITY);
            }
            d -= p * w * q.ln();
        }
    }
    Ok(d)
}

/// Von Neumann entropy in natural units.
pub fn von_neumann_entropy(rho: &CMatrix) -> Result<f64> {
    let (vals, _) = eigdecompose_hermitian(rho)?;
    Ok(-vals.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>())
}

/// JSON channel exchange format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelJson {
    pub dim: usize,
    pub kind: ChannelKind,
    pub data: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Kraus,
    Choi,
    Superoperator,
}

pub fn matrix_to_json(m: &CMatrix) -> serde_json::Value {
    serde_json::Value::Array(
        (0..m.nrows())
            .map(|r| {
                serde_json::Value::Array(
                    (0..m.ncols()).map(|col| serde_json::json!([m[(r, col)].re, m[(r, col)].im])).collect(),
                )
            })
            .collect(),
    )
}

pub fn matrix_from_json(v: &serde_json::Value, n: usize) -> Result<CMatrix> {
    let bad = || Error::InvalidParameter("matrix must be nested arrays of [re, im] pairs".into());
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_value(v.clone()).map_err(|_| bad())?;
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: rows.len() });
    }
    Ok(CMatrix::from_fn(n, n, |r, col| c(rows[r][col][0], rows[r][col][1])))
}

impl ChannelJson {
    pub fn from_superoperator(s: &Superoperator) -> Self {
        ChannelJson { dim: s.dim, kind: ChannelKind::Superoperator, data: matrix_to_json(&s.matrix) }
    }

    pub fn from_choi(j: &ChoiMatrix) -> Self {
        ChannelJson { dim: j.dim, kind: ChannelKind::Choi, data: matrix_to_json(&j.matrix) }
    }

    pub fn from_kraus(ops: &[CMatrix]) -> Self {
        let d = ops.first().map(|k| k.nrows()).unwrap_or(0);
        ChannelJson {
            dim: d,
            kind: ChannelKind::Kraus,
            data: serde_json::Value::Array(ops.iter().map(matrix_to_json).collect()),
        }
    }

    pub fn to_superoperator(&self) -> Result<Superoperator> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        match self.kind {
            ChannelKind::Superoperator => Superoperator::new(d, matrix_from_json(&self.data, d * d)?),
            ChannelKind::Choi => Ok(Superoperator::choi_inverse(&ChoiMatrix::new(d, matrix_from_json(&self.data, d * d)?)?)),
            ChannelKind::Kraus => {
                let list = self
                    .data
                    .as_array()
                    .ok_or_else(|| Error::InvalidParameter("kraus data must be a list of matrices".into()))?;
                let ops = list.iter().map(|m| matrix_from_json(m, d)).collect::<Result<Vec<_>>>()?;
                Superoperator::from_kraus(&ops)
            }
        }
    }
}

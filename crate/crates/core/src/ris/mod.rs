//! Adiabatic repeated interaction systems: reduced and deformed dynamics, entropy balance,
//! two-time measurement sampling and cumulant rate functions.
//!
//! Natural logarithms are used throughout this module.

mod protocol;
mod rate;
mod trajectory;

pub use protocol::{BetaProfile, Coupling, ProbeHamiltonian, RisProtocol, BETA2_COEFFS};
pub use rate::{big_lambda, lambda_alpha, lambda_derivatives, RateFunction};
pub use trajectory::{
    clt_diagnostic, sample_ensemble, CltSummary, EnsembleStats, TrajectoryRecord, TrajectorySampler,
};

use crate::channel::{analyze, peripheral_projections};
use crate::error::{Error, Result};
use crate::qlinalg::{
    eigdecompose_hermitian, frobenius, hermitian_function, kron, partial_trace, relative_entropy, unvectorize,
    vectorize, von_neumann_entropy, CMatrix, DensityMatrix, Side, Superoperator,
};

/// Residual allowed in the per-step entropy balance.
pub const BALANCE_TOL: f64 = 1e-8;
/// Spectral floor applied to the final state before taking its logarithm.
pub const SPECTRAL_FLOOR: f64 = 1e-13;

/// Reduced dynamics η ↦ tr_E(U(η⊗ξ)U*) at parameter s.
pub fn reduced_map(proto: &RisProtocol, s: f64) -> Result<Superoperator> {
    proto.check_s(s)?;
    let u = proto.unitary(s)?;
    let xi = proto.probe_state(s)?;
    let (ds, de) = (proto.d_s(), proto.d_e());
    Ok(Superoperator::from_fn(ds, |x| {
        let joint = &u * kron(x, &xi) * u.adjoint();
        partial_trace(&joint, ds, de, Side::Second).expect("factoring dimensions")
    }))
}

/// Deformed map η ↦ tr_E(e^{αY} U (η⊗ξ) e^{−αY} U*) with Y = β(s) h_E(s).
pub fn deformed_map(proto: &RisProtocol, s: f64, alpha: f64) -> Result<Superoperator> {
    proto.check_s(s)?;
    let beta = proto.beta(s);
    if !beta.is_finite() {
        return Err(Error::Unsupported("deformation requires a finite inverse temperature".into()));
    }
    let u = proto.unitary(s)?;
    let xi = proto.probe_state(s)?;
    let h = proto.h_e(s);
    let (ds, de) = (proto.d_s(), proto.d_e());
    let id = CMatrix::identity(ds, ds);
    let up = kron(&id, &hermitian_function(&h, |e| (alpha * beta * e).exp())?);
    let xm = &xi * hermitian_function(&h, |e| (-alpha * beta * e).exp())?;
    let left = &up * &u;
    Ok(Superoperator::from_fn(ds, |x| {
        let joint = &left * kron(x, &xm) * u.adjoint();
        partial_trace(&joint, ds, de, Side::Second).expect("factoring dimensions")
    }))
}

/// ‖U(ρ_inv⊗ξ)U* − ρ_inv⊗ξ‖₂ at parameter s.
///
/// When the invariant state is not unique the maximal-support invariant state is used.
pub fn x_of_s(proto: &RisProtocol, s: f64) -> Result<f64> {
    let l = reduced_map(proto, s)?;
    let report = analyze(&l)?;
    let u = proto.unitary(s)?;
    let prod = kron(report.invariant_state.matrix(), &proto.probe_state(s)?);
    Ok(frobenius(&(&u * &prod * u.adjoint() - prod)))
}

/// System state after every step, starting from ρ_init.
pub fn evolve(proto: &RisProtocol, rho: &DensityMatrix) -> Result<Vec<CMatrix>> {
    check_system_state(proto, rho)?;
    let t = proto.steps();
    let mut states = Vec::with_capacity(t + 1);
    states.push(rho.matrix().clone());
    for k in 1..=t {
        let next = reduced_map(proto, k as f64 / t as f64)?.apply(&states[k - 1]);
        states.push((&next + next.adjoint()).scale(0.5));
    }
    Ok(states)
}

fn check_system_state(proto: &RisProtocol, rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != proto.d_s() {
        return Err(Error::DimensionMismatch { expected: proto.d_s(), got: rho.dim() });
    }
    Ok(())
}

/// Final state ρ^f_T with its spectrum floored at [`SPECTRAL_FLOOR`].
#[derive(Debug, Clone)]
pub struct FinalState {
    pub state: CMatrix,
    /// True when the floor changed at least one eigenvalue.
    pub floored: bool,
}

pub fn final_state(proto: &RisProtocol, rho: &DensityMatrix) -> Result<FinalState> {
    let last = evolve(proto, rho)?.pop().expect("at least the initial state");
    floor_state(&last)
}

fn floor_state(x: &CMatrix) -> Result<FinalState> {
    let (vals, vecs) = eigdecompose_hermitian(x)?;
    let floored = vals.iter().any(|&v| v < SPECTRAL_FLOOR);
    if !floored {
        return Ok(FinalState { state: (x + x.adjoint()).scale(0.5), floored });
    }
    let fixed: Vec<f64> = vals.iter().map(|&v| v.max(SPECTRAL_FLOOR)).collect();
    let total: f64 = fixed.iter().sum();
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        fixed.len(),
        fixed.iter().map(|&v| crate::qlinalg::c(v / total, 0.0)),
    ));
    Ok(FinalState { state: &vecs * d * vecs.adjoint(), floored })
}

/// Per-step entropy production and its total.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyProduction {
    pub per_step: Vec<f64>,
    pub total: f64,
    /// Largest residual of ΔS_k + σ_k − β_k ΔQ_k.
    pub max_balance_residual: f64,
}

/// σ_k = D(U(ρ_{k−1}⊗ξ_k)U* ‖ ρ_k⊗ξ_k) for every step, with the balance ΔS_k + σ_k = β_k ΔQ_k checked.
pub fn sigma_tot(proto: &RisProtocol, rho: &DensityMatrix) -> Result<EntropyProduction> {
    check_system_state(proto, rho)?;
    let t = proto.steps();
    let (ds, de) = (proto.d_s(), proto.d_e());
    let mut state = rho.matrix().clone();
    let mut per_step = Vec::with_capacity(t);
    let mut max_res = 0.0f64;
    for k in 1..=t {
        let s = k as f64 / t as f64;
        let u = proto.unitary(s)?;
        let xi = proto.probe_state(s)?;
        let joint = &u * kron(&state, &xi) * u.adjoint();
        let joint = (&joint + joint.adjoint()).scale(0.5);
        let next = partial_trace(&joint, ds, de, Side::Second)?;
        let probe_out = partial_trace(&joint, ds, de, Side::First)?;
        let reference = kron(&next, &xi);
        let mut sigma = relative_entropy(&joint, &reference)?;
        if !sigma.is_finite() {
            let n = ds * de;
            sigma = relative_entropy(&joint, &(reference + CMatrix::identity(n, n).scale(1e-14)))?;
        }
        let beta = proto.beta(s);
        if beta.is_finite() {
            let h = proto.h_e(s);
            let ds_k = von_neumann_entropy(&state)? - von_neumann_entropy(&next)?;
            let dq_k = (&h * &probe_out).trace().re - (&h * &xi).trace().re;
            let res = (ds_k + sigma - beta * dq_k).abs();
            max_res = max_res.max(res);
            if res > BALANCE_TOL {
                return Err(Error::Numerical(format!("entropy balance violated at step {k}: residual {res:.3e}")));
            }
        }
        per_step.push(sigma);
        state = next;
    }
    let total = per_step.iter().sum();
    Ok(EntropyProduction { per_step, total, max_balance_residual: max_res })
}

fn require_faithful(x: &CMatrix, what: &str) -> Result<()> {
    let (vals, _) = eigdecompose_hermitian(x)?;
    if vals.last().copied().unwrap_or(0.0) <= 0.0 {
        return Err(Error::InvalidParameter(format!("{what} is not full rank")));
    }
    Ok(())
}

/// Exact moment generating function of the trajectory entropy production ς_T.
pub fn mgf_exact(proto: &RisProtocol, rho: &DensityMatrix, alpha: f64) -> Result<f64> {
    check_system_state(proto, rho)?;
    require_faithful(rho.matrix(), "initial state")?;
    let fin = final_state(proto, rho)?;
    let start = hermitian_function(rho.matrix(), |x| x.powf(1.0 + alpha))?;
    let end = hermitian_function(&fin.state, |x| x.powf(-alpha))?;
    let evolved = deformed_chain(proto, alpha, &start)?;
    Ok((end * evolved).trace().re)
}

/// Exact moment generating function of the probe flux Δy_tot.
pub fn mgf_flux_exact(proto: &RisProtocol, rho: &DensityMatrix, alpha: f64) -> Result<f64> {
    check_system_state(proto, rho)?;
    Ok(deformed_chain(proto, alpha, rho.matrix())?.trace().re)
}

fn deformed_chain(proto: &RisProtocol, alpha: f64, start: &CMatrix) -> Result<CMatrix> {
    let t = proto.steps();
    let mut v = vectorize(start);
    for k in 1..=t {
        v = deformed_map(proto, k as f64 / t as f64, alpha)?.matrix() * v;
    }
    Ok(unvectorize(&v, proto.d_s()))
}

/// Q_a(η‖ζ) = tr(η^a ζ^{1−a}).
pub fn renyi_q(eta: &CMatrix, zeta: &CMatrix, a: f64) -> Result<f64> {
    let x = hermitian_function(eta, |v| if v > 0.0 { v.powf(a) } else { 0.0 })?;
    let y = hermitian_function(zeta, |v| if v > 0.0 { v.powf(1.0 - a) } else { 0.0 })?;
    Ok((x * y).trace().re)
}

/// Adiabatic approximation z Σ_n tr(p_n(0)ρ) ρ_inv(k/T) p_{n−k}(k/T) of the state after k steps.
pub fn rho_adiab(proto: &RisProtocol, k: usize, t: usize, rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_system_state(proto, rho)?;
    if t == 0 || k > t {
        return Err(Error::InvalidParameter(format!("require 0 ≤ k ≤ T with T ≥ 1, got k = {k}, T = {t}")));
    }
    let s = k as f64 / t as f64;
    let l0 = reduced_map(proto, 0.0)?;
    let r0 = analyze(&l0)?;
    let ls = reduced_map(proto, s)?;
    let rs = analyze(&ls)?;
    let (z0, zs) = match (r0.period_z, rs.period_z) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidParameter("reduced dynamics is not irreducible".into())),
    };
    if z0 != zs {
        return Err(Error::InvalidParameter(format!("period changes from {z0} to {zs}")));
    }
    let z = z0;
    let p0 = peripheral_projections(&l0, &r0)?;
    let ps_raw = peripheral_projections(&ls, &rs)?;
    // Align labels at s with those at 0 by maximal overlap of a single cyclic shift.
    let shift = (0..z)
        .max_by(|&a, &b| {
            let ov = |sh: usize| -> f64 { (0..z).map(|m| (&p0[m] * &ps_raw[(m + sh) % z]).trace().re).sum() };
            ov(a).total_cmp(&ov(b))
        })
        .unwrap_or(0);
    let ps: Vec<CMatrix> = (0..z).map(|m| ps_raw[(m + shift) % z].clone()).collect();
    let inv = rs.invariant_state.matrix();
    let d = proto.d_s();
    let mut out = CMatrix::zeros(d, d);
    for (n, pn) in p0.iter().enumerate().take(z) {
        let w = (pn * rho.matrix()).trace().re;
        let idx = (n + z - k % z) % z;
        out += inv * &ps[idx] * crate::qlinalg::c(z as f64 * w, 0.0);
    }
    DensityMatrix::new((&out + out.adjoint()).scale(0.5))
}

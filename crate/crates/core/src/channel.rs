//! Spectral classification of quantum channels and entanglement-breaking times.

use crate::error::{Error, Result};
use crate::qlinalg::{
    c, complex_pairs, diag, eigdecompose_hermitian, eigenvalues_general, frobenius, hermitize, kron, min_pt_eigenvalue,
    null_vector, partial_trace, real_matrix, separable_ball_test, trace_norm, unitary_exp, unvectorize, CMatrix, DensityMatrix,
    Side, Superoperator,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Relative modulus tolerance for peripheral eigenvalues.
pub const PERI_TOL: f64 = 1e-7;
/// Smallest eigenvalue a faithful invariant state must exceed.
pub const FAITH_TOL: f64 = 1e-9;
/// Angle tolerance when snapping peripheral eigenvalues to roots of unity.
pub const ANGLE_TOL: f64 = 1e-6;
/// Trace-preservation tolerance accepted by the analysis routines.
pub const TP_TOL: f64 = 1e-8;
/// Default number of powers searched by [`classify_eeb`].
pub const DEFAULT_N_MAX: usize = 200;

/// Spectral data of a channel.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelReport {
    #[serde(serialize_with = "complex_pairs")]
    pub spectrum: Vec<Complex64>,
    pub spectral_radius: f64,
    #[serde(serialize_with = "complex_pairs")]
    pub peripheral: Vec<Complex64>,
    /// Number of peripheral eigenvalues forming the cyclic group; set only for irreducible channels.
    pub period_z: Option<usize>,
    /// Multiplicity of the eigenvalue 1.
    pub fixed_multiplicity: usize,
    /// Maximal-support invariant state (projection of the maximally mixed state onto the fixed space).
    pub invariant_state: DensityMatrix,
    pub faithful: bool,
    pub primitive: bool,
    pub irreducible: bool,
    /// Peripheral values that could not be snapped onto a cyclic group.
    pub peripheral_cluster: bool,
}

fn check_channel(phi: &Superoperator) -> Result<()> {
    phi.validate_channel(TP_TOL)
}

/// Orthonormal basis (columns) of the right kernel of `a`, taking the `m` smallest singular directions.
fn kernel_basis(a: &CMatrix, m: usize) -> CMatrix {
    let n = a.nrows();
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    CMatrix::from_columns(&idx[..m].iter().map(|&k| v_t.row(k).adjoint()).collect::<Vec<_>>())
}

/// Normalizes an operator proportional to a Hermitian one by its largest-modulus phase.
fn phase_fix(x: &CMatrix) -> CMatrix {
    let tr = x.trace();
    let z = if tr.norm() > 1e-12 {
        tr
    } else {
        *x.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).expect("nonempty")
    };
    let y = x.unscale(1.0) / (z / z.norm());
    (&y + y.adjoint()).scale(0.5)
}

fn is_definite(x: &CMatrix) -> bool {
    match eigdecompose_hermitian(x) {
        Ok((v, _)) => {
            let top = v.iter().fold(0.0f64, |m, y| m.max(y.abs()));
            let sign = v[0].signum();
            top > 0.0 && v.iter().all(|&y| y * sign > FAITH_TOL * top)
        }
        Err(_) => false,
    }
}

/// Smallest z ≤ `z_max` such that every angle lies within `ANGLE_TOL` of a multiple of 2π/z.
fn snap_period(values: &[Complex64], z_max: usize) -> Option<usize> {
    (1..=z_max).find(|&z| {
        values.iter().all(|v| {
            let t = v.arg() * z as f64 / (2.0 * PI);
            (t - t.round()).abs() * 2.0 * PI / z as f64 <= ANGLE_TOL
        })
    })
}

/// Spectral analysis of a channel: peripheral spectrum, invariant state, primitivity and period.
pub fn analyze(phi: &Superoperator) -> Result<ChannelReport> {
    check_channel(phi)?;
    let d = phi.dim();
    let n = d * d;
    let spectrum = eigenvalues_general(phi.matrix())?;
    let spectral_radius = spectrum.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let peripheral: Vec<Complex64> =
        spectrum.iter().copied().filter(|z| z.norm() >= spectral_radius * (1.0 - PERI_TOL)).collect();
    let fixed_multiplicity = spectrum.iter().filter(|z| (*z - 1.0).norm() <= PERI_TOL).count().max(1);

    let shifted = phi.matrix() - CMatrix::identity(n, n);
    let right = kernel_basis(&shifted, fixed_multiplicity);
    let left = kernel_basis(&shifted.adjoint(), fixed_multiplicity);
    let overlap = left.adjoint() * &right;
    let overlap_inv = overlap
        .try_inverse()
        .ok_or_else(|| Error::Numerical("fixed-point eigenspace is defective".into()))?;
    let tau = CMatrix::identity(d, d).unscale(d as f64);
    let projected = &right * (overlap_inv * (left.adjoint() * crate::qlinalg::vectorize(&tau)));
    let inv = phase_fix(&unvectorize(&projected, d));
    let invariant_state = DensityMatrix::from_unnormalized(hermitize(&inv)?)?;
    let faithful = invariant_state.min_eigenvalue() > FAITH_TOL;

    let simple = fixed_multiplicity == 1;
    let left_definite = simple && is_definite(&phase_fix(&unvectorize(&left.column(0).into_owned(), d)));
    let irreducible = simple && faithful && left_definite;
    let primitive = irreducible && peripheral.len() == 1;
    let snapped = snap_period(&peripheral, d);
    let peripheral_cluster = match snapped {
        Some(z) => z != peripheral.len(),
        None => true,
    };
    let period_z = if irreducible { Some(snapped.unwrap_or(peripheral.len())) } else { None };
    Ok(ChannelReport {
        spectrum,
        spectral_radius,
        peripheral,
        period_z,
        fixed_multiplicity,
        invariant_state,
        faithful,
        primitive,
        irreducible,
        peripheral_cluster,
    })
}

/// Cyclic projections p_0…p_{z−1} of an irreducible channel, labelled so that p_m carries the eigenvalue e^{2πim/z}.
///
/// Labels are fixed up to a common cyclic shift.
pub fn peripheral_projections(phi: &Superoperator, report: &ChannelReport) -> Result<Vec<CMatrix>> {
    let z = report
        .period_z
        .ok_or_else(|| Error::InvalidParameter("channel is not irreducible".into()))?;
    let d = phi.dim();
    if z == 1 {
        return Ok(vec![CMatrix::identity(d, d)]);
    }
    let theta = Complex64::from_polar(1.0, 2.0 * PI / z as f64);
    let x = unvectorize(&null_vector(phi.matrix(), theta), d);
    let sigma_inv = report
        .invariant_state
        .matrix()
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("invariant state is singular".into()))?;
    let w = x * sigma_inv;
    let mut wz = CMatrix::identity(d, d);
    for _ in 0..z {
        wz = &wz * &w;
    }
    let scale = wz.trace() / d as f64;
    if scale.norm() < 1e-12 {
        return Err(Error::Numerical("peripheral eigenvector is degenerate".into()));
    }
    let root = Complex64::from_polar(scale.norm().powf(1.0 / z as f64), scale.arg() / z as f64);
    let u = w / root;
    let mut powers = vec![CMatrix::identity(d, d)];
    for j in 1..z {
        powers.push(&powers[j - 1] * &u);
    }
    (0..z)
        .map(|m| {
            let mut p = CMatrix::zeros(d, d);
            for (j, uj) in powers.iter().enumerate() {
                p += uj * Complex64::from_polar(1.0 / z as f64, -2.0 * PI * (m * j) as f64 / z as f64);
            }
            let p = (&p + p.adjoint()).scale(0.5);
            if frobenius(&(&p * &p - &p)) > 1e-6 {
                return Err(Error::Numerical("peripheral projections are not idempotent".into()));
            }
            Ok(p)
        })
        .collect()
}

fn check_close(name: &str, residual: f64, tol: f64) -> Result<()> {
    if residual > tol {
        return Err(Error::InvalidParameter(format!("{name} (residual {residual:.3e})")));
    }
    Ok(())
}

/// Φ_P(X) = z Σ_n tr(p_n X) p_{n−1} σ, the peripheral part of an irreducible channel.
pub fn peripheral_part(projections: &[CMatrix], sigma: &DensityMatrix) -> Superoperator {
    let z = projections.len();
    let d = sigma.dim();
    Superoperator::from_fn(d, |x| {
        let mut out = CMatrix::zeros(d, d);
        for n in 0..z {
            let prev = &projections[(n + z - 1) % z];
            out += prev * sigma.matrix() * ((&projections[n] * x).trace() * z as f64);
        }
        out
    })
}

/// True when ‖J(Φ_Q)‖₂ ≤ z·λ_min(σ), the norm shortcut for complete positivity.
pub fn phi_q_norm_shortcut(z: usize, sigma: &DensityMatrix, phi_q: &Superoperator) -> bool {
    frobenius(phi_q.choi().matrix()) <= z as f64 * sigma.min_eigenvalue()
}

/// Assembles the irreducible channel Σ θⁿ P_n + Φ_Q after validating every precondition.
pub fn build_irreducible(
    z: usize,
    projections: &[CMatrix],
    sigma: &DensityMatrix,
    phi_q: &Superoperator,
) -> Result<Superoperator> {
    const TOL: f64 = 1e-9;
    let d = sigma.dim();
    if z == 0 || z > d {
        return Err(Error::InvalidParameter(format!("period must lie in 1..={d}, got {z}")));
    }
    if projections.len() != z {
        return Err(Error::DimensionMismatch { expected: z, got: projections.len() });
    }
    if phi_q.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: phi_q.dim() });
    }
    let id = CMatrix::identity(d, d);
    let mut sum = CMatrix::zeros(d, d);
    for (k, p) in projections.iter().enumerate() {
        if p.nrows() != d || p.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.nrows() });
        }
        check_close(&format!("projection {k} is not Hermitian"), frobenius(&(p - p.adjoint())), TOL)?;
        check_close(&format!("projection {k} is not idempotent"), frobenius(&(p * p - p)), TOL)?;
        let comm = sigma.matrix() * p - p * sigma.matrix();
        check_close(&format!("state does not commute with projection {k}"), frobenius(&comm), TOL)?;
        let w = (sigma.matrix() * p).trace().re;
        check_close(&format!("state weight on projection {k} differs from 1/z"), (w - 1.0 / z as f64).abs(), TOL)?;
        check_close(&format!("Φ_Q does not annihilate σ·p_{k}"), frobenius(&phi_q.apply(&(sigma.matrix() * p))), TOL)?;
        check_close(&format!("Φ_Q* does not annihilate p_{k}"), frobenius(&phi_q.adjoint().apply(p)), TOL)?;
        sum += p;
    }
    check_close("projections do not resolve the identity", frobenius(&(sum - id)), TOL)?;
    if sigma.min_eigenvalue() <= FAITH_TOL {
        return Err(Error::InvalidParameter("state is not faithful".into()));
    }
    let spr = eigenvalues_general(phi_q.matrix())?.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if spr >= 1.0 {
        return Err(Error::InvalidParameter(format!("spectral radius of Φ_Q is {spr}, must be < 1")));
    }
    let phi_p = peripheral_part(projections, sigma);
    let phi = phi_p.add(phi_q);
    if !phi_q_norm_shortcut(z, sigma, phi_q) {
        let (vals, _) = eigdecompose_hermitian(phi.choi().matrix())?;
        let min = vals.last().copied().unwrap_or(0.0);
        if min < -TOL {
            return Err(Error::NotCp(min));
        }
    }
    Ok(phi)
}

/// Outcome of the eventual entanglement-breaking search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EebStatus {
    #[serde(rename = "EEB")]
    Eeb,
    #[serde(rename = "ES_suspected")]
    EsSuspected,
    #[serde(rename = "undetermined")]
    Undetermined,
}

impl EebStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            EebStatus::Eeb => "EEB",
            EebStatus::EsSuspected => "ES_suspected",
            EebStatus::Undetermined => "undetermined",
        }
    }
}

/// Result of [`classify_eeb`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EebVerdict {
    /// First power whose Choi matrix is PPT.
    pub ppt_step: Option<usize>,
    /// First power certified entanglement breaking.
    pub eb_step: Option<usize>,
    pub status: EebStatus,
    pub n_max: usize,
    /// Powers at which the realignment norm exceeded d, proving the power is not entanglement breaking.
    pub last_not_eb_step: Option<usize>,
}

/// Searches n = 1…n_max for the first power of Φ that is certifiably entanglement breaking.
///
/// For qubits PPT is exact. Otherwise primitive channels are certified by the separability
/// ball around invariant ⊗ maximally mixed.
pub fn classify_eeb(phi: &Superoperator, n_max: usize, tol: f64) -> Result<EebVerdict> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let report = analyze(phi)?;
    let d = phi.dim();
    let ppt_exact = d * d <= 6;
    let tau = CMatrix::identity(d, d).unscale(d as f64);
    let mut power = phi.clone();
    let mut ppt_step = None;
    let mut eb_step = None;
    let mut last_not_eb = None;
    for n in 1..=n_max {
        if n > 1 {
            power = phi.compose(&power);
        }
        let j = power.choi();
        let ppt = min_pt_eigenvalue(&j)? >= -tol;
        if ppt && ppt_step.is_none() {
            ppt_step = Some(n);
        }
        let certified = if ppt_exact {
            ppt
        } else if ppt && report.primitive {
            let omega = report.invariant_state.matrix();
            let delta = j.matrix().unscale(d as f64) - kron(omega, &tau);
            separable_ball_test(omega, &tau, &delta)?
        } else {
            false
        };
        if certified {
            eb_step = Some(n);
            break;
        }
        if trace_norm(power.matrix()) > d as f64 * (1.0 + 1e-12) {
            last_not_eb = Some(n);
        }
    }
    let status = if eb_step.is_some() {
        EebStatus::Eeb
    } else if last_not_eb == Some(n_max) {
        EebStatus::EsSuspected
    } else {
        EebStatus::Undetermined
    };
    Ok(EebVerdict { ppt_step, eb_step, status, n_max, last_not_eb_step: last_not_eb })
}

/// Lowering operator in the (ground, excited) basis.
pub fn lowering() -> CMatrix {
    real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0])
}

/// Number operator a*a.
pub fn number() -> CMatrix {
    diag(&[0.0, 1.0])
}

/// Thermal qubit state at inverse temperature β for excitation energy `energy`; β = ∞ gives the ground state.
pub fn thermal_qubit(energy: f64, beta: f64) -> CMatrix {
    if beta.is_infinite() {
        return diag(&[1.0, 0.0]);
    }
    let g = (-beta * energy).exp();
    diag(&[1.0 / (1.0 + g), g / (1.0 + g)])
}

/// Rotating-wave coupling ½(a*⊗b + a⊗b*).
pub fn rwa_coupling() -> CMatrix {
    let a = lowering();
    (kron(&a.adjoint(), &a) + kron(&a, &a.adjoint())).scale(0.5)
}

/// Qubit repeated-interaction channel with rotating-wave coupling against a thermal probe.
pub fn rwa_channel(e: f64, e0: f64, lambda: f64, tau: f64, beta: f64) -> Result<Superoperator> {
    if !(e > 0.0 && e0 > 0.0 && lambda >= 0.0 && tau > 0.0 && beta >= 0.0) {
        return Err(Error::InvalidParameter("require E, E0, τ > 0 and λ, β ≥ 0".into()));
    }
    let id = CMatrix::identity(2, 2);
    let n = number();
    let h = kron(&n.scale(e), &id) + kron(&id, &n.scale(e0)) + rwa_coupling().scale(lambda);
    let u = unitary_exp(&h, tau)?;
    let xi = thermal_qubit(e0, beta);
    Ok(Superoperator::from_fn(2, |x| {
        let joint = &u * kron(x, &xi) * u.adjoint();
        partial_trace(&joint, 2, 2, Side::Second).expect("4×4 joint operator")
    }))
}

/// Closed-form eigenvalue γ of the RWA channel: Φ(a*) = γ a* and Φ(a) = γ̄ a in the Schrödinger picture.
pub fn rwa_gamma(e: f64, e0: f64, lambda: f64, tau: f64) -> Complex64 {
    let nu = ((e0 - e).powi(2) + lambda * lambda).sqrt();
    let phase = Complex64::from_polar(1.0, -0.5 * tau * (e0 + e));
    let half = 0.5 * tau * nu;
    let ratio = if nu > 0.0 { (e0 - e) / nu * half.sin() } else { 0.0 };
    phase * c(half.cos(), ratio)
}

/// Threshold B(g) for the Gibbs factor g ∈ (0, 1].
pub fn rwa_threshold(g: f64) -> f64 {
    let g2 = g * g;
    (1.0 + 4.0 * g2 + g2 * g2 - (1.0 + g2) * (1.0 + 6.0 * g2 + g2 * g2).sqrt()) / (2.0 * g2)
}

/// Minimal power of the RWA channel that is entanglement breaking: max(1, ⌈½ log B(g) / log|γ|⌉).
pub fn rwa_min_eb_time(g: f64, abs_gamma: f64) -> Result<usize> {
    if !(g > 0.0 && g <= 1.0) {
        return Err(Error::InvalidParameter(format!("Gibbs factor must lie in (0, 1], got {g}")));
    }
    if !(0.0..1.0).contains(&abs_gamma) {
        return Err(Error::InvalidParameter(format!("|γ| must lie in [0, 1), got {abs_gamma}")));
    }
    if abs_gamma == 0.0 {
        return Ok(1);
    }
    let n = (0.5 * rwa_threshold(g).ln() / abs_gamma.ln()).ceil();
    Ok((n as usize).max(1))
}

/// Inverse temperature whose probe state has populations (1, g²)/(1 + g²), matching the threshold B(g).
pub fn rwa_beta_for_gibbs_factor(g: f64, e0: f64) -> f64 {
    if g == 0.0 {
        f64::INFINITY
    } else {
        -2.0 * g.ln() / e0
    }
}

/// Diagonal projection onto the given computational basis vectors.
pub fn basis_projection(d: usize, indices: &[usize]) -> CMatrix {
    let mut m = DMatrix::zeros(d, d);
    for &i in indices {
        m[(i, i)] = c(1.0, 0.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::{ket_bra, partial_transpose};

    fn dephasing_flip() -> Superoperator {
        let x = real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        Superoperator::unitary(&x)
    }

    #[test]
    fn depolarizing_is_primitive() {
        let tau = CMatrix::identity(3, 3).unscale(3.0);
        let r = analyze(&Superoperator::replacement(&tau)).unwrap();
        assert!(r.primitive && r.irreducible && r.faithful);
        assert_eq!(r.period_z, Some(1));
        assert!(frobenius(&(r.invariant_state.matrix() - tau)) < 1e-12);
        assert!((r.spectral_radius - 1.0).abs() < 1e-8);
    }

    #[test]
    fn unitary_is_not_primitive() {
        let h = real_matrix(2, 2, &[0.3, 0.1, 0.1, -0.2]);
        let u = unitary_exp(&h, 1.0).unwrap();
        let r = analyze(&Superoperator::unitary(&u)).unwrap();
        assert!(!r.primitive && !r.irreducible);
        assert_eq!(r.peripheral.len(), 4);
        let v = classify_eeb(&Superoperator::unitary(&u), 30, 1e-10).unwrap();
        assert_eq!(v.eb_step, None);
        assert_ne!(v.status, EebStatus::Eeb);
    }

    #[test]
    fn flip_channel_has_period_two_on_classical_part() {
        let r = analyze(&dephasing_flip()).unwrap();
        assert!(!r.irreducible);
        assert_eq!(r.fixed_multiplicity, 2);
    }

    #[test]
    fn rwa_eigenrelations() {
        let (e, e0, lam, tau, beta) = (0.9, 0.8, 0.3, 1.7, 1.2);
        let phi = rwa_channel(e, e0, lam, tau, beta).unwrap();
        let g = rwa_gamma(e, e0, lam, tau);
        let a = lowering();
        assert!(frobenius(&(phi.apply(&a) - &a * g.conj())) < 1e-10);
        let ad = a.adjoint();
        assert!(frobenius(&(phi.apply(&ad) - &ad * g)) < 1e-10);
        let sz = diag(&[1.0, -1.0]);
        assert!(frobenius(&(phi.apply(&sz) - sz.scale(g.norm_sqr()))) < 1e-10);
        let rho = thermal_qubit(e0, beta);
        assert!(frobenius(&(phi.apply(&rho) - &rho)) < 1e-10);
        let nu = ((e0 - e) * (e0 - e) + lam * lam).sqrt();
        let abs_g = (1.0 - lam * lam / (nu * nu) * (nu * tau / 2.0).sin().powi(2)).sqrt();
        assert!((g.norm() - abs_g).abs() < 1e-14);
        let r = analyze(&phi).unwrap();
        assert!(r.primitive);
        assert!(frobenius(&(r.invariant_state.matrix() - rho)) < 1e-9);
    }

    #[test]
    fn rwa_zero_temperature_pt_spectrum() {
        let (e, lam, tau) = (1.0, 1.0, 1.1);
        let phi = rwa_channel(e, e, lam, tau, f64::INFINITY).unwrap();
        let ag = rwa_gamma(e, e, lam, tau).norm();
        for n in 1..4 {
            let j = phi.power(n).choi();
            let pt = partial_transpose(j.matrix(), 2, 2, Side::Second).unwrap();
            let (v, _) = eigdecompose_hermitian(&pt).unwrap();
            let x = ag.powi(2 * n as i32);
            let want = [1.0, 1.0, x, -x];
            let mut want = want.to_vec();
            want.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in v.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10, "{v:?} {want:?}");
            }
        }
    }

    #[test]
    fn rwa_resonant_gamma_vanishes() {
        let g = rwa_gamma(1.0, 1.0, 2.0, PI / 2.0);
        assert!(g.norm() < 1e-15);
        let v = classify_eeb(&rwa_channel(1.0, 1.0, 2.0, PI / 2.0, 0.5).unwrap(), 5, 1e-10).unwrap();
        assert_eq!(v.eb_step, Some(1));
        assert_eq!(rwa_min_eb_time(0.4, 0.0).unwrap(), 1);
    }

    #[test]
    fn threshold_endpoint() {
        assert!((rwa_threshold(1.0) - (3.0 - 2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!(rwa_threshold(0.01) > 0.0);
        assert!(rwa_min_eb_time(0.0, 0.5).is_err());
        assert!(rwa_min_eb_time(0.5, 1.0).is_err());
    }

    #[test]
    fn rwa_eb_time_matches_formula() {
        for &(g, ag) in &[(0.5, 0.8), (0.9, 0.3), (0.2, 0.95)] {
            let e0 = 1.0;
            let tau = 2.0 * f64::acos(ag);
            let phi = rwa_channel(e0, e0, 1.0, tau, rwa_beta_for_gibbs_factor(g, e0)).unwrap();
            let v = classify_eeb(&phi, 200, 1e-10).unwrap();
            assert_eq!(v.eb_step, Some(rwa_min_eb_time(g, ag).unwrap()), "g={g} |γ|={ag}");
            assert_eq!(v.status, EebStatus::Eeb);
        }
    }

    fn period_two_example(lambda: Complex64) -> (Vec<CMatrix>, DensityMatrix, Superoperator) {
        let sigma = DensityMatrix::from_diagonal(&[0.3, 0.2, 0.5]).unwrap();
        let p = vec![basis_projection(3, &[0, 1]), basis_projection(3, &[2])];
        let (e0, f0) = (0usize, 2usize);
        let q = Superoperator::from_fn(3, |x| {
            ket_bra(3, e0, f0) * (lambda.conj() * x[(f0, e0)]) + ket_bra(3, f0, e0) * (lambda * x[(e0, f0)])
        });
        (p, sigma, q)
    }

    #[test]
    fn irreducible_constructor_period_two() {
        let (p, sigma, q) = period_two_example(c(0.2, 0.05));
        assert!(phi_q_norm_shortcut(2, &sigma, &q));
        let phi = build_irreducible(2, &p, &sigma, &q).unwrap();
        let r = analyze(&phi).unwrap();
        assert!(r.irreducible && !r.primitive);
        assert_eq!(r.period_z, Some(2));
        assert!(frobenius(&(r.invariant_state.matrix() - sigma.matrix())) < 1e-9);
        for (k, pk) in p.iter().enumerate() {
            assert!(((r.invariant_state.matrix() * pk).trace().re - 0.5).abs() < 1e-9, "block {k}");
        }
        let v = classify_eeb(&phi, 40, 1e-10).unwrap();
        assert_eq!(v.eb_step, None);
        assert_ne!(v.status, EebStatus::Eeb);
        let phi_p = peripheral_part(&p, &sigma);
        let id = CMatrix::identity(3, 3);
        let want = kron(sigma.matrix(), &id) * (kron(&p[1], &p[0]) + kron(&p[0], &p[1])).scale(2.0);
        assert!(frobenius(&(phi_p.choi().matrix() - want)) < 1e-12);
        let found = peripheral_projections(&phi, &r).unwrap();
        let direct = frobenius(&(&found[0] - &p[0])) + frobenius(&(&found[1] - &p[1]));
        let shifted = frobenius(&(&found[0] - &p[1])) + frobenius(&(&found[1] - &p[0]));
        assert!(direct.min(shifted) < 1e-8);
    }

    #[test]
    fn irreducible_intertwining() {
        let (p, sigma, q) = period_two_example(c(0.15, 0.0));
        let phi = build_irreducible(2, &p, &sigma, &q).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let x = ket_bra(3, i, j);
                for a in 0..2 {
                    for b in 0..2 {
                        let lhs = phi.apply(&(&p[a] * &x * &p[b]));
                        let rhs = &p[(a + 1) % 2] * phi.apply(&x) * &p[(b + 1) % 2];
                        assert!(frobenius(&(lhs - rhs)) < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn irreducible_z1_is_replacement() {
        let sigma = DensityMatrix::from_diagonal(&[0.6, 0.4]).unwrap();
        let phi = build_irreducible(1, &[CMatrix::identity(2, 2)], &sigma, &Superoperator::zero(2)).unwrap();
        assert!(frobenius(&(phi.matrix() - Superoperator::replacement(sigma.matrix()).matrix())) < 1e-14);
        assert!(analyze(&phi).unwrap().primitive);
    }

    #[test]
    fn irreducible_preconditions_rejected() {
        let (p, sigma, q) = period_two_example(c(0.2, 0.0));
        let bad_sigma = DensityMatrix::from_diagonal(&[0.4, 0.2, 0.4]).unwrap();
        assert!(build_irreducible(2, &p, &bad_sigma, &q).is_err());
        assert!(build_irreducible(2, &[p[0].clone(), p[0].clone()], &sigma, &q).is_err());
        let (_, _, big) = period_two_example(c(1.5, 0.0));
        assert!(build_irreducible(2, &p, &sigma, &big).is_err());
        assert!(build_irreducible(4, &p, &sigma, &q).is_err());
    }

    #[test]
    fn primitive_qutrit_certified_by_ball() {
        let sigma = diag(&[0.5, 0.3, 0.2]);
        let u = unitary_exp(&real_matrix(3, 3, &[0.0, 1.0, 0.3, 1.0, 0.5, 0.2, 0.3, 0.2, -0.4]), 0.9).unwrap();
        let mix = Superoperator::replacement(&sigma).scale(c(0.4, 0.0)).add(&Superoperator::unitary(&u).scale(c(0.6, 0.0)));
        let v = classify_eeb(&mix, 200, 1e-10).unwrap();
        assert_eq!(v.status, EebStatus::Eeb);
        assert!(v.eb_step.unwrap() >= v.ppt_step.unwrap());
    }
}

//! Protocol description: Hamiltonians, temperature profile, coupling and JSON exchange.

use crate::channel::{lowering, number, rwa_coupling};
use crate::error::{Error, Result};
use crate::qlinalg::{c, eigdecompose_hermitian, hermitize, kron, unitary_exp, CMatrix};
use serde_json::{json, Value};

/// Coefficients a₁…a₆ of the second inverse-temperature profile.
pub const BETA2_COEFFS: [f64; 6] = [35.483, 141.929, 42.945, 93.5, 17.808, 1.061];

/// Inverse temperature of the probes as a function of s ∈ [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub enum BetaProfile {
    /// 2(3 + 4 tanh 2s) / (3 + 2 ln cosh 2).
    Beta1,
    /// a₁ tanh 2s − a₂ tanh(s/2) − a₃ s³ + a₄ s² − a₅ s + a₆.
    Beta2 { coeffs: [f64; 6] },
    /// Σ c_k s^k.
    Poly { coeffs: Vec<f64> },
    /// Zero-temperature probes.
    Infinite,
}

impl BetaProfile {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            BetaProfile::Beta1 => 2.0 * (3.0 + 4.0 * (2.0 * s).tanh()) / (3.0 + 2.0 * 2f64.cosh().ln()),
            BetaProfile::Beta2 { coeffs: a } => {
                a[0] * (2.0 * s).tanh() - a[1] * (s / 2.0).tanh() - a[2] * s.powi(3) + a[3] * s * s - a[4] * s + a[5]
            }
            BetaProfile::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, &ck| acc * s + ck),
            BetaProfile::Infinite => f64::INFINITY,
        }
    }

    pub fn constant(beta: f64) -> Self {
        if beta.is_infinite() {
            BetaProfile::Infinite
        } else {
            BetaProfile::Poly { coeffs: vec![beta] }
        }
    }

    fn validate(&self) -> Result<()> {
        if let BetaProfile::Infinite = self {
            return Ok(());
        }
        for i in 0..=1000 {
            let s = i as f64 / 1000.0;
            let b = self.eval(s);
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::InvalidParameter(format!("inverse temperature {b} at s = {s} is not positive")));
            }
        }
        Ok(())
    }

    fn to_json(&self) -> Value {
        match self {
            BetaProfile::Beta1 => json!({"kind": "beta1"}),
            BetaProfile::Beta2 { coeffs } => json!({"kind": "beta2", "coeffs": coeffs}),
            BetaProfile::Poly { coeffs } => json!({"kind": "poly", "coeffs": coeffs}),
            BetaProfile::Infinite => json!({"kind": "infinite"}),
        }
    }

    fn from_json(v: &Value) -> Result<Self> {
        let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| bad("beta.kind missing"))?;
        let coeffs = || -> Result<Vec<f64>> {
            serde_json::from_value(v.get("coeffs").cloned().ok_or_else(|| bad("beta.coeffs missing"))?)
                .map_err(|e| bad(&format!("beta.coeffs: {e}")))
        };
        match kind {
            "beta1" => Ok(BetaProfile::Beta1),
            "beta2" => match v.get("coeffs") {
                None => Ok(BetaProfile::Beta2 { coeffs: BETA2_COEFFS }),
                Some(_) => {
                    let c = coeffs()?;
                    let arr: [f64; 6] = c.try_into().map_err(|_| bad("beta2 needs six coefficients"))?;
                    Ok(BetaProfile::Beta2 { coeffs: arr })
                }
            },
            "poly" => Ok(BetaProfile::Poly { coeffs: coeffs()? }),
            "infinite" => Ok(BetaProfile::Infinite),
            other => Err(bad(&format!("unknown beta kind '{other}'"))),
        }
    }
}

/// Probe Hamiltonian as a function of s.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeHamiltonian {
    Constant(CMatrix),
    /// (1 − s)·start + s·end.
    Linear { start: CMatrix, end: CMatrix },
}

/// System–probe interaction (already multiplied by the coupling constant).
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    Rwa { lambda: f64 },
    FullDipole { lambda: f64 },
    Custom { matrix: CMatrix },
}

impl Coupling {
    fn matrix(&self) -> CMatrix {
        match self {
            Coupling::Rwa { lambda } => rwa_coupling().scale(*lambda),
            Coupling::FullDipole { lambda } => {
                let a = lowering();
                let x = &a + a.adjoint();
                kron(&x, &x).scale(0.5 * lambda)
            }
            Coupling::Custom { matrix } => matrix.clone(),
        }
    }
}

/// A repeated interaction protocol with T probes sampled at s = k/T.
#[derive(Debug, Clone, PartialEq)]
pub struct RisProtocol {
    h_s: CMatrix,
    h_e: ProbeHamiltonian,
    beta: BetaProfile,
    coupling: Coupling,
    tau: f64,
    steps: usize,
    v: CMatrix,
    cached_unitary: Option<CMatrix>,
}

fn bad(msg: &str) -> Error {
    Error::InvalidParameter(msg.to_string())
}

impl RisProtocol {
    pub fn new(
        h_s: CMatrix,
        h_e: ProbeHamiltonian,
        beta: BetaProfile,
        coupling: Coupling,
        tau: f64,
        steps: usize,
    ) -> Result<Self> {
        let h_s = hermitize(&h_s)?;
        let h_e = match h_e {
            ProbeHamiltonian::Constant(m) => ProbeHamiltonian::Constant(hermitize(&m)?),
            ProbeHamiltonian::Linear { start, end } => {
                if start.shape() != end.shape() {
                    return Err(bad("probe Hamiltonian endpoints differ in shape"));
                }
                ProbeHamiltonian::Linear { start: hermitize(&start)?, end: hermitize(&end)? }
            }
        };
        let d_e = match &h_e {
            ProbeHamiltonian::Constant(m) | ProbeHamiltonian::Linear { start: m, .. } => m.nrows(),
        };
        let v = hermitize(&coupling.matrix())?;
        let n = h_s.nrows() * d_e;
        if v.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.nrows() });
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(bad("interaction time must be positive"));
        }
        if steps == 0 {
            return Err(bad("number of probes must be positive"));
        }
        beta.validate()?;
        let mut proto = RisProtocol { h_s, h_e, beta, coupling, tau, steps, v, cached_unitary: None };
        if let ProbeHamiltonian::Constant(_) = proto.h_e {
            proto.cached_unitary = Some(proto.compute_unitary(0.0)?);
        }
        Ok(proto)
    }

    /// Qubit system and probe with h_S = E a*a, h_E = E0 b*b and rotating-wave coupling.
    pub fn rwa(e: f64, e0: f64, lambda: f64, tau: f64, beta: BetaProfile, steps: usize) -> Result<Self> {
        Self::qubit(e, e0, Coupling::Rwa { lambda }, tau, beta, steps)
    }

    /// Qubit system and probe with full-dipole coupling ½λ(a + a*)⊗(b + b*).
    pub fn full_dipole(e: f64, e0: f64, lambda: f64, tau: f64, beta: BetaProfile, steps: usize) -> Result<Self> {
        Self::qubit(e, e0, Coupling::FullDipole { lambda }, tau, beta, steps)
    }

    fn qubit(e: f64, e0: f64, coupling: Coupling, tau: f64, beta: BetaProfile, steps: usize) -> Result<Self> {
        if !(e > 0.0 && e0 > 0.0) {
            return Err(bad("excitation energies must be positive"));
        }
        let n = number();
        Self::new(n.scale(e), ProbeHamiltonian::Constant(n.scale(e0)), beta, coupling, tau, steps)
    }

    /// Same protocol with a different number of probes.
    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(bad("number of probes must be positive"));
        }
        let mut p = self.clone();
        p.steps = steps;
        Ok(p)
    }

    /// Same protocol with a different coupling.
    pub fn with_coupling(&self, coupling: Coupling) -> Result<Self> {
        Self::new(self.h_s.clone(), self.h_e.clone(), self.beta.clone(), coupling, self.tau, self.steps)
    }

    pub fn d_s(&self) -> usize {
        self.h_s.nrows()
    }

    pub fn d_e(&self) -> usize {
        match &self.h_e {
            ProbeHamiltonian::Constant(m) | ProbeHamiltonian::Linear { start: m, .. } => m.nrows(),
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn h_s(&self) -> &CMatrix {
        &self.h_s
    }

    pub fn beta_profile(&self) -> &BetaProfile {
        &self.beta
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn beta(&self, s: f64) -> f64 {
        self.beta.eval(s)
    }

    pub fn h_e(&self, s: f64) -> CMatrix {
        match &self.h_e {
            ProbeHamiltonian::Constant(m) => m.clone(),
            ProbeHamiltonian::Linear { start, end } => start.scale(1.0 - s) + end.scale(s),
        }
    }

    pub(crate) fn check_s(&self, s: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&s) {
            return Err(bad(&format!("s must lie in [0, 1], got {s}")));
        }
        Ok(())
    }

    fn compute_unitary(&self, s: f64) -> Result<CMatrix> {
        let ids = CMatrix::identity(self.d_s(), self.d_s());
        let ide = CMatrix::identity(self.d_e(), self.d_e());
        let h = kron(&self.h_s, &ide) + kron(&ids, &self.h_e(s)) + &self.v;
        unitary_exp(&h, self.tau)
    }

    /// exp(−iτ(h_S⊗1 + 1⊗h_E(s) + v)).
    pub fn unitary(&self, s: f64) -> Result<CMatrix> {
        match &self.cached_unitary {
            Some(u) => Ok(u.clone()),
            None => self.compute_unitary(s),
        }
    }

    /// Gibbs state of h_E(s) at β(s); the normalized ground-space projector when β = ∞.
    pub fn probe_state(&self, s: f64) -> Result<CMatrix> {
        let beta = self.beta(s);
        let (vals, vecs) = eigdecompose_hermitian(&self.h_e(s))?;
        let e_min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = vals
            .iter()
            .map(|&e| {
                if beta.is_infinite() {
                    if e - e_min <= 1e-9 { 1.0 } else { 0.0 }
                } else {
                    (-beta * (e - e_min)).exp()
                }
            })
            .collect();
        let z: f64 = weights.iter().sum();
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::Numerical("probe partition function is not finite".into()));
        }
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            weights.len(),
            weights.iter().map(|&w| c(w / z, 0.0)),
        ));
        Ok(&vecs * d * vecs.adjoint())
    }

    pub fn to_json(&self) -> Value {
        let h_e = match &self.h_e {
            ProbeHamiltonian::Constant(m) => matrix_json(m),
            ProbeHamiltonian::Linear { start, end } => {
                json!({"kind": "linear", "start": matrix_json(start), "end": matrix_json(end)})
            }
        };
        let coupling = match &self.coupling {
            Coupling::Rwa { lambda } => json!({"kind": "rwa", "lambda": lambda}),
            Coupling::FullDipole { lambda } => json!({"kind": "full_dipole", "lambda": lambda}),
            Coupling::Custom { matrix } => json!({"kind": "custom", "matrix": matrix_json(matrix)}),
        };
        json!({
            "d_S": self.d_s(),
            "d_E": self.d_e(),
            "h_S": matrix_json(&self.h_s),
            "h_E": h_e,
            "tau": self.tau,
            "T": self.steps,
            "beta": self.beta.to_json(),
            "coupling": coupling,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let get = |k: &str| v.get(k).ok_or_else(|| bad(&format!("protocol field '{k}' missing")));
        let usize_field = |k: &str| -> Result<usize> {
            get(k)?.as_u64().map(|x| x as usize).ok_or_else(|| bad(&format!("'{k}' must be a positive integer")))
        };
        let d_s = usize_field("d_S")?;
        let d_e = usize_field("d_E")?;
        let h_s = parse_matrix(get("h_S")?, d_s)?;
        let h_e_v = get("h_E")?;
        let h_e = match h_e_v.get("kind").and_then(Value::as_str) {
            Some("linear") => ProbeHamiltonian::Linear {
                start: parse_matrix(h_e_v.get("start").ok_or_else(|| bad("h_E.start missing"))?, d_e)?,
                end: parse_matrix(h_e_v.get("end").ok_or_else(|| bad("h_E.end missing"))?, d_e)?,
            },
            Some("constant") => {
                ProbeHamiltonian::Constant(parse_matrix(h_e_v.get("matrix").ok_or_else(|| bad("h_E.matrix missing"))?, d_e)?)
            }
            Some(other) => return Err(bad(&format!("unknown h_E kind '{other}'"))),
            None => ProbeHamiltonian::Constant(parse_matrix(h_e_v, d_e)?),
        };
        let tau = get("tau")?.as_f64().ok_or_else(|| bad("'tau' must be a number"))?;
        let steps = usize_field("T")?;
        let beta = BetaProfile::from_json(get("beta")?)?;
        let cv = get("coupling")?;
        let lambda = || cv.get("lambda").and_then(Value::as_f64).ok_or_else(|| bad("coupling.lambda missing"));
        let coupling = match cv.get("kind").and_then(Value::as_str) {
            Some("rwa") => Coupling::Rwa { lambda: lambda()? },
            Some("full_dipole") => Coupling::FullDipole { lambda: lambda()? },
            Some("custom") => Coupling::Custom {
                matrix: parse_matrix(cv.get("matrix").ok_or_else(|| bad("coupling.matrix missing"))?, d_s * d_e)?,
            },
            _ => return Err(bad("coupling.kind must be rwa, full_dipole or custom")),
        };
        if matches!(coupling, Coupling::Rwa { .. } | Coupling::FullDipole { .. }) && (d_s != 2 || d_e != 2) {
            return Err(bad("rwa and full_dipole couplings need qubit system and probe"));
        }
        Self::new(h_s, h_e, beta, coupling, tau, steps)
    }
}

fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| {
                Value::Array(
                    (0..m.ncols())
                        .map(|col| {
                            let z = m[(r, col)];
                            if z.im == 0.0 { json!(z.re) } else { json!([z.re, z.im]) }
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Square matrix from nested rows whose entries are numbers or `[re, im]` pairs.
fn parse_matrix(v: &Value, n: usize) -> Result<CMatrix> {
    let rows = v.as_array().ok_or_else(|| bad("matrix must be an array of rows"))?;
    if rows.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rows.len() });
    }
    let mut m = CMatrix::zeros(n, n);
    for (r, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| bad("matrix row must be an array"))?;
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
        for (col, x) in row.iter().enumerate() {
            m[(r, col)] = match x {
                Value::Number(num) => c(num.as_f64().unwrap_or(f64::NAN), 0.0),
                Value::Array(p) if p.len() == 2 => c(
                    p[0].as_f64().ok_or_else(|| bad("matrix entry must be numeric"))?,
                    p[1].as_f64().ok_or_else(|| bad("matrix entry must be numeric"))?,
                ),
                _ => return Err(bad("matrix entry must be a number or [re, im]")),
            };
        }
    }
    Ok(m)
}

//! Two-time measurement trajectories sampled sequentially, probe by probe.

use super::{final_state, lambda_derivatives, RisProtocol};
use crate::error::{Error, Result};
use crate::qlinalg::{eigdecompose_hermitian, CMatrix, DensityMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Eigenvalues closer than this are grouped into one spectral projector.
pub const CLUSTER_TOL: f64 = 1e-9;

/// Outcome of a single forward trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub a_init_index: usize,
    pub a_fin_index: usize,
    /// Probe outcomes before each interaction (empty unless recorded).
    pub probe_in: Vec<usize>,
    /// Probe outcomes after each interaction (empty unless recorded).
    pub probe_out: Vec<usize>,
    /// Entropy production ς_T of the trajectory.
    pub sigma_traj: f64,
    /// Probe flux Δy_tot = Σ β_k (E_out − E_in).
    pub dy_tot: f64,
    /// System term (−ln r^i) − (−ln r^f); ς_T = Δy_tot − ds_sys.
    pub ds_sys: f64,
}

struct Spectral {
    projectors: Vec<CMatrix>,
    values: Vec<f64>,
}

/// Groups eigenvalues within [`CLUSTER_TOL`] into spectral projectors.
fn spectral_clusters(x: &CMatrix) -> Result<Spectral> {
    let (vals, vecs) = eigdecompose_hermitian(x)?;
    let d = vals.len();
    let mut projectors = Vec::new();
    let mut values = Vec::new();
    let mut i = 0;
    while i < d {
        let mut j = i + 1;
        while j < d && (vals[i] - vals[j]).abs() <= CLUSTER_TOL {
            j += 1;
        }
        let mut p = CMatrix::zeros(d, d);
        for k in i..j {
            let v = vecs.column(k);
            p += v * v.adjoint();
        }
        values.push(vals[i..j].iter().sum::<f64>() / (j - i) as f64);
        projectors.push(p);
        i = j;
    }
    Ok(Spectral { projectors, values })
}

struct StepData {
    beta: f64,
    energies: Vec<f64>,
    pre_probs: Vec<f64>,
    /// kraus[i][j]: operators for pre-outcome i and post-outcome j, already divided by √dim Π_i.
    kraus: Vec<Vec<Vec<CMatrix>>>,
}

/// Precomputed data for sampling trajectories of a fixed protocol and initial state.
pub struct TrajectorySampler {
    rho_init: CMatrix,
    init: Spectral,
    fin: Spectral,
    steps: Vec<StepData>,
    /// True when the final state's spectrum had to be floored.
    pub floored: bool,
}

fn draw(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

impl TrajectorySampler {
    pub fn new(proto: &RisProtocol, rho: &DensityMatrix) -> Result<Self> {
        if rho.dim() != proto.d_s() {
            return Err(Error::DimensionMismatch { expected: proto.d_s(), got: rho.dim() });
        }
        let init = spectral_clusters(rho.matrix())?;
        if init.values.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidParameter("initial state is not full rank".into()));
        }
        let fs = final_state(proto, rho)?;
        let fin = spectral_clusters(&fs.state)?;
        let t = proto.steps();
        let (ds, de) = (proto.d_s(), proto.d_e());
        let mut steps = Vec::with_capacity(t);
        for k in 1..=t {
            let s = k as f64 / t as f64;
            let beta = proto.beta(s);
            if !beta.is_finite() {
                return Err(Error::Unsupported("trajectory sampling requires finite inverse temperatures".into()));
            }
            let u = proto.unitary(s)?;
            let (vals, vecs) = eigdecompose_hermitian(&proto.h_e(s))?;
            let mut groups: Vec<Vec<usize>> = Vec::new();
            for i in 0..de {
                match groups.last_mut() {
                    Some(g) if (vals[g[0]] - vals[i]).abs() <= CLUSTER_TOL => g.push(i),
                    _ => groups.push(vec![i]),
                }
            }
            let e_min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let energies: Vec<f64> = groups.iter().map(|g| g.iter().map(|&i| vals[i]).sum::<f64>() / g.len() as f64).collect();
            let weights: Vec<f64> =
                groups.iter().map(|g| g.iter().map(|&i| (-beta * (vals[i] - e_min)).exp()).sum::<f64>()).collect();
            let z: f64 = weights.iter().sum();
            let pre_probs = weights.iter().map(|w| w / z).collect();
            // K_ba = (1⊗⟨e_b|) U (1⊗|e_a⟩)
            let block = |a: usize, b: usize| -> CMatrix {
                let ea = vecs.column(a);
                let eb = vecs.column(b);
                CMatrix::from_fn(ds, ds, |x, y| {
                    let mut acc = crate::qlinalg::c(0.0, 0.0);
                    for p in 0..de {
                        for q in 0..de {
                            acc += eb[p].conj() * u[(x * de + p, y * de + q)] * ea[q];
                        }
                    }
                    acc
                })
            };
            let kraus = groups
                .iter()
                .map(|gi| {
                    let norm = 1.0 / (gi.len() as f64).sqrt();
                    groups
                        .iter()
                        .map(|gj| {
                            gi.iter()
                                .flat_map(|&a| gj.iter().map(move |&b| (a, b)))
                                .map(|(a, b)| block(a, b).scale(norm))
                                .collect()
                        })
                        .collect()
                })
                .collect();
            steps.push(StepData { beta, energies, pre_probs, kraus });
        }
        Ok(TrajectorySampler { rho_init: rho.matrix().clone(), init, fin, steps, floored: fs.floored })
    }

    /// Samples the trajectory with the given index from the stream derived from `seed`.
    pub fn sample(&self, seed: u64, index: u64, record_probes: bool) -> TrajectoryRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        self.sample_with(&mut rng, record_probes)
    }

    pub fn sample_with<R: Rng>(&self, rng: &mut R, record_probes: bool) -> TrajectoryRecord {
        let rho = &self.rho_init;
        let probs: Vec<f64> = self.init.projectors.iter().map(|p| (p * rho).trace().re.max(0.0)).collect();
        let a_i = draw(&probs, rng.random::<f64>());
        let p = &self.init.projectors[a_i];
        let mut state = p * rho * p;
        state.unscale_mut(probs[a_i]);
        let mut dy = 0.0;
        let mut probe_in = Vec::new();
        let mut probe_out = Vec::new();
        let mut outs: Vec<CMatrix> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for step in &self.steps {
            let i = draw(&step.pre_probs, rng.random::<f64>());
            outs.clear();
            weights.clear();
            for ks in &step.kraus[i] {
                let mut acc = CMatrix::zeros(state.nrows(), state.ncols());
                for k in ks {
                    acc += k * &state * k.adjoint();
                }
                weights.push(acc.trace().re.max(0.0));
                outs.push(acc);
            }
            let j = draw(&weights, rng.random::<f64>());
            state = outs[j].unscale(weights[j]);
            dy += step.beta * (step.energies[j] - step.energies[i]);
            if record_probes {
                probe_in.push(i);
                probe_out.push(j);
            }
        }
        let fprobs: Vec<f64> = self.fin.projectors.iter().map(|p| (p * &state).trace().re.max(0.0)).collect();
        let a_f = draw(&fprobs, rng.random::<f64>());
        let ds_sys = -self.init.values[a_i].ln() + self.fin.values[a_f].ln();
        TrajectoryRecord {
            a_init_index: a_i,
            a_fin_index: a_f,
            probe_in,
            probe_out,
            sigma_traj: dy - ds_sys,
            dy_tot: dy,
            ds_sys,
        }
    }
}

/// Samples `n` trajectories in parallel; the result is ordered by index and independent of the thread count.
pub fn sample_ensemble(sampler: &TrajectorySampler, n: usize, seed: u64, record_probes: bool) -> Vec<TrajectoryRecord> {
    (0..n as u64).into_par_iter().map(|i| sampler.sample(seed, i, record_probes)).collect()
}

/// Sample mean, standard error and unbiased variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub mean: f64,
    pub std_err: f64,
    pub variance: f64,
}

impl EnsembleStats {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = xs.into_iter().collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let variance = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        EnsembleStats { mean, std_err: (variance / n).sqrt(), variance }
    }
}

/// Central limit diagnostic for (Δy_tot − TΛ′(0))/√T.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltSummary {
    pub steps: usize,
    pub n_traj: usize,
    pub seed: u64,
    pub lambda_d1: f64,
    pub lambda_d2: f64,
    pub mean: f64,
    pub variance: f64,
    /// Largest gap between the empirical CDF and that of N(0, Λ″(0)).
    pub ks_gap: f64,
}

fn normal_cdf(x: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return if x >= 0.0 { 1.0 } else { 0.0 };
    }
    0.5 * libm::erfc(-x / (2.0 * var).sqrt())
}

pub fn clt_diagnostic(proto: &RisProtocol, rho: &DensityMatrix, steps: usize, n_traj: usize, seed: u64) -> Result<CltSummary> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter("need at least one trajectory".into()));
    }
    let p = proto.with_steps(steps)?;
    let (d1, d2) = lambda_derivatives(&p)?;
    let sampler = TrajectorySampler::new(&p, rho)?;
    let records = sample_ensemble(&sampler, n_traj, seed, false);
    let sqrt_t = (steps as f64).sqrt();
    let mut zs: Vec<f64> = records.iter().map(|r| (r.dy_tot - steps as f64 * d1) / sqrt_t).collect();
    let stats = EnsembleStats::of(zs.iter().copied());
    zs.sort_by(f64::total_cmp);
    let n = zs.len() as f64;
    let ks_gap = zs.iter().enumerate().fold(0.0f64, |m, (i, &x)| {
        let f = normal_cdf(x, d2);
        m.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    });
    Ok(CltSummary { steps, n_traj, seed, lambda_d1: d1, lambda_d2: d2, mean: stats.mean, variance: stats.variance, ks_gap })
}

//! Repeated-interaction invariants on the bundled protocols.

use majflow::cli::load_protocol;
use majflow::qlinalg::{real_matrix, DensityMatrix};
use majflow::ris::{
    big_lambda, mgf_exact, mgf_flux_exact, sample_ensemble, sigma_tot, BetaProfile, EnsembleStats, TrajectorySampler,
};

fn state() -> DensityMatrix {
    DensityMatrix::new(real_matrix(2, 2, &[0.6, 0.2, 0.2, 0.4])).unwrap()
}

#[test]
fn beta1_profile_values() {
    let b = BetaProfile::Beta1;
    let n = 20_000;
    let integral: f64 = (0..n).map(|i| b.eval((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
    assert!((integral - 2.0).abs() < 1e-8, "{integral}");
    assert!((b.eval(0.0) - 1.06).abs() < 0.01);
    assert!((b.eval(1.0) - 2.43).abs() < 0.01);
}

#[test]
fn trajectory_balance_and_mgf() {
    let p = load_protocol("full-dipole-beta1").unwrap().with_steps(25).unwrap();
    let rho = state();
    assert!((mgf_exact(&p, &rho, 0.0).unwrap() - 1.0).abs() < 1e-12);
    let sampler = TrajectorySampler::new(&p, &rho).unwrap();
    let recs = sample_ensemble(&sampler, 40_000, 3, false);
    for r in &recs {
        assert_eq!(r.sigma_traj, r.dy_tot - r.ds_sys);
    }
    let mean = EnsembleStats::of(recs.iter().map(|r| r.sigma_traj));
    let exact = sigma_tot(&p, &rho).unwrap().total;
    assert!((mean.mean - exact).abs() <= 4.0 * mean.std_err, "{} vs {exact}", mean.mean);
    for alpha in [-0.5, 0.3] {
        let m = EnsembleStats::of(recs.iter().map(|r| (alpha * r.sigma_traj).exp()));
        let exact = mgf_exact(&p, &rho, alpha).unwrap();
        assert!((m.mean - exact).abs() <= 4.0 * m.std_err, "α = {alpha}: {} vs {exact}", m.mean);
    }
}

#[test]
fn scaled_cumulant_converges() {
    let p = load_protocol("full-dipole-beta1").unwrap().with_steps(400).unwrap();
    let rho = state();
    for alpha in [-0.5, 0.5] {
        let finite = mgf_flux_exact(&p, &rho, alpha).unwrap().ln() / 400.0;
        let limit = big_lambda(&p, alpha).unwrap();
        assert!((finite - limit).abs() <= 0.02, "α = {alpha}: {finite} vs {limit}");
    }
}

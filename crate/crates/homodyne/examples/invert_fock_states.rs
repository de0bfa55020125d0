//! Recover Fock-state statistics from phase-randomized coherent-state
//! measurements: the two-mu inversion applied to reconstructed w0 curves,
//! scored against the analytic Fock-1 and Fock-2 theory.

use homodyne::density::Density1D;
use homodyne::invert::{fit_mu_detailed, invert_two_mu, overlap_1d, StatObject};
use homodyne::sim::{simulate, DetectorRecord, LoModel, SimulationConfig};
use homodyne::states::{theoretical_w0, QuadratureConvention, StateSpec};
use homodyne::stats::{
    default_m_axis, default_quadrature_axis, estimate_density_1d, estimate_sigma0,
    reconstruct_w0,
};

fn main() -> homodyne::Result<()> {
    let conv = QuadratureConvention::default();
    let lo = LoModel::new(conv, 26.0)?;
    let run = |state, seed| {
        simulate(&SimulationConfig {
            state,
            lo,
            n_samples: 1_000_000,
            seed,
        })
    };
    let vacuum = run(StateSpec::Vacuum, 11)?;
    let prcs_a = run(StateSpec::Prcs { mu: 0.27 }, 12)?;
    let prcs_b = run(StateSpec::Prcs { mu: 0.62 }, 13)?;

    let sigma0 = estimate_sigma0(&vacuum);
    let conv_hat = QuadratureConvention::new(sigma0)?;
    let pd = |recs: &[DetectorRecord]| -> homodyne::Result<Density1D> {
        let d: Vec<f64> = recs.iter().map(|r| r.d()).collect();
        estimate_density_1d(&d, default_quadrature_axis(sigma0))
    };
    let pd_a = pd(&prcs_a)?;
    let pd_b = pd(&prcs_b)?;

    // calibrate the mean photon numbers from the data itself
    let mu_a = fit_mu_detailed(&pd_a, &conv_hat).mu;
    let mu_b = fit_mu_detailed(&pd_b, &conv_hat).mu;
    println!("fitted mu = {mu_a:.4}, {mu_b:.4} (simulated 0.27, 0.62)");

    let m_axis = default_m_axis(sigma0);
    let eps = 0.02 * sigma0 * sigma0;
    let w0 = |p: &Density1D| -> homodyne::Result<StatObject> {
        let (sym, _) = p.symmetrized()?;
        Ok(StatObject::Correlation(reconstruct_w0(&sym, sigma0, m_axis, eps)?))
    };
    let inv = invert_two_mu(&w0(&pd(&vacuum)?)?, &w0(&pd_a)?, &w0(&pd_b)?, mu_a, mu_b)?;
    println!(
        "inverted masses: Fock 1 -> {:.4}, Fock 2 -> {:.4}",
        inv.total_mass_l1,
        inv.total_mass_l2.unwrap()
    );

    let w1 = theoretical_w0(&StateSpec::Fock { n: 1 }, m_axis, eps, &conv_hat)?;
    let w2 = theoretical_w0(&StateSpec::Fock { n: 2 }, m_axis, eps, &conv_hat)?;
    if let (StatObject::Correlation(l1), Some(StatObject::Correlation(l2))) =
        (&inv.l1, inv.l2.as_ref())
    {
        println!("overlap with theory: D(Fock 1) = {:.4}", overlap_1d(l1, &w1)?);
        println!("overlap with theory: D(Fock 2) = {:.4}", overlap_1d(l2, &w2)?);
    }
    Ok(())
}

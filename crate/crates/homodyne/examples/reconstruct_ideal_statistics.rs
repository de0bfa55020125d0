//! Reconstruct the statistics an ideal (shot-noise-limited) local
//! oscillator would have produced from records taken with a 26 dB noisy
//! LO: the joint detector map and the photocurrent-product density w0(M).

use homodyne::sim::{simulate, LoModel, SimulationConfig};
use homodyne::states::{QuadratureConvention, StateSpec};
use homodyne::stats::{
    correlation_mean, default_joint_axis, default_m_axis, default_quadrature_axis,
    estimate_density_1d, estimate_sigma0, reconstruct_joint_ideal, reconstruct_w0,
};

fn main() -> homodyne::Result<()> {
    let conv = QuadratureConvention::default();
    let lo = LoModel::new(conv, 26.0)?;
    let mu = 0.25;

    // vacuum set calibrates the shot noise; the PRCS set is the signal
    let vacuum = simulate(&SimulationConfig {
        state: StateSpec::Vacuum,
        lo,
        n_samples: 1_000_000,
        seed: 1,
    })?;
    let prcs = simulate(&SimulationConfig {
        state: StateSpec::Prcs { mu },
        lo,
        n_samples: 1_000_000,
        seed: 2,
    })?;
    let sigma0 = estimate_sigma0(&vacuum);
    println!("estimated sigma0 = {sigma0:.5}");

    // quadrature density from the difference current only
    let d: Vec<f64> = prcs.iter().map(|r| r.d()).collect();
    let p_d = estimate_density_1d(&d, default_quadrature_axis(sigma0))?;
    println!("P_D mass = {:.6}, overflow = {}", p_d.mass(), p_d.overflow_count);

    // ideal-LO joint map P0(x, y)
    let g = default_joint_axis(sigma0);
    let joint = reconstruct_joint_ideal(&p_d, sigma0, g, g)?;
    println!("ideal joint map mass = {:.4}", joint.mass());

    // ideal-LO correlation density w0(M)
    let (sym, asym) = p_d.symmetrized()?;
    println!("antisymmetric part of P_D: {asym:.2e} (statistical)");
    let w0 = reconstruct_w0(&sym, sigma0, default_m_axis(sigma0), 0.02 * sigma0 * sigma0)?;
    println!(
        "w0 covered mass = {:.4}, excluded-window mass = {:.4}",
        w0.covered_mass(),
        w0.excluded_mass
    );
    println!(
        "<M> = {:.4} (theory -mu sigma0^2/2 = {:.4})",
        correlation_mean(&w0),
        -mu * sigma0 * sigma0 / 2.0
    );
    Ok(())
}

//! Apply the Vogel characteristic-function criterion to classical and
//! nonclassical quadrature densities: |Phi(k)| exceeding the vacuum
//! Gaussian at any frequency certifies nonclassicality.

use homodyne::density::Density1D;
use homodyne::grid::Grid1D;
use homodyne::invert::vogel_criterion;
use homodyne::states::{quadrature_density, QuadratureConvention, StateSpec};

fn main() -> homodyne::Result<()> {
    let conv = QuadratureConvention::default();
    // a wide fine axis keeps tail truncation below the analytic threshold
    let axis = Grid1D::new(-12.0, 12.0, 960)?;
    let cases = [
        ("vacuum", StateSpec::Vacuum),
        ("coherent a=1.5", StateSpec::Coherent { amplitude: 1.5, phase: 0.4 }),
        ("PRCS mu=0.62", StateSpec::Prcs { mu: 0.62 }),
        ("Fock 1", StateSpec::Fock { n: 1 }),
        ("Fock 2", StateSpec::Fock { n: 2 }),
        ("Fock 5", StateSpec::Fock { n: 5 }),
    ];
    println!("{:<16} {:>13} {:>8} {:>9}", "state", "max excess", "at k", "verdict");
    for (label, state) in cases {
        let p = Density1D::from_fn(axis, |x| {
            quadrature_density(&state, x, &conv).unwrap_or(0.0)
        });
        let v = vogel_criterion(&p, conv.sigma0);
        println!(
            "{label:<16} {:>13.3e} {:>8.3} {:>9}",
            v.max_excess,
            v.k_at_max,
            if v.nonclassical { "FIRES" } else { "silent" }
        );
    }
    println!("\nonly the Fock states exceed the vacuum envelope: phase-randomized");
    println!("coherent states are classical mixtures and stay below it");
    Ok(())
}

//! Analytic signal-state models: quadrature probability densities for
//! vacuum, Fock, coherent and phase-randomized coherent states, Poisson
//! mixture weights, and the theory curves for the correlation density.

use serde::{Deserialize, Serialize};

use crate::density::CorrelationDensity;
use crate::grid::Grid1D;
use crate::{stats, Error, Result};

/// Largest Fock index supported by the analytic models.
pub const N_MAX: u32 = 20;

/// Number of nodes of the periodic trapezoid rule used for the PRCS
/// phase integral (spectrally accurate for the smooth periodic integrand).
const PHASE_NODES: usize = 256;

/// Poisson tail above which the truncated Fock-sum route refuses to answer.
const POISSON_TAIL_LIMIT: f64 = 1e-9;

/// Unit convention for quadrature data: the shot-noise standard deviation
/// of the difference photocurrent for vacuum input. Canonical choice is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConvention {
    pub sigma0: f64,
}

impl Default for QuadratureConvention {
    fn default() -> Self {
        QuadratureConvention { sigma0: 1.0 }
    }
}

impl QuadratureConvention {
    pub fn new(sigma0: f64) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma0 must be > 0, got {sigma0}")));
        }
        Ok(QuadratureConvention { sigma0 })
    }
}

/// Which signal state enters the homodyne detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Vacuum,
    Fock { n: u32 },
    Coherent { amplitude: f64, phase: f64 },
    /// Phase-randomized coherent state with mean photon number `mu`.
    Prcs { mu: f64 },
}

impl StateSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StateSpec::Vacuum => Ok(()),
            StateSpec::Fock { n } if n <= N_MAX => Ok(()),
            StateSpec::Fock { n } => Err(Error::Truncation(format!(
                "Fock n = {n} exceeds N_MAX = {N_MAX}"
            ))),
            StateSpec::Coherent { amplitude, .. } if amplitude >= 0.0 => Ok(()),
            StateSpec::Coherent { amplitude, .. } => Err(Error::InvalidState(format!(
                "coherent amplitude must be >= 0, got {amplitude}"
            ))),
            StateSpec::Prcs { mu } if mu >= 0.0 => Ok(()),
            StateSpec::Prcs { mu } => {
                Err(Error::InvalidState(format!("PRCS mu must be >= 0, got {mu}")))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Hermite functions
// ---------------------------------------------------------------------------

/// Normalized harmonic-oscillator eigenfunction phi_n(u), with
/// ∫ phi_n^2 du = 1. Stable three-term recurrence on the *normalized*
/// functions, so no overflow up to N_MAX.
pub fn hermite_function(n: u32, u: f64) -> f64 {
    let phi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * u * u).exp();
    if n == 0 {
        return phi0;
    }
    let mut prev = phi0;
    let mut cur = std::f64::consts::SQRT_2 * u * phi0;
    for k in 2..=n as u64 {
        let next =
            (2.0 / k as f64).sqrt() * u * cur - ((k - 1) as f64 / k as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Quadrature density of the Fock state |n> in canonical units
/// (vacuum is N(0,1)): |psi_n(x)|^2 with psi_n(x) = phi_n(x/√2)/2^{1/4}.
pub fn fock_density(n: u32, x: f64) -> f64 {
    let u = x / std::f64::consts::SQRT_2;
    let phi = hermite_function(n, u);
    phi * phi / std::f64::consts::SQRT_2
}

fn normal_density(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    (-(z * z) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

// ---------------------------------------------------------------------------
// Poisson mixture
// ---------------------------------------------------------------------------

/// Poisson weights w_n = e^{-mu} mu^n / n! for n = 0..=n_max, plus the
/// truncation tail 1 - sum(w).
pub fn poisson_weights(mu: f64, n_max: u32) -> Result<(Vec<f64>, f64)> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("mu must be >= 0, got {mu}")));
    }
    let mut w = Vec::with_capacity(n_max as usize + 1);
    let mut term = (-mu).exp();
    w.push(term);
    for n in 1..=n_max as u64 {
        term *= mu / n as f64;
        w.push(term);
    }
    let tail = (1.0 - w.iter().sum::<f64>()).max(0.0);
    Ok((w, tail))
}

/// PRCS quadrature density as the phase integral of Eq-style coherent
/// densities: (1/2π) ∫ N(x; 2√mu cos φ, 1) dφ, canonical units.
pub fn prcs_density_phase(mu: f64, x: f64) -> f64 {
    let a = 2.0 * mu.sqrt();
    let mut acc = 0.0;
    for j in 0..PHASE_NODES {
        let phi = 2.0 * std::f64::consts::PI * j as f64 / PHASE_NODES as f64;
        acc += normal_density(x, a * phi.cos(), 1.0);
    }
    acc / PHASE_NODES as f64
}

/// PRCS quadrature density as the truncated Poisson-weighted Fock sum.
/// Refuses when the truncation tail would exceed 1e-9.
pub fn prcs_density_poisson(mu: f64, x: f64, n_max: u32) -> Result<f64> {
    let (w, tail) = poisson_weights(mu, n_max)?;
    if tail > POISSON_TAIL_LIMIT {
        return Err(Error::Truncation(format!(
            "Poisson tail {tail:.3e} above {POISSON_TAIL_LIMIT:.0e} for mu = {mu}, n_max = {n_max}"
        )));
    }
    Ok(w.iter()
        .enumerate()
        .map(|(n, &wn)| wn * fock_density(n as u32, x))
        .sum())
}

// ---------------------------------------------------------------------------
// Quadrature density dispatch
// ---------------------------------------------------------------------------

/// Probability density of the difference photocurrent (the signal
/// quadrature) for the given state, at `x` in the given unit convention.
pub fn quadrature_density(state: &StateSpec, x: f64, conv: &QuadratureConvention) -> Result<f64> {
    state.validate()?;
    if !x.is_finite() {
        return Err(Error::InvalidArgument("x must be finite".into()));
    }
    let s = conv.sigma0;
    let xc = x / s;
    let d = match *state {
        StateSpec::Vacuum => normal_density(xc, 0.0, 1.0),
        StateSpec::Fock { n } => fock_density(n, xc),
        StateSpec::Coherent { amplitude, phase } => {
            normal_density(xc, 2.0 * amplitude * phase.cos(), 1.0)
        }
        StateSpec::Prcs { mu } => prcs_density_phase(mu, xc),
    };
    Ok(d / s)
}

// ---------------------------------------------------------------------------
// Theory curves for the correlation density
// ---------------------------------------------------------------------------

/// Ideal-LO correlation density w0(M) for an analytic state, evaluated by
/// the same singular quadrature as the empirical reconstruction path but
/// with the closed-form quadrature density. The grid must exclude M = 0.
pub fn theoretical_w0(
    state: &StateSpec,
    m_axis: Grid1D,
    epsilon0: f64,
    conv: &QuadratureConvention,
) -> Result<CorrelationDensity> {
    state.validate()?;
    if epsilon0 <= 0.0 {
        return Err(Error::InvalidArgument(
            "m-grid must exclude M = 0 (epsilon0 > 0)".into(),
        ));
    }
    let s = conv.sigma0;
    let pd = |x: f64| quadrature_density(state, x, conv).unwrap_or(0.0);
    let mut values = vec![0.0; m_axis.n_bins];
    for i in 0..m_axis.n_bins {
        let m = m_axis.center(i);
        if m.abs() < epsilon0 {
            continue;
        }
        values[i] = stats::w0_point(&pd, s, m)?;
    }
    let mut cd = CorrelationDensity::from_values(
        m_axis,
        epsilon0,
        values,
        crate::density::Provenance::Analytic,
    )?;
    cd.sample_count = None;
    Ok(cd)
}

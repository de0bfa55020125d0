//! Fock-state statistics from PRCS measurements: the single-mu and two-mu
//! inversion formulas, the mu calibration fit, overlap figures of merit,
//! and the Vogel nonclassicality criterion.

use serde::{Deserialize, Serialize};

use crate::density::{CorrelationDensity, Density1D, Density2D, Provenance};
use crate::numerics::golden_section_min;
use crate::states::{prcs_density_phase, QuadratureConvention};
use crate::{Error, Result};

/// Any of the three statistic kinds the inversion formulas act on.
/// All operands of one inversion must share identical grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatObject {
    Density1D(Density1D),
    Density2D(Density2D),
    Correlation(CorrelationDensity),
}

impl StatObject {
    fn same_grid(&self, other: &StatObject) -> bool {
        match (self, other) {
            (StatObject::Density1D(a), StatObject::Density1D(b)) => a.axis.same_as(&b.axis),
            (StatObject::Density2D(a), StatObject::Density2D(b)) => a.same_axes(b),
            (StatObject::Correlation(a), StatObject::Correlation(b)) => {
                a.m_axis.same_as(&b.m_axis) && a.epsilon0 == b.epsilon0
            }
            _ => false,
        }
    }

    /// Pointwise affine combination sum(c_i * obj_i). Negative outputs are
    /// kept; they are estimator noise, not clipped.
    pub fn affine(terms: &[(f64, &StatObject)]) -> Result<StatObject> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty combination".into()))?
            .1;
        for (_, t) in terms {
            if !first.same_grid(t) {
                return Err(Error::GridMismatch(
                    "inversion operands must share identical grids".into(),
                ));
            }
        }
        Ok(match first {
            StatObject::Density1D(proto) => {
                let mut values = vec![0.0; proto.values.len()];
                for (c, t) in terms {
                    if let StatObject::Density1D(d) = t {
                        for (v, x) in values.iter_mut().zip(&d.values) {
                            *v += c * x;
                        }
                    }
                }
                let mut out = Density1D::from_values(proto.axis, values, Provenance::Inverted)?;
                out.sample_count = proto.sample_count;
                StatObject::Density1D(out)
            }
            StatObject::Density2D(proto) => {
                let mut values = vec![vec![0.0; proto.x_axis.n_bins]; proto.y_axis.n_bins];
                for (c, t) in terms {
                    if let StatObject::Density2D(d) = t {
                        for (row, drow) in values.iter_mut().zip(&d.values) {
                            for (v, x) in row.iter_mut().zip(drow) {
                                *v += c * x;
                            }
                        }
                    }
                }
                let mut out = Density2D::from_values(
                    proto.x_axis,
                    proto.y_axis,
                    values,
                    Provenance::Inverted,
                )?;
                out.sample_count = proto.sample_count;
                StatObject::Density2D(out)
            }
            StatObject::Correlation(proto) => {
                let mut values = vec![0.0; proto.values.len()];
                for (c, t) in terms {
                    if let StatObject::Correlation(d) = t {
                        for (v, x) in values.iter_mut().zip(&d.values) {
                            *v += c * x;
                        }
                    }
                }
                let mut out = CorrelationDensity::from_values(
                    proto.m_axis,
                    proto.epsilon0,
                    values,
                    Provenance::Inverted,
                )?;
                out.sample_count = proto.sample_count;
                StatObject::Correlation(out)
            }
        })
    }

    /// Mass diagnostic: inversion outputs are only approximately normalized.
    pub fn mass(&self) -> f64 {
        match self {
            StatObject::Density1D(d) => d.mass(),
            StatObject::Density2D(d) => d.mass(),
            StatObject::Correlation(d) => d.total_mass_with_excluded(),
        }
    }
}

/// Output of a Fock inversion, with normalization diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InversionResult {
    pub l1: StatObject,
    pub l2: Option<StatObject>,
    pub mus_used: Vec<f64>,
    pub total_mass_l1: f64,
    pub total_mass_l2: Option<f64>,
}

/// Single-mu approximation to the Fock-1 statistic:
/// L1 ≈ (e^mu L(rho_mu) - L0) / mu.
pub fn invert_single_mu(l0: &StatObject, l_mu: &StatObject, mu: f64) -> Result<InversionResult> {
    if mu <= 0.0 {
        return Err(Error::InvalidArgument(format!("mu must be > 0, got {mu}")));
    }
    let l1 = StatObject::affine(&[(mu.exp() / mu, l_mu), (-1.0 / mu, l0)])?;
    let total_mass_l1 = l1.mass();
    Ok(InversionResult {
        l1,
        l2: None,
        mus_used: vec![mu],
        total_mass_l1,
        total_mass_l2: None,
    })
}

/// Two-mu inversion giving the Fock-1 and Fock-2 statistics together:
/// with A_i = e^{mu_i} L(rho_{mu_i}) - L0 and
/// Delta = (mu_1 mu_2^2 - mu_2 mu_1^2)/2,
/// L1 = (A1 mu2^2 - A2 mu1^2) / 2 Delta, L2 = (A2 mu1 - A1 mu2) / Delta.
pub fn invert_two_mu(
    l0: &StatObject,
    l_mu1: &StatObject,
    l_mu2: &StatObject,
    mu1: f64,
    mu2: f64,
) -> Result<InversionResult> {
    if mu1 <= 0.0 || mu2 <= 0.0 {
        return Err(Error::InvalidArgument("both mu must be > 0".into()));
    }
    let delta = 0.5 * (mu1 * mu2 * mu2 - mu2 * mu1 * mu1);
    if delta.abs() < 1e-6 * mu1.max(mu2).powi(3) {
        return Err(Error::IllConditioned(format!(
            "mu pair ({mu1}, {mu2}) gives near-singular Delta = {delta:.3e}"
        )));
    }
    // A_i expressed directly as combinations of the inputs
    let (e1, e2) = (mu1.exp(), mu2.exp());
    let l1 = StatObject::affine(&[
        (e1 * mu2 * mu2 / (2.0 * delta), l_mu1),
        (-e2 * mu1 * mu1 / (2.0 * delta), l_mu2),
        ((mu1 * mu1 - mu2 * mu2) / (2.0 * delta), l0),
    ])?;
    let l2 = StatObject::affine(&[
        (e2 * mu1 / delta, l_mu2),
        (-e1 * mu2 / delta, l_mu1),
        ((mu2 - mu1) / delta, l0),
    ])?;
    let total_mass_l1 = l1.mass();
    let total_mass_l2 = l2.mass();
    Ok(InversionResult {
        l1,
        l2: Some(l2),
        mus_used: vec![mu1, mu2],
        total_mass_l1,
        total_mass_l2: Some(total_mass_l2),
    })
}

// ---------------------------------------------------------------------------
// mu calibration
// ---------------------------------------------------------------------------

/// Result of fitting mu to a difference-current histogram.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MuFit {
    pub mu: f64,
    /// Squared L2 residual of the best fit.
    pub residual: f64,
    /// Expected residual from counting statistics alone.
    pub noise_floor: f64,
    /// True when the residual exceeds 5x the noise floor.
    pub model_mismatch: bool,
}

/// Fit the PRCS mean photon number by least squares between the empirical
/// quadrature density and the analytic PRCS density, golden-section search
/// on mu in [0, 10].
pub fn fit_mu_detailed(d_marginal: &Density1D, conv: &QuadratureConvention) -> MuFit {
    let s = conv.sigma0;
    let centers = d_marginal.axis.centers();
    let objective = |mu: f64| -> f64 {
        centers
            .iter()
            .zip(&d_marginal.values)
            .map(|(&x, &p)| {
                let model = prcs_density_phase(mu, x / s) / s;
                (p - model).powi(2)
            })
            .sum()
    };
    let mu = golden_section_min(objective, 0.0, 10.0, 1e-4).max(0.0);
    let residual = objective(mu);
    let noise_floor = match d_marginal.sample_count {
        Some(n) if n > 0 => {
            let dx = d_marginal.axis.dx();
            d_marginal
                .values
                .iter()
                .map(|&p| p.max(0.0) / (n as f64 * dx))
                .sum()
        }
        _ => 0.0,
    };
    let model_mismatch = noise_floor > 0.0 && residual > 5.0 * noise_floor;
    if model_mismatch {
        log::warn!(
            "fit_mu: residual {residual:.3e} exceeds 5x the statistical floor {noise_floor:.3e}"
        );
    }
    MuFit {
        mu,
        residual,
        noise_floor,
        model_mismatch,
    }
}

/// Best-fit PRCS mean photon number.
pub fn fit_mu(d_marginal: &Density1D, conv: &QuadratureConvention) -> f64 {
    fit_mu_detailed(d_marginal, conv).mu
}

// ---------------------------------------------------------------------------
// Overlap figures of merit
// ---------------------------------------------------------------------------

/// Normalized cross-correlation C of two 2D maps on a common grid.
pub fn overlap_2d(p: &Density2D, p_th: &Density2D) -> Result<f64> {
    if !p.same_axes(p_th) {
        return Err(Error::GridMismatch("overlap_2d needs matching grids".into()));
    }
    let mut pq = 0.0;
    let mut pp = 0.0;
    let mut qq = 0.0;
    for (ra, rb) in p.values.iter().zip(&p_th.values) {
        for (&a, &b) in ra.iter().zip(rb) {
            pq += a * b;
            pp += a * a;
            qq += b * b;
        }
    }
    if pp == 0.0 || qq == 0.0 {
        return Err(Error::InvalidArgument("overlap of an all-zero map".into()));
    }
    Ok(pq / (pp * qq).sqrt())
}

/// Normalized cross-correlation D of two correlation densities; the
/// exclusion window is left out of all three integrals.
pub fn overlap_1d(w: &CorrelationDensity, w_th: &CorrelationDensity) -> Result<f64> {
    if !w.m_axis.same_as(&w_th.m_axis) || w.epsilon0 != w_th.epsilon0 {
        return Err(Error::GridMismatch("overlap_1d needs matching M-grids".into()));
    }
    let mut pq = 0.0;
    let mut pp = 0.0;
    let mut qq = 0.0;
    for i in 0..w.m_axis.n_bins {
        if w.is_excluded(i) {
            continue;
        }
        let (a, b) = (w.values[i], w_th.values[i]);
        pq += a * b;
        pp += a * a;
        qq += b * b;
    }
    if pp == 0.0 || qq == 0.0 {
        return Err(Error::InvalidArgument("overlap of an all-zero density".into()));
    }
    Ok(pq / (pp * qq).sqrt())
}

// ---------------------------------------------------------------------------
// Vogel criterion
// ---------------------------------------------------------------------------

/// Number of characteristic-function evaluation points.
const VOGEL_K_POINTS: usize = 256;
/// Largest frequency, in units of 1/sigma0.
const VOGEL_K_MAX: f64 = 6.0;
/// Excess floor for noise-free (analytic) inputs.
const VOGEL_ANALYTIC_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VogelResult {
    pub nonclassical: bool,
    /// Largest value of |Phi(k)| - Phi_vac(k) over the k-grid.
    pub max_excess: f64,
    /// Frequency at which the maximum excess occurs.
    pub k_at_max: f64,
}

/// Vogel nonclassicality criterion: the state is nonclassical when the
/// magnitude of the characteristic function of its quadrature density
/// exceeds the vacuum Gaussian e^{-sigma0^2 k^2/2} at some frequency.
/// The decision threshold is 5x the per-k statistical uncertainty
/// sqrt((1-|Phi|^2)/N) for empirical inputs, or a small floor for
/// analytic ones. The characteristic function is a direct summation over
/// the histogram bins.
pub fn vogel_criterion(p_d: &Density1D, sigma0: f64) -> VogelResult {
    let dx = p_d.axis.dx();
    let centers = p_d.axis.centers();
    let mut max_excess = f64::NEG_INFINITY;
    let mut k_at_max = 0.0;
    let mut nonclassical = false;
    for ik in 0..VOGEL_K_POINTS {
        let k = VOGEL_K_MAX / sigma0 * ik as f64 / (VOGEL_K_POINTS - 1) as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for (&x, &p) in centers.iter().zip(&p_d.values) {
            let (s, c) = (k * x).sin_cos();
            re += p * c;
            im += p * s;
        }
        let phi = (re * re + im * im).sqrt() * dx;
        let phi_vac = (-0.5 * sigma0 * sigma0 * k * k).exp();
        let excess = phi - phi_vac;
        let threshold = match p_d.sample_count {
            Some(n) if n > 0 => {
                5.0 * (((1.0 - (phi * phi).min(1.0)) / n as f64).sqrt()).max(VOGEL_ANALYTIC_FLOOR)
            }
            _ => VOGEL_ANALYTIC_FLOOR,
        };
        if excess > threshold {
            nonclassical = true;
        }
        if excess > max_excess {
            max_excess = excess;
            k_at_max = k;
        }
    }
    VogelResult {
        nonclassical,
        max_excess,
        k_at_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::sim::{simulate, LoModel, SimulationConfig};
    use crate::states::{fock_density, poisson_weights, StateSpec};
    use crate::stats::{default_quadrature_axis, estimate_density_1d};

    fn conv() -> QuadratureConvention {
        QuadratureConvention::default()
    }

    fn analytic_1d(f: impl Fn(f64) -> f64) -> StatObject {
        let axis = Grid1D::new(-8.0, 8.0, 320).unwrap();
        StatObject::Density1D(Density1D::from_fn(axis, f))
    }

    /// Truncated Poisson-mixture statistic with occupation only up to n_cut.
    fn truncated_mixture(mu: f64, n_cut: u32) -> StatObject {
        let (w, _) = poisson_weights(mu, n_cut).unwrap();
        analytic_1d(|x| {
            w.iter()
                .enumerate()
                .map(|(n, &wn)| wn * fock_density(n as u32, x))
                .sum()
        })
    }

    fn values_of(s: &StatObject) -> &[f64] {
        match s {
            StatObject::Density1D(d) => &d.values,
            _ => panic!("expected 1D"),
        }
    }

    #[test]
    fn single_mu_exact_on_n1_truncated_input() {
        let l0 = analytic_1d(|x| fock_density(0, x));
        let mu = 0.37;
        let lmu = truncated_mixture(mu, 1);
        let res = invert_single_mu(&l0, &lmu, mu).unwrap();
        let p1 = analytic_1d(|x| fock_density(1, x));
        for (a, b) in values_of(&res.l1).iter().zip(values_of(&p1)) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn two_mu_exact_on_n2_truncated_input() {
        let l0 = analytic_1d(|x| fock_density(0, x));
        let (mu1, mu2) = (0.27, 0.62);
        let lmu1 = truncated_mixture(mu1, 2);
        let lmu2 = truncated_mixture(mu2, 2);
        let res = invert_two_mu(&l0, &lmu1, &lmu2, mu1, mu2).unwrap();
        let p1 = analytic_1d(|x| fock_density(1, x));
        let p2 = analytic_1d(|x| fock_density(2, x));
        for (a, b) in values_of(&res.l1).iter().zip(values_of(&p1)) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        for (a, b) in values_of(res.l2.as_ref().unwrap()).iter().zip(values_of(&p2)) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn two_mu_symmetric_under_swap() {
        let l0 = analytic_1d(|x| fock_density(0, x));
        let lmu1 = truncated_mixture(0.27, 5);
        let lmu2 = truncated_mixture(0.62, 5);
        let a = invert_two_mu(&l0, &lmu1, &lmu2, 0.27, 0.62).unwrap();
        let b = invert_two_mu(&l0, &lmu2, &lmu1, 0.62, 0.27).unwrap();
        for (x, y) in values_of(&a.l1).iter().zip(values_of(&b.l1)) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in values_of(a.l2.as_ref().unwrap())
            .iter()
            .zip(values_of(b.l2.as_ref().unwrap()))
        {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn two_mu_rejects_degenerate_pair() {
        let l0 = analytic_1d(|x| fock_density(0, x));
        let lmu = truncated_mixture(0.3, 2);
        assert!(matches!(
            invert_two_mu(&l0, &lmu, &lmu, 0.3, 0.3),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn single_mu_residual_bounded_by_poisson_tail() {
        // analytic inputs at mu = 0.25: L1 = P1 + (mu/2) P2 + ...
        let mu = 0.25;
        let l0 = analytic_1d(|x| fock_density(0, x));
        let lmu = truncated_mixture(mu, 20);
        let res = invert_single_mu(&l0, &lmu, mu).unwrap();
        let p1 = analytic_1d(|x| fock_density(1, x));
        let dx = 16.0 / 320.0;
        let l1_dist: f64 = values_of(&res.l1)
            .iter()
            .zip(values_of(&p1))
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * dx;
        assert!(l1_dist < 0.16, "L1 distance = {l1_dist}");
        assert!(l1_dist > 0.01, "contamination should be visible");
    }

    #[test]
    fn inversion_is_linear() {
        let a = truncated_mixture(0.3, 4);
        let b = truncated_mixture(0.8, 4);
        let l0 = analytic_1d(|x| fock_density(0, x));
        let combo = StatObject::affine(&[(0.4, &a), (0.6, &b)]).unwrap();
        let inv_combo = invert_single_mu(&l0, &combo, 0.5).unwrap();
        let inv_a = invert_single_mu(&l0, &a, 0.5).unwrap();
        let inv_b = invert_single_mu(&l0, &b, 0.5).unwrap();
        // note both sides share the same -L0/mu offset only once; linearity
        // holds for the L(rho) argument with the vacuum term accounted for:
        // (e^mu (0.4a+0.6b) - l0)/mu = 0.4(e^mu a - l0)/mu + 0.6(e^mu b - l0)/mu
        for i in 0..320 {
            let lhs = values_of(&inv_combo.l1)[i];
            let rhs = 0.4 * values_of(&inv_a.l1)[i] + 0.6 * values_of(&inv_b.l1)[i];
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn overlap_identities() {
        let p1 = analytic_1d(|x| fock_density(1, x));
        let g = Grid1D::new(-6.0, 6.0, 160).unwrap();
        let axis = Grid1D::new(-8.0, 8.0, 320).unwrap();
        let p = Density1D::from_fn(axis, |x| fock_density(1, x));
        let map = crate::stats::reconstruct_joint_ideal(&p, 1.0, g, g).unwrap();
        let c = overlap_2d(&map, &map).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        let _ = p1;
    }

    #[test]
    fn fock1_vs_vacuum_joint_maps_distinguishable() {
        let g = Grid1D::new(-6.0, 6.0, 160).unwrap();
        let axis = Grid1D::new(-8.0, 8.0, 320).unwrap();
        let p1 = Density1D::from_fn(axis, |x| fock_density(1, x));
        let p0 = Density1D::from_fn(axis, |x| fock_density(0, x));
        let m1 = crate::stats::reconstruct_joint_ideal(&p1, 1.0, g, g).unwrap();
        let m0 = crate::stats::reconstruct_joint_ideal(&p0, 1.0, g, g).unwrap();
        let c = overlap_2d(&m1, &m0).unwrap();
        assert!(c < 0.9, "C = {c}");
    }

    #[test]
    fn fit_mu_recovers_simulated_values() {
        for (mu_true, lo_expect, hi_expect) in
            [(0.25, 0.245, 0.255), (0.62, 0.61, 0.63)]
        {
            let recs = simulate(&SimulationConfig {
                state: StateSpec::Prcs { mu: mu_true },
                lo: LoModel::new(conv(), 26.0).unwrap(),
                n_samples: 1_000_000,
                seed: 31,
            })
            .unwrap();
            let d: Vec<f64> = recs.iter().map(|r| r.d()).collect();
            let p = estimate_density_1d(&d, default_quadrature_axis(1.0)).unwrap();
            let fit = fit_mu_detailed(&p, &conv());
            assert!(
                fit.mu >= lo_expect && fit.mu <= hi_expect,
                "mu_true = {mu_true}, fitted = {}",
                fit.mu
            );
            assert!(!fit.model_mismatch);
        }
    }

    #[test]
    fn fit_mu_vacuum_limit() {
        let recs = simulate(&SimulationConfig {
            state: StateSpec::Vacuum,
            lo: LoModel::new(conv(), 26.0).unwrap(),
            n_samples: 1_000_000,
            seed: 33,
        })
        .unwrap();
        let d: Vec<f64> = recs.iter().map(|r| r.d()).collect();
        let p = estimate_density_1d(&d, default_quadrature_axis(1.0)).unwrap();
        let mu = fit_mu(&p, &conv());
        assert!(mu < 0.005, "mu = {mu}");
    }

    #[test]
    fn vogel_fires_on_fock_states_only() {
        let axis = Grid1D::new(-12.0, 12.0, 960).unwrap();
        let fire = [
            Density1D::from_fn(axis, |x| fock_density(1, x)),
            Density1D::from_fn(axis, |x| fock_density(2, x)),
        ];
        for p in &fire {
            let v = vogel_criterion(p, 1.0);
            assert!(v.nonclassical, "should fire: excess {}", v.max_excess);
        }
        let silent = [
            Density1D::from_fn(axis, |x| fock_density(0, x)),
            Density1D::from_fn(axis, |x| {
                crate::states::quadrature_density(
                    &StateSpec::Coherent { amplitude: 5.0f64.sqrt(), phase: 0.3 },
                    x,
                    &conv(),
                )
                .unwrap()
            }),
            Density1D::from_fn(axis, |x| prcs_density_phase(0.62, x)),
            Density1D::from_fn(axis, |x| prcs_density_phase(5.0, x)),
        ];
        for p in &silent {
            let v = vogel_criterion(p, 1.0);
            assert!(
                !v.nonclassical,
                "should stay silent: excess {} at k {}",
                v.max_excess, v.k_at_max
            );
        }
    }

    #[test]
    fn vogel_matches_fock1_closed_form() {
        // |Phi_1(k)| = |1 - k^2| e^{-k^2/2}
        let axis = Grid1D::new(-12.0, 12.0, 960).unwrap();
        let p = Density1D::from_fn(axis, |x| fock_density(1, x));
        let dx = axis.dx();
        for k in [0.5, 1.5, 2.0, 3.0] {
            let mut re = 0.0;
            let mut im = 0.0;
            for (x, v) in axis.centers().iter().zip(&p.values) {
                re += v * (k * x).cos();
                im += v * (k * x).sin();
            }
            let phi = (re * re + im * im).sqrt() * dx;
            let expect = (1.0 - k * k as f64).abs() * (-0.5 * k * k).exp();
            assert!((phi - expect).abs() < 1e-9, "k = {k}: {phi} vs {expect}");
        }
    }

    #[test]
    fn vogel_silent_on_empirical_vacuum() {
        let recs = simulate(&SimulationConfig {
            state: StateSpec::Vacuum,
            lo: LoModel::new(conv(), 26.0).unwrap(),
            n_samples: 1_000_000,
            seed: 35,
        })
        .unwrap();
        let d: Vec<f64> = recs.iter().map(|r| r.d()).collect();
        let p = estimate_density_1d(&d, default_quadrature_axis(1.0)).unwrap();
        let v = vogel_criterion(&p, crate::stats::estimate_sigma0(&recs));
        assert!(!v.nonclassical, "excess = {}", v.max_excess);
    }
}

//! Monte Carlo generation of detector-pair records for a chosen signal
//! state and local-oscillator noise model.
//!
//! The signal and LO draws come from decorrelated substreams of one
//! counter-based generator, so the difference-current samples for a given
//! seed are identical whatever the LO noise level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::states::{quadrature_density, QuadratureConvention, StateSpec};
use crate::{Error, Result};

const SIGNAL_STREAM: u64 = 0;
const LO_STREAM: u64 = 1;

/// Knot count of the tabulated inverse CDF used for Fock-state sampling.
const FOCK_TABLE_POINTS: usize = 1 << 14;

/// Local oscillator: shot-noise convention plus excess amplitude noise in
/// dB (power ratio of the sum-current variance to shot noise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoModel {
    pub conv: QuadratureConvention,
    pub excess_noise_db: f64,
}

impl LoModel {
    pub fn new(conv: QuadratureConvention, excess_noise_db: f64) -> Result<Self> {
        if !(excess_noise_db >= 0.0 && excess_noise_db.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "excess noise must be >= 0 dB, got {excess_noise_db}"
            )));
        }
        Ok(LoModel { conv, excess_noise_db })
    }

    /// Standard deviation of the sum current delta-S.
    pub fn sigma_s(&self) -> f64 {
        self.conv.sigma0 * 10f64.powf(self.excess_noise_db / 20.0)
    }
}

/// One paired measurement of the two photodetector fluctuation outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorRecord {
    pub i1: f64,
    pub i2: f64,
}

impl DetectorRecord {
    /// Difference current (the signal quadrature).
    pub fn d(&self) -> f64 {
        self.i1 - self.i2
    }

    /// Sum current (carries the LO noise).
    pub fn s(&self) -> f64 {
        self.i1 + self.i2
    }

    /// Product of the two outputs, M = dI1 * dI2.
    pub fn m(&self) -> f64 {
        self.i1 * self.i2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub state: StateSpec,
    pub lo: LoModel,
    pub n_samples: u64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.state.validate()?;
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mean photon number to assume when detectors have common efficiency eta:
/// a PRCS of mean mu seen by detectors of efficiency eta is indistinguishable
/// from a PRCS of mean mu/eta on ideal detectors.
pub fn effective_mu(mu: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eta must be in (0, 1], got {eta}"
        )));
    }
    Ok(mu / eta)
}

// ---------------------------------------------------------------------------
// Signal sampling
// ---------------------------------------------------------------------------

/// Marsaglia polar method; two uniforms per accepted pair, one value kept.
/// Box-Muller-family draw with no cached state so the stream layout stays
/// easy to reason about.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen::<f64>() * 2.0 - 1.0;
        let v: f64 = rng.gen::<f64>() * 2.0 - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Draws signal quadrature samples distributed per `quadrature_density`.
/// Fock states sample through a tabulated inverse CDF; the other states
/// are direct Gaussian draws.
pub struct SignalSampler {
    state: StateSpec,
    sigma0: f64,
    /// (x knots start, step, cdf at knots) for Fock states.
    fock_cdf: Option<(f64, f64, Vec<f64>)>,
}

impl SignalSampler {
    pub fn new(state: StateSpec, conv: QuadratureConvention) -> Result<Self> {
        state.validate()?;
        let fock_cdf = if let StateSpec::Fock { .. } = state {
            let lo = -12.0 * conv.sigma0;
            let hi = 12.0 * conv.sigma0;
            let n = FOCK_TABLE_POINTS;
            let dx = (hi - lo) / (n - 1) as f64;
            let dens: Vec<f64> = (0..n)
                .map(|i| quadrature_density(&state, lo + i as f64 * dx, &conv).unwrap())
                .collect();
            let mut cdf = vec![0.0; n];
            for i in 1..n {
                cdf[i] = cdf[i - 1] + 0.5 * (dens[i - 1] + dens[i]) * dx;
            }
            let total = cdf[n - 1];
            for c in cdf.iter_mut() {
                *c /= total;
            }
            Some((lo, dx, cdf))
        } else {
            None
        };
        Ok(SignalSampler {
            state,
            sigma0: conv.sigma0,
            fock_cdf,
        })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.state {
            StateSpec::Vacuum => self.sigma0 * standard_normal(rng),
            StateSpec::Coherent { amplitude, phase } => {
                self.sigma0 * (2.0 * amplitude * phase.cos() + standard_normal(rng))
            }
            StateSpec::Prcs { mu } => {
                let phi: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
                self.sigma0 * (2.0 * mu.sqrt() * phi.cos() + standard_normal(rng))
            }
            StateSpec::Fock { .. } => {
                let (x0, dx, cdf) = self.fock_cdf.as_ref().expect("table built in new()");
                let u: f64 = rng.gen();
                // binary search for the bracketing knot, then linear interp
                let i = match cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
                    Ok(i) => i,
                    Err(i) => i.saturating_sub(1).min(cdf.len() - 2),
                };
                let c0 = cdf[i];
                let c1 = cdf[i + 1];
                let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
                x0 + (i as f64 + frac.clamp(0.0, 1.0)) * dx
            }
        }
    }
}

/// One draw of the signal quadrature. Convenience wrapper; for bulk Fock
/// sampling build a [`SignalSampler`] once instead (the inverse-CDF table
/// is rebuilt on every call here).
pub fn sample_signal_quadrature<R: Rng>(
    state: &StateSpec,
    conv: &QuadratureConvention,
    rng: &mut R,
) -> Result<f64> {
    Ok(SignalSampler::new(*state, *conv)?.sample(rng))
}

/// Generate `n_samples` detector-pair records. Deterministic for a given
/// seed; the signal substream does not depend on the LO noise level.
pub fn simulate(config: &SimulationConfig) -> Result<Vec<DetectorRecord>> {
    config.validate()?;
    let conv = config.lo.conv;
    let sampler = SignalSampler::new(config.state, conv)?;
    let sigma_s = config.lo.sigma_s();

    let mut signal_rng = ChaCha8Rng::seed_from_u64(config.seed);
    signal_rng.set_stream(SIGNAL_STREAM);
    let mut lo_rng = ChaCha8Rng::seed_from_u64(config.seed);
    lo_rng.set_stream(LO_STREAM);

    let mut records = Vec::with_capacity(config.n_samples as usize);
    for _ in 0..config.n_samples {
        let d = sampler.sample(&mut signal_rng);
        let s = sigma_s * standard_normal(&mut lo_rng);
        records.push(DetectorRecord {
            i1: 0.5 * (s + d),
            i2: 0.5 * (s - d),
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;

    fn conv() -> QuadratureConvention {
        QuadratureConvention::default()
    }

    fn variance(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
    }

    fn cfg(state: StateSpec, db: f64, seed: u64) -> SimulationConfig {
        SimulationConfig {
            state,
            lo: LoModel::new(conv(), db).unwrap(),
            n_samples: 1_000_000,
            seed,
        }
    }

    #[test]
    fn vacuum_sample_variance() {
        let recs = simulate(&cfg(StateSpec::Vacuum, 0.0, 7)).unwrap();
        let d: Vec<f64> = recs.iter().map(|r| r.d()).collect();
        let v = variance(&d);
        assert!((v - 1.0).abs() < 0.005, "var = {v}");
    }

    #[test]
    fn prcs_sample_variance() {
        let recs = simulate(&cfg(StateSpec::Prcs { mu: 0.25 }, 0.0, 11)).unwrap();
        let d: Vec<f64> = recs.iter().map(|r| r.d()).collect();
        let v = variance(&d);
        assert!((v - 1.5).abs() < 0.015, "var = {v}");
    }

    #[test]
    fn ideal_lo_vacuum_outputs_uncorrelated() {
        let recs = simulate(&cfg(StateSpec::Vacuum, 0.0, 3)).unwrap();
        let n = recs.len() as f64;
        let m1 = recs.iter().map(|r| r.i1).sum::<f64>() / n;
        let m2 = recs.iter().map(|r| r.i2).sum::<f64>() / n;
        let cov = recs.iter().map(|r| (r.i1 - m1) * (r.i2 - m2)).sum::<f64>() / n;
        let v1 = recs.iter().map(|r| (r.i1 - m1).powi(2)).sum::<f64>() / n;
        let v2 = recs.iter().map(|r| (r.i2 - m2).powi(2)).sum::<f64>() / n;
        let corr = cov / (v1 * v2).sqrt();
        assert!(corr.abs() < 4.0 / n.sqrt(), "corr = {corr}");
    }

    #[test]
    fn excess_noise_ratio_26db() {
        let recs = simulate(&cfg(StateSpec::Vacuum, 26.0, 5)).unwrap();
        let s: Vec<f64> = recs.iter().map(|r| r.s()).collect();
        let d: Vec<f64> = recs.iter().map(|r| r.d()).collect();
        let ratio = variance(&s) / variance(&d);
        let target = 10f64.powf(2.6);
        assert!(
            (ratio / target - 1.0).abs() < 0.02,
            "ratio = {ratio}, target = {target}"
        );
    }

    #[test]
    fn determinism_same_seed() {
        let a = simulate(&cfg(StateSpec::Prcs { mu: 0.62 }, 26.0, 42)).unwrap();
        let b = simulate(&cfg(StateSpec::Prcs { mu: 0.62 }, 26.0, 42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn signal_stream_independent_of_lo_noise() {
        let quiet = simulate(&cfg(StateSpec::Prcs { mu: 0.25 }, 0.0, 9)).unwrap();
        let noisy = simulate(&cfg(StateSpec::Prcs { mu: 0.25 }, 26.0, 9)).unwrap();
        for (a, b) in quiet.iter().zip(noisy.iter()) {
            // difference current recovers the same signal draw up to rounding
            assert!((a.d() - b.d()).abs() < 1e-12);
        }
    }

    #[test]
    fn ds_pairs_uncorrelated() {
        let recs = simulate(&cfg(StateSpec::Prcs { mu: 0.62 }, 26.0, 17)).unwrap();
        let n = recs.len() as f64;
        let d: Vec<f64> = recs.iter().map(|r| r.d()).collect();
        let s: Vec<f64> = recs.iter().map(|r| r.s()).collect();
        let md = d.iter().sum::<f64>() / n;
        let ms = s.iter().sum::<f64>() / n;
        let cov = d
            .iter()
            .zip(&s)
            .map(|(a, b)| (a - md) * (b - ms))
            .sum::<f64>()
            / n;
        let corr = cov / (variance(&d) * variance(&s)).sqrt();
        assert!(corr.abs() < 4.0 / n.sqrt(), "corr = {corr}");
    }

    #[test]
    fn fock1_sampler_passes_ks() {
        let recs = simulate(&cfg(StateSpec::Fock { n: 1 }, 0.0, 23)).unwrap();
        let mut d: Vec<f64> = recs.iter().map(|r| r.d()).collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // analytic CDF by independent quadrature at each sorted sample,
        // evaluated on a fine grid then interpolated
        let grid: Vec<f64> = (0..=2400).map(|i| -6.0 + i as f64 * 0.005).collect();
        let mut cdf = vec![0.0; grid.len()];
        for i in 1..grid.len() {
            cdf[i] = cdf[i - 1]
                + integrate(
                    |x| crate::states::fock_density(1, x),
                    grid[i - 1],
                    grid[i],
                    1e-10,
                )
                .unwrap();
        }
        let n = d.len() as f64;
        let mut ks: f64 = 0.0;
        for (j, &x) in d.iter().enumerate() {
            let t = ((x + 6.0) / 0.005).clamp(0.0, 2400.0);
            let idx = (t as usize).min(2399);
            let frac = t - idx as f64;
            let f = cdf[idx] + frac * (cdf[idx + 1] - cdf[idx]);
            let emp_hi = (j + 1) as f64 / n;
            let emp_lo = j as f64 / n;
            ks = ks.max((emp_hi - f).abs()).max((emp_lo - f).abs());
        }
        assert!(ks < 2.0 / n.sqrt(), "KS = {ks}");
    }

    #[test]
    fn effective_mu_examples() {
        assert_eq!(effective_mu(0.25, 1.0).unwrap(), 0.25);
        assert_eq!(effective_mu(0.25, 0.5).unwrap(), 0.5);
        assert!((effective_mu(0.62, 0.8).unwrap() - 0.775).abs() < 1e-12);
        assert!(effective_mu(0.25, 0.0).is_err());
        assert!(effective_mu(0.25, 1.5).is_err());
    }
}

//! Binned probability-density estimates with explicit axis metadata.

use serde::{Deserialize, Serialize};

use crate::grid::Grid1D;
use crate::{Error, Result};

/// Where a density came from. Directly estimated densities are nonnegative;
/// inversion outputs may go negative and are kept that way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Empirical,
    Analytic,
    Reconstructed,
    Inverted,
}

/// A 1D density tabulated on a uniform grid (values are per unit x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density1D {
    pub axis: Grid1D,
    pub values: Vec<f64>,
    pub total_mass: f64,
    pub provenance: Provenance,
    /// Number of raw samples behind an empirical estimate, when known.
    pub sample_count: Option<u64>,
    /// Samples that fell outside the axis (empirical estimates only).
    pub overflow_count: u64,
}

impl Density1D {
    pub fn from_values(axis: Grid1D, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.len() != axis.n_bins {
            return Err(Error::GridMismatch(format!(
                "{} values for {} bins",
                values.len(),
                axis.n_bins
            )));
        }
        let total_mass = values.iter().sum::<f64>() * axis.dx();
        Ok(Density1D {
            axis,
            values,
            total_mass,
            provenance,
            sample_count: None,
            overflow_count: 0,
        })
    }

    /// Tabulate an analytic density at the bin centers.
    pub fn from_fn(axis: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = axis.centers().iter().map(|&x| f(x)).collect();
        Density1D::from_values(axis, values, Provenance::Analytic).expect("lengths match")
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.axis.dx()
    }

    /// Per-bin standard error of an empirical estimate (Poisson counts).
    /// Zero when the sample count is unknown.
    pub fn stderr(&self, i: usize) -> f64 {
        match self.sample_count {
            Some(n) if n > 0 => (self.values[i].max(0.0) / (n as f64 * self.axis.dx())).sqrt(),
            _ => 0.0,
        }
    }

    /// Average of `p(x)` and `p(-x)`; returns the symmetrized density and
    /// the L1 norm of the antisymmetric part. The axis must be symmetric
    /// about the origin.
    pub fn symmetrized(&self) -> Result<(Density1D, f64)> {
        if (self.axis.lo + self.axis.hi).abs() > 1e-12 * self.axis.dx() {
            return Err(Error::InvalidArgument(
                "symmetrization needs an axis centered on 0".into(),
            ));
        }
        let n = self.axis.n_bins;
        let mut values = vec![0.0; n];
        let mut asym = 0.0;
        for i in 0..n {
            let j = n - 1 - i;
            values[i] = 0.5 * (self.values[i] + self.values[j]);
            asym += (self.values[i] - self.values[j]).abs();
        }
        let asym_norm = 0.5 * asym * self.axis.dx();
        let mut out = Density1D::from_values(self.axis, values, self.provenance)?;
        out.sample_count = self.sample_count;
        out.overflow_count = self.overflow_count;
        Ok((out, asym_norm))
    }
}

/// A 2D density on a pair of uniform grids. `values[iy][ix]` is the density
/// at (x_axis.center(ix), y_axis.center(iy)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density2D {
    pub x_axis: Grid1D,
    pub y_axis: Grid1D,
    pub values: Vec<Vec<f64>>,
    pub total_mass: f64,
    pub provenance: Provenance,
    pub sample_count: Option<u64>,
    pub overflow_count: u64,
}

impl Density2D {
    pub fn from_values(
        x_axis: Grid1D,
        y_axis: Grid1D,
        values: Vec<Vec<f64>>,
        provenance: Provenance,
    ) -> Result<Self> {
        if values.len() != y_axis.n_bins || values.iter().any(|r| r.len() != x_axis.n_bins) {
            return Err(Error::GridMismatch("2D value shape does not match axes".into()));
        }
        let total_mass =
            values.iter().flatten().sum::<f64>() * x_axis.dx() * y_axis.dx();
        Ok(Density2D {
            x_axis,
            y_axis,
            values,
            total_mass,
            provenance,
            sample_count: None,
            overflow_count: 0,
        })
    }

    pub fn from_fn(x_axis: Grid1D, y_axis: Grid1D, f: impl Fn(f64, f64) -> f64) -> Self {
        let values: Vec<Vec<f64>> = y_axis
            .centers()
            .iter()
            .map(|&y| x_axis.centers().iter().map(|&x| f(x, y)).collect())
            .collect();
        let mut d = Density2D::from_values(x_axis, y_axis, values, Provenance::Analytic)
            .expect("shapes match");
        d.total_mass = d.mass();
        d
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().flatten().sum::<f64>() * self.x_axis.dx() * self.y_axis.dx()
    }

    pub fn same_axes(&self, other: &Density2D) -> bool {
        self.x_axis.same_as(&other.x_axis) && self.y_axis.same_as(&other.y_axis)
    }
}

/// Density of the photocurrent product M on a uniform M-grid, with a
/// symmetric exclusion window around the log-singular point M = 0.
/// Excluded bins hold zero; their mass is carried by `excluded_mass`,
/// estimated from a local `a·ln|M| + b` model fitted on the bins adjacent
/// to the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationDensity {
    pub m_axis: Grid1D,
    /// Half-width of the exclusion window around M = 0 (in sigma0^2 units).
    pub epsilon0: f64,
    pub values: Vec<f64>,
    pub excluded_mass: f64,
    pub provenance: Provenance,
    pub sample_count: Option<u64>,
    pub overflow_count: u64,
}

/// Default exclusion half-width, in sigma0^2 units.
pub const DEFAULT_EPSILON0: f64 = 0.02;

/// Number of bins on each side of the window used for the log-model fit.
const LOG_FIT_BINS: usize = 10;

impl CorrelationDensity {
    /// Build from per-bin values (excluded bins overwritten with zero) and
    /// estimate the excluded mass from the adjacent bins.
    pub fn from_values(
        m_axis: Grid1D,
        epsilon0: f64,
        mut values: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if values.len() != m_axis.n_bins {
            return Err(Error::GridMismatch(format!(
                "{} values for {} bins",
                values.len(),
                m_axis.n_bins
            )));
        }
        if epsilon0 <= 0.0 {
            return Err(Error::InvalidArgument(
                "exclusion half-width must be positive".into(),
            ));
        }
        for i in 0..m_axis.n_bins {
            if m_axis.center(i).abs() < epsilon0 {
                values[i] = 0.0;
            }
        }
        let mut cd = CorrelationDensity {
            m_axis,
            epsilon0,
            values,
            excluded_mass: 0.0,
            provenance,
            sample_count: None,
            overflow_count: 0,
        };
        cd.excluded_mass = cd.fit_excluded_mass();
        Ok(cd)
    }

    pub fn is_excluded(&self, i: usize) -> bool {
        self.m_axis.center(i).abs() < self.epsilon0
    }

    /// Mass over the covered (non-excluded) range.
    pub fn covered_mass(&self) -> f64 {
        let dx = self.m_axis.dx();
        (0..self.m_axis.n_bins)
            .filter(|&i| !self.is_excluded(i))
            .map(|i| self.values[i])
            .sum::<f64>()
            * dx
    }

    /// Covered mass plus the log-model estimate of the excluded mass.
    pub fn total_mass_with_excluded(&self) -> f64 {
        self.covered_mass() + self.excluded_mass
    }

    /// Least-squares fit of `w(M) = a ln|M| + b` on the bins adjacent to the
    /// exclusion window (each side separately), integrated over the window:
    /// `∫0^eps (a ln m + b) dm = eps (b + a (ln eps - 1))` per side.
    fn fit_excluded_mass(&self) -> f64 {
        let mut mass = 0.0;
        for side in [1.0f64, -1.0] {
            let mut pts: Vec<(f64, f64)> = Vec::new();
            let mut order: Vec<usize> = (0..self.m_axis.n_bins).collect();
            // walk outward from the window on this side
            order.sort_by(|&a, &b| {
                self.m_axis
                    .center(a)
                    .abs()
                    .partial_cmp(&self.m_axis.center(b).abs())
                    .unwrap()
            });
            for i in order {
                let m = self.m_axis.center(i);
                if m * side <= 0.0 || self.is_excluded(i) {
                    continue;
                }
                pts.push((m.abs().ln(), self.values[i]));
                if pts.len() == LOG_FIT_BINS {
                    break;
                }
            }
            if pts.len() < 2 {
                continue;
            }
            let n = pts.len() as f64;
            let sx: f64 = pts.iter().map(|p| p.0).sum();
            let sy: f64 = pts.iter().map(|p| p.1).sum();
            let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
            let det = n * sxx - sx * sx;
            if det.abs() < 1e-30 {
                continue;
            }
            let a = (n * sxy - sx * sy) / det;
            let b = (sy * sxx - sx * sxy) / det;
            let eps = self.epsilon0;
            mass += (eps * (b + a * (eps.ln() - 1.0))).max(0.0);
        }
        mass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density1d_mass_and_symmetrize() {
        let axis = Grid1D::new(-8.0, 8.0, 320).unwrap();
        let d = Density1D::from_fn(axis, |x| {
            (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
        });
        assert!((d.mass() - 1.0).abs() < 1e-6);
        let (s, asym) = d.symmetrized().unwrap();
        // bin centers at +x and -x differ by float rounding, so the
        // comparison is up to ulps, not exact
        assert!(asym < 1e-14);
        for (a, b) in s.values.iter().zip(&d.values) {
            assert!((a - b).abs() <= 1e-13 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn excluded_mass_log_model_on_k0_like_density() {
        // w(m) = -(2/pi)(ln|m| + c) near 0 mimics the K0 divergence.
        let axis = Grid1D::new(-4.0, 4.0, 400).unwrap();
        let c = 0.5772;
        let vals: Vec<f64> = axis
            .centers()
            .iter()
            .map(|&m| (-(2.0 / std::f64::consts::PI) * (m.abs().ln() + c)).max(0.0))
            .collect();
        let cd = CorrelationDensity::from_values(axis, 0.02, vals, Provenance::Analytic).unwrap();
        // exact window mass of the log model, both sides
        let eps: f64 = 0.02;
        let exact = 2.0 * (2.0 / std::f64::consts::PI) * eps * (1.0 - eps.ln() - c);
        assert!(
            (cd.excluded_mass - exact).abs() < 1e-3,
            "fit {} vs exact {}",
            cd.excluded_mass,
            exact
        );
    }

    #[test]
    fn exclusion_zeroes_bins() {
        let axis = Grid1D::new(-1.0, 1.0, 100).unwrap();
        let vals = vec![1.0; 100];
        let cd = CorrelationDensity::from_values(axis, 0.05, vals, Provenance::Analytic).unwrap();
        for i in 0..100 {
            if cd.is_excluded(i) {
                assert_eq!(cd.values[i], 0.0);
            } else {
                assert_eq!(cd.values[i], 1.0);
            }
        }
    }
}

//! Uniform 1D grids used as histogram axes and evaluation grids.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A uniform grid of `n_bins` bins spanning `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub lo: f64,
    pub hi: f64,
    pub n_bins: usize,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n_bins: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo || n_bins == 0 {
            return Err(Error::InvalidArgument(format!(
                "bad grid: [{lo}, {hi}) with {n_bins} bins"
            )));
        }
        Ok(Grid1D { lo, hi, n_bins })
    }

    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / self.n_bins as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_bins).map(|i| self.center(i)).collect()
    }

    pub fn edge(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.dx()
    }

    /// Bin index containing `x`, or `None` if outside `[lo, hi)`.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        if x < self.lo || x >= self.hi || !x.is_finite() {
            return None;
        }
        let i = ((x - self.lo) / self.dx()) as usize;
        Some(i.min(self.n_bins - 1))
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.n_bins == other.n_bins
    }
}

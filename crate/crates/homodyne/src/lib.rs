//! Balanced homodyne detection with a real (noisy) local oscillator.
//!
//! This crate simulates the two-detector output statistics of a balanced
//! homodyne setup whose local oscillator carries excess amplitude noise,
//! reconstructs the statistics an ideal (shot-noise-limited) local
//! oscillator would have produced, and inverts phase-randomized
//! coherent-state measurements into Fock-state statistics.
//!
//! The main entry points, in pipeline order:
//!
//! * [`sim::simulate`] — Monte Carlo detector-pair records for a chosen
//!   signal state and LO noise level,
//! * [`stats::estimate_density_1d`] / [`stats::estimate_sigma0`] —
//!   density estimation and shot-noise calibration,
//! * [`stats::reconstruct_joint_ideal`] / [`stats::reconstruct_w0`] —
//!   the ideal-LO joint distribution and correlation-product density,
//! * [`invert::invert_single_mu`] / [`invert::invert_two_mu`] — Fock-state
//!   statistics from vacuum + PRCS measurements,
//! * [`invert::overlap_2d`] / [`invert::overlap_1d`] /
//!   [`invert::vogel_criterion`] — figures of merit and nonclassicality,
//! * [`pipeline::run_pipeline`] — the whole chain with file artifacts.

pub mod density;
pub mod grid;
pub mod invert;
pub mod io;
pub mod numerics;
pub mod pipeline;
pub mod sim;
pub mod states;
pub mod stats;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Fock truncation exceeded: {0}")]
    Truncation(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{fraction:.4}% of samples fall outside the axis (limit 0.1%)")]
    OutOfRange { fraction: f64 },

    #[error("ill-conditioned inversion: {0}")]
    IllConditioned(String),

    #[error("quadrature failed to converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

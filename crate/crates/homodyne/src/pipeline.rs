//! Full measurement-to-metrics pipeline with file artifacts: simulate the
//! two measurement sets (vacuum calibration, signal quadratures),
//! reconstruct the ideal-LO statistics, invert to Fock states, score the
//! results, and write everything with a content-hashed manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::density::{Density1D, DEFAULT_EPSILON0};
use crate::grid::Grid1D;
use crate::invert::{
    fit_mu_detailed, invert_single_mu, invert_two_mu, overlap_1d, overlap_2d, vogel_criterion,
    StatObject, VogelResult,
};
use crate::io::{export_csv, save_stat};
use crate::sim::{effective_mu, simulate, LoModel, SimulationConfig};
use crate::states::{fock_density, theoretical_w0, QuadratureConvention, StateSpec};
use crate::stats::{
    correlation_mean, default_joint_axis, default_m_axis, default_quadrature_axis,
    estimate_density_1d, estimate_sigma0, joint_histogram, reconstruct_joint_ideal,
    reconstruct_w0,
};
use crate::{Error, Result};

/// Everything one pipeline run needs. Defaults mirror the experimental
/// parameters: 10^6 measurement pairs per state, 26 dB LO excess noise,
/// PRCS mean photon numbers {0.27, 0.62}.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub scenario: String,
    pub n_samples: u64,
    pub seed: u64,
    pub excess_noise_db: f64,
    /// True shot-noise scale fed to the simulator (the pipeline re-estimates
    /// it from the vacuum set, as the experiment would).
    pub sigma0: f64,
    /// Nonzero PRCS mean photon numbers; one enables the single-mu
    /// inversion, two enable the simultaneous Fock-1/Fock-2 inversion.
    pub mus: Vec<f64>,
    /// Common detector efficiency; inversion uses mu/eta.
    pub eta: f64,
    /// Exclusion half-width around M = 0, in sigma0^2 units.
    pub epsilon0: f64,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            scenario: "paper-defaults".into(),
            n_samples: 1_000_000,
            seed: 1,
            excess_noise_db: 26.0,
            sigma0: 1.0,
            mus: vec![0.27, 0.62],
            eta: 1.0,
            epsilon0: DEFAULT_EPSILON0,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be >= 1".into()));
        }
        if self.mus.is_empty() || self.mus.len() > 2 {
            return Err(Error::Config(
                "mus must hold 1 or 2 nonzero PRCS mean photon numbers".into(),
            ));
        }
        if self.mus.iter().any(|&m| m <= 0.0) {
            return Err(Error::Config("every mu must be > 0".into()));
        }
        if self.mus.len() == 2 && self.mus[0] == self.mus[1] {
            return Err(Error::Config("the two mu values must differ".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config("eta must be in (0, 1]".into()));
        }
        if self.epsilon0 <= 0.0 {
            return Err(Error::Config("epsilon0 must be > 0".into()));
        }
        if !(self.sigma0 > 0.0) {
            return Err(Error::Config("sigma0 must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub kind: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    pub sigma0_hat: f64,
    pub mu_hat: Vec<f64>,
    /// Overlap of the inverted Fock-1 joint map with theory.
    pub c: f64,
    /// Overlap of the inverted Fock-1 correlation density with theory.
    pub d1: f64,
    /// Overlap of the inverted Fock-2 correlation density with theory
    /// (two-mu runs only).
    pub d2: Option<f64>,
    /// Mean of M for each reconstructed correlation density, keyed by state.
    pub w0_means: BTreeMap<String, f64>,
    /// Vogel verdicts keyed by state label.
    pub vogel: BTreeMap<String, VogelResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub artifacts: Vec<ArtifactEntry>,
    pub metrics: Metrics,
}

/// Per-state seed offsets keep the signal substreams of different states
/// decorrelated while staying reproducible from the one config seed.
fn state_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

struct ArtifactWriter {
    out_dir: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl ArtifactWriter {
    fn write(&mut self, name: &str, kind: &str, stat: &StatObject) -> Result<()> {
        let json = self.out_dir.join(format!("{name}.json"));
        save_stat(&json, stat)?;
        self.push_entry(&json, kind)?;
        let csv = self.out_dir.join(format!("{name}.csv"));
        export_csv(stat, &csv)?;
        self.push_entry(&csv, kind)
    }

    fn push_entry(&mut self, path: &Path, kind: &str) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let digest = Sha256::digest(&bytes);
        self.entries.push(ArtifactEntry {
            path: path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: format!("{digest:x}"),
            kind: kind.into(),
        });
        Ok(())
    }
}

/// Run the full pipeline and write all artifacts plus `manifest.json` into
/// the configured output directory. On failure a `.partial` marker with the
/// error text is left behind.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Manifest> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::io(config.out_dir.display().to_string(), e))?;
    match run_pipeline_inner(config) {
        Ok(m) => {
            let marker = config.out_dir.join(".partial");
            let _ = fs::remove_file(marker);
            Ok(m)
        }
        Err(e) => {
            let _ = fs::write(config.out_dir.join(".partial"), e.to_string());
            Err(e)
        }
    }
}

fn run_pipeline_inner(config: &PipelineConfig) -> Result<Manifest> {
    let true_conv = QuadratureConvention::new(config.sigma0)?;
    let lo = LoModel::new(true_conv, config.excess_noise_db)?;
    let mut writer = ArtifactWriter {
        out_dir: config.out_dir.clone(),
        entries: Vec::new(),
    };

    // --- measurement set 1: vacuum calibration ---
    let vacuum = simulate(&SimulationConfig {
        state: StateSpec::Vacuum,
        lo,
        n_samples: config.n_samples,
        seed: state_seed(config.seed, 0),
    })?;
    let sigma0_hat = estimate_sigma0(&vacuum);
    let conv_hat = QuadratureConvention::new(sigma0_hat)?;

    // --- measurement set 2: signal quadratures per PRCS ---
    let mut prcs_records = Vec::new();
    for (i, &mu) in config.mus.iter().enumerate() {
        prcs_records.push(simulate(&SimulationConfig {
            state: StateSpec::Prcs { mu },
            lo,
            n_samples: config.n_samples,
            seed: state_seed(config.seed, i as u64 + 1),
        })?);
    }

    // --- quadrature densities ---
    let quad_axis = default_quadrature_axis(sigma0_hat);
    let d_of = |records: &[crate::sim::DetectorRecord]| -> Vec<f64> {
        records.iter().map(|r| r.d()).collect()
    };
    let pd_vacuum = estimate_density_1d(&d_of(&vacuum), quad_axis)?;
    let mut pd_prcs = Vec::new();
    for recs in &prcs_records {
        pd_prcs.push(estimate_density_1d(&d_of(recs), quad_axis)?);
    }

    // --- mu calibration ---
    let mut mu_hat = Vec::new();
    for pd in &pd_prcs {
        mu_hat.push(fit_mu_detailed(pd, &conv_hat).mu);
    }
    let mu_eff: Vec<f64> = mu_hat
        .iter()
        .map(|&m| effective_mu(m, config.eta))
        .collect::<Result<_>>()?;

    // --- noisy joint histograms (what the detectors actually show) ---
    let i1_std = {
        let n = vacuum.len() as f64;
        let mean = vacuum.iter().map(|r| r.i1).sum::<f64>() / n;
        (vacuum.iter().map(|r| (r.i1 - mean).powi(2)).sum::<f64>() / n).sqrt()
    };
    let noisy_axis = Grid1D::new(-6.0 * i1_std, 6.0 * i1_std, 160)?;
    writer.write(
        "joint_noisy_vacuum",
        "density2d",
        &StatObject::Density2D(joint_histogram(&vacuum, noisy_axis, noisy_axis)?),
    )?;
    writer.write(
        "joint_noisy_prcs1",
        "density2d",
        &StatObject::Density2D(joint_histogram(&prcs_records[0], noisy_axis, noisy_axis)?),
    )?;

    // --- ideal-LO joint maps and the Fock-1 inversion ---
    let joint_axis = default_joint_axis(sigma0_hat);
    let j_vacuum = StatObject::Density2D(reconstruct_joint_ideal(
        &pd_vacuum, sigma0_hat, joint_axis, joint_axis,
    )?);
    let j_prcs1 = StatObject::Density2D(reconstruct_joint_ideal(
        &pd_prcs[0],
        sigma0_hat,
        joint_axis,
        joint_axis,
    )?);
    writer.write("joint_ideal_vacuum", "density2d", &j_vacuum)?;
    writer.write("joint_ideal_prcs1", "density2d", &j_prcs1)?;
    let joint_inv = invert_single_mu(&j_vacuum, &j_prcs1, mu_eff[0])?;
    writer.write("joint_fock1", "density2d", &joint_inv.l1)?;

    // theory map for the overlap C
    let theory_axis = Grid1D::new(-8.0 * sigma0_hat, 8.0 * sigma0_hat, 1280)?;
    let p1_analytic = Density1D::from_fn(theory_axis, |x| {
        fock_density(1, x / sigma0_hat) / sigma0_hat
    });
    let j_fock1_theory =
        reconstruct_joint_ideal(&p1_analytic, sigma0_hat, joint_axis, joint_axis)?;
    let c = match (&joint_inv.l1, &j_fock1_theory) {
        (StatObject::Density2D(got), th) => overlap_2d(got, th)?,
        _ => unreachable!(),
    };

    // --- correlation densities w0 ---
    let m_axis = default_m_axis(sigma0_hat);
    let eps = config.epsilon0 * sigma0_hat * sigma0_hat;
    let sym = |pd: &Density1D| -> Result<Density1D> { Ok(pd.symmetrized()?.0) };
    let w0_vacuum = reconstruct_w0(&sym(&pd_vacuum)?, sigma0_hat, m_axis, eps)?;
    let mut w0_prcs = Vec::new();
    for pd in &pd_prcs {
        w0_prcs.push(reconstruct_w0(&sym(pd)?, sigma0_hat, m_axis, eps)?);
    }
    writer.write(
        "w0_vacuum",
        "correlation",
        &StatObject::Correlation(w0_vacuum.clone()),
    )?;
    let mut w0_means = BTreeMap::new();
    w0_means.insert("vacuum".into(), correlation_mean(&w0_vacuum));
    for (i, w) in w0_prcs.iter().enumerate() {
        writer.write(
            &format!("w0_prcs{}", i + 1),
            "correlation",
            &StatObject::Correlation(w.clone()),
        )?;
        w0_means.insert(format!("prcs{}", i + 1), correlation_mean(w));
    }

    // --- Fock inversion of the correlation densities and the quadratures ---
    let w_l0 = StatObject::Correlation(w0_vacuum.clone());
    let pd_l0 = StatObject::Density1D(pd_vacuum.clone());
    let (w_fock1, w_fock2, pd_fock1, pd_fock2) = if config.mus.len() == 2 {
        let w_inv = invert_two_mu(
            &w_l0,
            &StatObject::Correlation(w0_prcs[0].clone()),
            &StatObject::Correlation(w0_prcs[1].clone()),
            mu_eff[0],
            mu_eff[1],
        )?;
        let pd_inv = invert_two_mu(
            &pd_l0,
            &StatObject::Density1D(pd_prcs[0].clone()),
            &StatObject::Density1D(pd_prcs[1].clone()),
            mu_eff[0],
            mu_eff[1],
        )?;
        (
            w_inv.l1,
            w_inv.l2,
            pd_inv.l1,
            pd_inv.l2,
        )
    } else {
        let w_inv = invert_single_mu(
            &w_l0,
            &StatObject::Correlation(w0_prcs[0].clone()),
            mu_eff[0],
        )?;
        let pd_inv = invert_single_mu(
            &pd_l0,
            &StatObject::Density1D(pd_prcs[0].clone()),
            mu_eff[0],
        )?;
        (w_inv.l1, None, pd_inv.l1, None)
    };
    writer.write("w0_fock1", "correlation", &w_fock1)?;
    writer.write("pd_fock1", "density1d", &pd_fock1)?;
    if let Some(w2) = &w_fock2 {
        writer.write("w0_fock2", "correlation", w2)?;
    }
    if let Some(p2) = &pd_fock2 {
        writer.write("pd_fock2", "density1d", p2)?;
    }

    // --- overlaps D against the analytic theory curves ---
    let w1_theory = theoretical_w0(&StateSpec::Fock { n: 1 }, m_axis, eps, &conv_hat)?;
    let d1 = match &w_fock1 {
        StatObject::Correlation(w) => overlap_1d(w, &w1_theory)?,
        _ => unreachable!(),
    };
    if let StatObject::Correlation(w) = &w_fock1 {
        w0_means.insert("fock1".into(), correlation_mean(w));
    }
    let d2 = match &w_fock2 {
        Some(StatObject::Correlation(w)) => {
            let w2_theory = theoretical_w0(&StateSpec::Fock { n: 2 }, m_axis, eps, &conv_hat)?;
            w0_means.insert("fock2".into(), correlation_mean(w));
            Some(overlap_1d(w, &w2_theory)?)
        }
        _ => None,
    };

    // --- Vogel verdicts ---
    let mut vogel = BTreeMap::new();
    vogel.insert("vacuum".into(), vogel_criterion(&pd_vacuum, sigma0_hat));
    for (i, pd) in pd_prcs.iter().enumerate() {
        vogel.insert(format!("prcs{}", i + 1), vogel_criterion(pd, sigma0_hat));
    }
    if let StatObject::Density1D(p) = &pd_fock1 {
        vogel.insert("fock1".into(), vogel_criterion(p, sigma0_hat));
    }
    if let Some(StatObject::Density1D(p)) = &pd_fock2 {
        vogel.insert("fock2".into(), vogel_criterion(p, sigma0_hat));
    }

    // --- manifest ---
    let metrics = Metrics {
        sigma0_hat,
        mu_hat,
        c,
        d1,
        d2,
        w0_means,
        vogel,
    };
    let manifest = Manifest {
        scenario: config.scenario.clone(),
        seed: config.seed,
        config: config.clone(),
        artifacts: writer.entries,
        metrics,
    };
    let manifest_path = config.out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&manifest_path, json)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    Ok(manifest)
}

/// Re-hash every artifact listed in a manifest and report mismatches.
pub fn verify_manifest(manifest_path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(manifest_path)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut bad = Vec::new();
    for a in &manifest.artifacts {
        let path = dir.join(&a.path);
        match fs::read(&path) {
            Ok(bytes) => {
                let digest = format!("{:x}", Sha256::digest(&bytes));
                if digest != a.sha256 {
                    bad.push(a.path.clone());
                }
            }
            Err(_) => bad.push(a.path.clone()),
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoke_scenario_completes() {
        let dir = tempfile::tempdir().unwrap();
        let config = PipelineConfig {
            scenario: "smoke".into(),
            n_samples: 20_000,
            seed: 5,
            out_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        let manifest = run_pipeline(&config).unwrap();
        assert!(manifest.metrics.sigma0_hat > 0.9 && manifest.metrics.sigma0_hat < 1.1);
        assert_eq!(manifest.metrics.mu_hat.len(), 2);
        assert!(manifest.metrics.d2.is_some());
        assert!(dir.path().join("manifest.json").exists());
        assert!(!dir.path().join(".partial").exists());
        // every artifact verifies
        let bad = verify_manifest(&dir.path().join("manifest.json")).unwrap();
        assert!(bad.is_empty(), "bad artifacts: {bad:?}");
    }

    #[test]
    fn deterministic_artifacts() {
        let run = |dir: &Path| {
            let config = PipelineConfig {
                scenario: "det".into(),
                n_samples: 20_000,
                seed: 9,
                out_dir: dir.to_path_buf(),
                ..Default::default()
            };
            run_pipeline(&config).unwrap();
            std::fs::read(dir.join("w0_fock1.json")).unwrap()
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        assert_eq!(run(d1.path()), run(d2.path()));
    }

    #[test]
    fn config_validation() {
        let mut c = PipelineConfig::default();
        c.mus = vec![];
        assert!(c.validate().is_err());
        c.mus = vec![0.3, 0.3];
        assert!(c.validate().is_err());
        c.mus = vec![0.3, 0.6];
        c.eta = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let config = PipelineConfig {
            scenario: "tamper".into(),
            n_samples: 20_000,
            seed: 2,
            out_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        run_pipeline(&config).unwrap();
        std::fs::write(dir.path().join("pd_fock1.csv"), "tampered").unwrap();
        let bad = verify_manifest(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(bad, vec!["pd_fock1.csv".to_string()]);
    }
}

//! Thin command-line front end over the library.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 i/o failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use homodyne::density::DEFAULT_EPSILON0;
use homodyne::invert::{
    fit_mu_detailed, invert_single_mu, invert_two_mu, overlap_1d, overlap_2d, vogel_criterion,
    StatObject,
};
use homodyne::io::{export_csv, load_records, load_stat, save_records, save_stat};
use homodyne::pipeline::{run_pipeline, PipelineConfig};
use homodyne::sim::{effective_mu, simulate, LoModel, SimulationConfig};
use homodyne::states::{QuadratureConvention, StateSpec};
use homodyne::stats::{
    default_joint_axis, default_m_axis, default_quadrature_axis, estimate_density_1d,
    estimate_sigma0, reconstruct_joint_ideal, reconstruct_w0,
};
use homodyne::{Error, Result};

#[derive(Parser)]
#[command(
    name = "homodyne",
    about = "Balanced homodyne detection with a noisy local oscillator: \
             simulation, ideal-LO reconstruction, and Fock-state inversion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate detector-pair records for a signal state.
    Simulate(SimulateArgs),
    /// Reconstruct ideal-LO statistics from recorded data.
    Reconstruct(ReconstructArgs),
    /// Invert vacuum + PRCS statistics into Fock-state statistics.
    Invert(InvertArgs),
    /// Overlap and nonclassicality figures of merit.
    Metrics(MetricsArgs),
    /// Run the full pipeline from a config file, writing a manifest.
    Run(RunArgs),
    /// Export a saved statistic as CSV plot data.
    Export(ExportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Signal state: vacuum | fock:N | coherent:AMP,PHASE | prcs:MU
    #[arg(long, default_value = "vacuum")]
    state: String,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// LO excess amplitude noise in dB.
    #[arg(long = "excess-db", default_value_t = 26.0)]
    excess_db: f64,
    /// Shot-noise standard deviation (unit convention).
    #[arg(long, default_value_t = 1.0)]
    sigma0: f64,
    /// Output record file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Signal-state record file.
    #[arg(long)]
    records: PathBuf,
    /// Vacuum record file for shot-noise calibration; omit to pass
    /// --sigma0 directly.
    #[arg(long)]
    vacuum: Option<PathBuf>,
    #[arg(long)]
    sigma0: Option<f64>,
    /// What to reconstruct: pd | joint | w0
    #[arg(long, default_value = "w0")]
    kind: String,
    /// Exclusion half-width around M = 0, in sigma0^2 units.
    #[arg(long, default_value_t = DEFAULT_EPSILON0)]
    epsilon0: f64,
    /// Output statistic file (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InvertArgs {
    /// Vacuum statistic (JSON).
    #[arg(long)]
    l0: PathBuf,
    /// PRCS statistics (JSON), one or two files.
    #[arg(long = "lmu", num_args = 1..=2, required = true)]
    l_mu: Vec<PathBuf>,
    /// PRCS mean photon numbers, matching --lmu.
    #[arg(long = "mu", num_args = 1..=2, required = true)]
    mu: Vec<f64>,
    /// Common detector efficiency; the inversion uses mu/eta.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Output stem: writes STEM_fock1.json and, with two mu, STEM_fock2.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Statistic under test (JSON).
    #[arg(long)]
    got: PathBuf,
    /// Reference statistic on the same grid (JSON), for the overlap.
    #[arg(long)]
    expected: Option<PathBuf>,
    /// Run the Vogel criterion (1D quadrature densities only).
    #[arg(long, default_value_t = false)]
    vogel: bool,
    #[arg(long, default_value_t = 1.0)]
    sigma0: f64,
    /// Fit the PRCS mean photon number (1D quadrature densities only).
    #[arg(long = "fit-mu", default_value_t = false)]
    fit_mu: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline config (JSON); omitted fields take the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long = "excess-db")]
    excess_db: Option<f64>,
    /// PRCS mean photon numbers (overrides the config list).
    #[arg(long = "mu", num_args = 1..=2)]
    mu: Vec<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Statistic file (JSON).
    #[arg(long)]
    stat: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn parse_state(text: &str) -> Result<StateSpec> {
    let bad = || Error::Config(format!("unrecognized state '{text}'"));
    let state = match text.split_once(':') {
        None if text == "vacuum" => StateSpec::Vacuum,
        Some(("fock", n)) => StateSpec::Fock {
            n: n.parse().map_err(|_| bad())?,
        },
        Some(("prcs", mu)) => StateSpec::Prcs {
            mu: mu.parse().map_err(|_| bad())?,
        },
        Some(("coherent", rest)) => {
            let (a, p) = rest.split_once(',').ok_or_else(bad)?;
            StateSpec::Coherent {
                amplitude: a.parse().map_err(|_| bad())?,
                phase: p.parse().map_err(|_| bad())?,
            }
        }
        _ => return Err(bad()),
    };
    state.validate()?;
    Ok(state)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let conv = QuadratureConvention::new(args.sigma0)?;
    let records = simulate(&SimulationConfig {
        state: parse_state(&args.state)?,
        lo: LoModel::new(conv, args.excess_db)?,
        n_samples: args.samples,
        seed: args.seed,
    })?;
    save_records(&args.out, &records)?;
    println!(
        "wrote {} records to {}",
        records.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_reconstruct(args: ReconstructArgs) -> Result<()> {
    let sigma0 = match (&args.vacuum, args.sigma0) {
        (Some(path), None) => estimate_sigma0(&load_records(path)?),
        (None, Some(s)) if s > 0.0 => s,
        _ => {
            return Err(Error::Config(
                "pass exactly one of --vacuum or --sigma0 (> 0)".into(),
            ))
        }
    };
    let records = load_records(&args.records)?;
    let d: Vec<f64> = records.iter().map(|r| r.d()).collect();
    let pd = estimate_density_1d(&d, default_quadrature_axis(sigma0))?;
    let stat = match args.kind.as_str() {
        "pd" => StatObject::Density1D(pd),
        "joint" => {
            let axis = default_joint_axis(sigma0);
            StatObject::Density2D(reconstruct_joint_ideal(&pd, sigma0, axis, axis)?)
        }
        "w0" => {
            let (sym, _) = pd.symmetrized()?;
            let eps = args.epsilon0 * sigma0 * sigma0;
            StatObject::Correlation(reconstruct_w0(&sym, sigma0, default_m_axis(sigma0), eps)?)
        }
        other => return Err(Error::Config(format!("unknown kind '{other}'"))),
    };
    save_stat(&args.out, &stat)?;
    println!("sigma0 = {sigma0:.6}; wrote {}", args.out.display());
    Ok(())
}

fn cmd_invert(args: InvertArgs) -> Result<()> {
    if args.l_mu.len() != args.mu.len() {
        return Err(Error::Config(
            "--lmu and --mu must appear the same number of times".into(),
        ));
    }
    let l0 = load_stat(&args.l0)?;
    let stem = args.out.display();
    let result = if args.mu.len() == 1 {
        let lmu = load_stat(&args.l_mu[0])?;
        invert_single_mu(&l0, &lmu, effective_mu(args.mu[0], args.eta)?)?
    } else {
        let lmu1 = load_stat(&args.l_mu[0])?;
        let lmu2 = load_stat(&args.l_mu[1])?;
        invert_two_mu(
            &l0,
            &lmu1,
            &lmu2,
            effective_mu(args.mu[0], args.eta)?,
            effective_mu(args.mu[1], args.eta)?,
        )?
    };
    let p1 = PathBuf::from(format!("{stem}_fock1.json"));
    save_stat(&p1, &result.l1)?;
    println!(
        "fock1 -> {} (total mass {:.4})",
        p1.display(),
        result.total_mass_l1
    );
    if let Some(l2) = &result.l2 {
        let p2 = PathBuf::from(format!("{stem}_fock2.json"));
        save_stat(&p2, l2)?;
        println!(
            "fock2 -> {} (total mass {:.4})",
            p2.display(),
            result.total_mass_l2.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn cmd_metrics(args: MetricsArgs) -> Result<()> {
    let got = load_stat(&args.got)?;
    if let Some(path) = &args.expected {
        let expected = load_stat(path)?;
        let overlap = match (&got, &expected) {
            (StatObject::Density2D(a), StatObject::Density2D(b)) => overlap_2d(a, b)?,
            (StatObject::Correlation(a), StatObject::Correlation(b)) => overlap_1d(a, b)?,
            _ => {
                return Err(Error::Config(
                    "overlap needs two statistics of the same kind (2D or correlation)".into(),
                ))
            }
        };
        println!("overlap = {overlap:.6}");
    }
    if args.vogel || args.fit_mu {
        let StatObject::Density1D(p) = &got else {
            return Err(Error::Config(
                "--vogel/--fit-mu need a 1D quadrature density".into(),
            ));
        };
        if args.vogel {
            let v = vogel_criterion(p, args.sigma0);
            println!(
                "vogel: nonclassical = {}, max excess = {:.3e} at k = {:.3}",
                v.nonclassical, v.max_excess, v.k_at_max
            );
        }
        if args.fit_mu {
            let conv = QuadratureConvention::new(args.sigma0)?;
            let fit = fit_mu_detailed(p, &conv);
            println!(
                "mu = {:.4} (residual {:.3e}, noise floor {:.3e}, mismatch = {})",
                fit.mu, fit.residual, fit.noise_floor, fit.model_mismatch
            );
        }
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config: PipelineConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(samples) = args.samples {
        config.n_samples = samples;
    }
    if let Some(db) = args.excess_db {
        config.excess_noise_db = db;
    }
    if !args.mu.is_empty() {
        config.mus = args.mu.clone();
    }
    if let Some(eta) = args.eta {
        config.eta = eta;
    }
    if let Some(out) = args.out {
        config.out_dir = out;
    }
    let manifest = run_pipeline(&config)?;
    println!("{}", serde_json::to_string_pretty(&manifest.metrics)?);
    println!("manifest: {}", config.out_dir.join("manifest.json").display());
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<()> {
    let stat = load_stat(&args.stat)?;
    export_csv(&stat, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidState(_) => 2,
        Error::Truncation(_)
        | Error::GridMismatch(_)
        | Error::OutOfRange { .. }
        | Error::IllConditioned(_)
        | Error::QuadratureNonConvergence(_) => 3,
        Error::Io { .. } | Error::Serde(_) => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Invert(a) => cmd_invert(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Run(a) => cmd_run(a),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mpwegner_core::hamiltonian::{assemble, PotentialField};
use mpwegner_core::montecarlo::{ids_density_estimate, sweep, SweepConfig};
use mpwegner_core::randomness::sample_potential_indexed;
use mpwegner_core::spectral::eigenvalues_symmetric;
use mpwegner_core::suites::{default_domain, run_suite, SuiteSummary, SUITE_NAMES};
use mpwegner_core::{format_sig17, Error};
use serde::Serialize;

use crate::config::{DomainConfig, FileConfig, Resolved};

/// Exit status: configuration errors.
const EXIT_CONFIG: u8 = 2;
/// Exit status: a domain violates the regularity hypothesis.
const EXIT_NOT_REGULAR: u8 = 3;
/// Exit status: a check failed (or the run could not complete).
const EXIT_FAILED: u8 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("regularity violation: {0}")]
    NotRegular(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::NotRegular(_) => EXIT_NOT_REGULAR,
            CliError::Failed(_) => EXIT_FAILED,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NotRegular => CliError::NotRegular(e.to_string()),
            Error::InvalidDomain(_)
            | Error::InvalidDensity(_)
            | Error::InvalidInteraction(_)
            | Error::InvalidPotential(_)
            | Error::InvalidArgument(_) => CliError::Config(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

/// Numerical laboratory for Wegner-type estimates of multi-particle
/// Anderson Hamiltonians on rectangular lattice domains.
#[derive(Debug, Parser)]
#[command(name = "mpwegner", version)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, env = "MPWEGNER_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the spectral identity and inequality check suites.
    Verify {
        /// Suite to run.
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Number of random samples (trials) per suite.
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        /// Base seed.
        #[arg(long, default_value_t = config::DEFAULT_SEED)]
        seed: u64,
        /// Config file whose first `[[domain]]` (and `[density]`) replace the
        /// defaults; without it, the suites use a 6×6 two-particle box or
        /// random regular domains.
        #[arg(long, value_name = "CONFIG")]
        domain: Option<PathBuf>,
        /// Also write the JSON report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate of P(dist(E, σ(H)) < κ) against the Wegner bound.
    Wegner {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Report file; `.csv` or `.json`. CSV goes to stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference estimate of the density of states against 2‖ρ‖∞.
    Ids {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Report file; `.csv` or `.json`. CSV goes to stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues of one Hamiltonian, one per line.
    Spectrum {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Which `[[domain]]` entry to use.
        #[arg(long, default_value_t = 0)]
        domain_index: usize,
        /// Sample index of the random potential.
        #[arg(long, default_value_t = 0)]
        sample: u64,
        /// Use this constant potential instead of a random draw.
        #[arg(long, allow_negative_numbers = true)]
        constant_potential: Option<f64>,
        /// Eigenvalue CSV file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump the matrix as `row col value` triplets (0-based).
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Lemma31,
    FhFd,
    Interlacing,
    Lemma32,
    Chain,
    All,
}

impl Suite {
    fn names(self) -> Vec<&'static str> {
        match self {
            Suite::Lemma31 => vec!["lemma31"],
            Suite::FhFd => vec!["fh-fd"],
            Suite::Interlacing => vec!["interlacing"],
            Suite::Lemma32 => vec!["lemma32"],
            Suite::Chain => vec!["chain"],
            Suite::All => SUITE_NAMES.to_vec(),
        }
    }
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    seed: u64,
    seeds: usize,
    domain: Option<DomainConfig>,
    all_passed: bool,
    suites: Vec<SuiteSummary>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mpwegner: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failed(format!("cannot start thread pool: {e}")))?;
    }
    match cli.command {
        Command::Verify { suite, seeds, seed, domain, out } => verify(suite, seeds, seed, domain.as_deref(), out.as_deref()),
        Command::Wegner { config, out } => wegner(&config, out.as_deref()),
        Command::Ids { config, out } => ids(&config, out.as_deref()),
        Command::Spectrum { config, domain_index, sample, constant_potential, out, matrix } => {
            spectrum(&config, domain_index, sample, constant_potential, out.as_deref(), matrix.as_deref())
        }
    }
}

fn banner(command: &str, resolved: &Resolved) {
    eprintln!("mpwegner {command}: seed = {}", resolved.seed);
    for line in resolved.echo().lines() {
        eprintln!("  {line}");
    }
}

fn load_resolved(path: &Path) -> Result<Resolved, CliError> {
    config::resolve(config::load(path)?)
}

fn verify(suite: Suite, seeds: usize, seed: u64, domain: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    if seeds == 0 {
        return Err(CliError::Config("seeds must be at least 1".into()));
    }
    let resolved = match domain {
        Some(path) => load_resolved(path)?,
        None => config::resolve(FileConfig::default())?,
    };
    let fixed = match domain {
        Some(_) => {
            config::require(&resolved.domains, "domain")?;
            Some(resolved.domains[0].clone())
        }
        None => None,
    };
    let names = suite.names();
    if let Some(d) = &fixed {
        // the sum rule and interlacing need the regularity hypothesis
        if names.iter().any(|n| matches!(*n, "lemma31" | "interlacing")) {
            config::require_regular(std::slice::from_ref(d))?;
        }
    }
    eprintln!(
        "mpwegner verify: suites = {}, seeds = {seeds}, seed = {seed}, domain = {}",
        names.join(","),
        match &fixed {
            Some(d) => format!("{:?}", DomainConfig::from_domain(d)),
            None => format!("default {:?} / random regular", DomainConfig::from_domain(&default_domain())),
        }
    );
    eprintln!("  density = {:?}", resolved.density);

    let mut suites = Vec::with_capacity(names.len());
    for name in names {
        let summary = run_suite(name, fixed.as_ref(), &resolved.density, seeds, seed)?;
        eprintln!(
            "  {:<12} {} checked {}, failed {}, inapplicable {}, worst {:.3e}",
            summary.suite,
            if summary.ok() { "PASS" } else { "FAIL" },
            summary.checked,
            summary.failed,
            summary.inapplicable,
            summary.worst
        );
        suites.push(summary);
    }
    let report = VerifyReport {
        seed,
        seeds,
        domain: fixed.as_ref().map(DomainConfig::from_domain),
        all_passed: suites.iter().all(SuiteSummary::ok),
        suites,
    };
    let json = report::to_json(&report)?;
    if let Some(path) = out {
        report::write_atomic(path, &json)?;
    }
    println!("{json}");
    if report.all_passed {
        Ok(())
    } else {
        Err(CliError::Failed("one or more checks failed".into()))
    }
}

fn sweep_config(resolved: &Resolved) -> Result<SweepConfig, CliError> {
    config::require(&resolved.domains, "domain")?;
    config::require(&resolved.file.energies, "energies")?;
    config::require(&resolved.file.kappas, "kappas")?;
    config::require_regular(&resolved.domains)?;
    Ok(SweepConfig {
        domains: resolved.domains.clone(),
        density: resolved.density,
        interaction: resolved.interaction.clone(),
        energies: resolved.file.energies.clone(),
        kappas: resolved.file.kappas.clone(),
        samples: resolved.samples,
        seed: resolved.seed,
    })
}

fn wegner(path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let resolved = load_resolved(path)?;
    let cfg = sweep_config(&resolved)?;
    let format = report::Format::for_output(out)?;
    cfg.validate()?;
    banner("wegner", &resolved);
    let report = sweep(&cfg)?;
    let text = match format {
        report::Format::Csv => report.to_csv(),
        report::Format::Json => report::to_json(&report)?,
    };
    report::emit(out, &text)?;
    let failed = report.rows.iter().filter(|r| !r.pass).count();
    eprintln!("mpwegner wegner: {} cells, {failed} with ci_low above the bound", report.rows.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{failed} cells exceed the Wegner bound")))
    }
}

#[derive(Debug, Serialize)]
struct IdsRow {
    domain_id: usize,
    kappa: f64,
    samples: usize,
    #[serde(flatten)]
    point: mpwegner_core::montecarlo::IdsPoint,
    pass: bool,
}

const IDS_SIGMAS: f64 = 3.0;

fn ids(path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let resolved = load_resolved(path)?;
    // same validation as a sweep over the grid
    let cfg = sweep_config(&resolved)?;
    let format = report::Format::for_output(out)?;
    cfg.validate()?;
    banner("ids", &resolved);
    let mut rows = Vec::new();
    for (domain_id, domain) in cfg.domains.iter().enumerate() {
        for &kappa in &cfg.kappas {
            let points =
                ids_density_estimate(domain, &cfg.density, &cfg.interaction, &cfg.energies, kappa, cfg.samples, cfg.seed)?;
            rows.extend(points.into_iter().map(|point| IdsRow {
                domain_id,
                kappa,
                samples: cfg.samples,
                pass: point.within_bound(IDS_SIGMAS),
                point,
            }));
        }
    }
    let text = match format {
        report::Format::Csv => {
            let mut s = String::from("domain_id,E,kappa,samples,count_mean,count_se,density,density_se,bound,pass\n");
            for r in &rows {
                let p = &r.point;
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.domain_id,
                    format_sig17(p.e),
                    format_sig17(r.kappa),
                    r.samples,
                    format_sig17(p.count_mean),
                    format_sig17(p.count_se),
                    format_sig17(p.density),
                    format_sig17(p.density_se),
                    format_sig17(p.bound),
                    r.pass
                ));
            }
            s
        }
        report::Format::Json => report::to_json(&rows)?,
    };
    report::emit(out, &text)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    eprintln!("mpwegner ids: {} points, {failed} above 2‖ρ‖∞ + {IDS_SIGMAS}·SE", rows.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{failed} density points exceed the bound")))
    }
}

fn spectrum(
    path: &Path,
    domain_index: usize,
    sample: u64,
    constant_potential: Option<f64>,
    out: Option<&Path>,
    matrix: Option<&Path>,
) -> Result<(), CliError> {
    let resolved = load_resolved(path)?;
    config::require(&resolved.domains, "domain")?;
    let domain = resolved.domains.get(domain_index).ok_or_else(|| {
        CliError::Config(format!("--domain-index {domain_index} but only {} domains configured", resolved.domains.len()))
    })?;
    banner("spectrum", &resolved);
    let v = match constant_potential {
        Some(c) => PotentialField::constant(domain, c)?,
        None => sample_potential_indexed(domain, &resolved.density, resolved.seed, sample),
    };
    let h = assemble(domain, &v, &resolved.interaction)?;
    if let Some(path) = matrix {
        let mut buf = Vec::new();
        h.write_triplets(&mut buf).map_err(|e| CliError::Failed(e.to_string()))?;
        report::write_atomic(path, &String::from_utf8(buf).expect("triplets are ASCII"))?;
    }
    let mut text = String::new();
    for e in eigenvalues_symmetric(&h) {
        text.push_str(&format_sig17(e));
        text.push('\n');
    }
    report::emit(out, &text)
}

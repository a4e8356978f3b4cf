use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use widths_core::exec::init_thread_pool;
use widths_core::harness::{
    emit_report, exit_code, load_config, run_experiment, Experiment, ExperimentConfig, Format, SymbolKind,
    EXIT_ASSERTION, EXIT_INVALID, EXIT_PASS,
};
use widths_core::univariate::BoundaryCondition;
use widths_core::Error;

/// Verification experiments for approximation numbers of Sobolev embeddings.
///
/// Exit status: 0 all flags pass, 2 a flag failed, 3 resource limit,
/// 4 invalid configuration, 1 anything else.
#[derive(Debug, Parser)]
#[command(name = "widths", version)]
struct Cli {
    /// star | dirichlet | weyl | lemmas | spectrum1d | volume
    experiment: Experiment,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Side length of the box [0, L]^d.
    #[arg(long = "L", visible_alias = "length")]
    length: Option<f64>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// json | csv
    #[arg(long)]
    format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// dirichlet | neumann
    #[arg(long)]
    bc: Option<BoundaryCondition>,
    /// lp (Σ z_j^(2m)) | euclidean (|z|^(2m))
    #[arg(long)]
    symbol: Option<SymbolKind>,
    /// Top of the Weyl ladder.
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<u64>,
    /// Relative tolerance for convergence ratios.
    #[arg(long)]
    ratio_tolerance: Option<f64>,
    /// Smallest k_max at which the asymptotic ratio is asserted.
    #[arg(long)]
    ratio_min_k: Option<usize>,
    /// Start from the config echoed in a previous report (or a bare config file).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Perturb one checked value so the checker visibly fails.
    #[arg(long)]
    inject_fault: bool,
    /// Record wall-clock timings (reports are then no longer byte-identical).
    #[arg(long)]
    timings: bool,
}

impl Cli {
    fn into_config(self) -> Result<ExperimentConfig, Error> {
        let mut c = match &self.config {
            Some(path) => {
                let mut c = load_config(path)?;
                c.experiment = self.experiment;
                c
            }
            None => ExperimentConfig::new(self.experiment),
        };
        macro_rules! set {
            ($($field:ident <- $opt:expr),+ $(,)?) => {
                $(if let Some(v) = $opt { c.$field = v; })+
            };
        }
        set!(m <- self.m, d <- self.d, length <- self.length, k_max <- self.kmax, tol <- self.tol,
             seed <- self.seed, format <- self.format, symbol <- self.symbol);
        if self.out.is_some() {
            c.out = self.out;
        }
        if self.bc.is_some() {
            c.bc = self.bc;
        }
        if self.lambda_max.is_some() {
            c.lambda_max = self.lambda_max;
        }
        if let Some(s) = self.samples {
            c.policy.samples = s;
        }
        if let Some(t) = self.ratio_tolerance {
            c.policy.ratio_tolerance = t;
        }
        if let Some(k) = self.ratio_min_k {
            c.policy.ratio_min_k = k;
        }
        c.inject_fault |= self.inject_fault;
        c.timings |= self.timings;
        c.validate()?;
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let threads = std::env::var("WIDTHS_THREADS").ok().and_then(|v| v.parse().ok());
    init_thread_pool(threads);

    let config = match cli.into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("widths: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    let report = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("widths: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    if let Err(e) = emit_report(&report, config.format, config.out.as_deref()) {
        eprintln!("widths: {e}");
        return ExitCode::from(exit_code(&e) as u8);
    }
    for flag in &report.flags {
        let status = if flag.passed { "pass" } else { "FAIL" };
        eprintln!("{status} {} ({} checks) {}", flag.name, flag.checked, flag.detail);
    }
    if report.all_passed() {
        ExitCode::from(EXIT_PASS as u8)
    } else {
        ExitCode::from(EXIT_ASSERTION as u8)
    }
}

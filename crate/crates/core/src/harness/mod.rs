//! Verification experiments that combine exact spectra, volumes and bounds,
//! and the reports they produce.

mod emit;
mod experiments;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tensor::MultiIndex;
use crate::univariate::{BoundaryCondition, DEFAULT_TOL};

pub use emit::{emit_report, format_g17, render_csv, render_json, CSV_HEADER};
pub use experiments::{
    run_dirichlet_experiment, run_lemma_checks, run_spectrum1d, run_star_experiment, run_volume_experiment,
    run_weyl_convergence,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

macro_rules! string_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok(Self::$variant),)+
                    other => Err(Error::InvalidVariant(format!(
                        concat!(stringify!($name), " {:?}"), other
                    ))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$variant => $text,)+ })
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Star,
    Dirichlet,
    Weyl,
    Lemmas,
    Spectrum1d,
    Volume,
}

string_enum!(Experiment {
    Star => "star",
    Dirichlet => "dirichlet",
    Weyl => "weyl",
    Lemmas => "lemmas",
    Spectrum1d => "spectrum1d",
    Volume => "volume",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

string_enum!(Format { Json => "json", Csv => "csv" });

/// `Lp` is `Σ z_j^(2m)`, `Euclidean` is `|z|^(2m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    #[default]
    Lp,
    Euclidean,
}

string_enum!(SymbolKind { Lp => "lp", Euclidean => "euclidean" });

/// Harness tolerances that are choices rather than theorem content.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Policy {
    /// Allowed relative deviation of `a_k k^(m/d)` or `N(λ)/V(λ)` from its limit.
    pub ratio_tolerance: f64,
    /// The ratio is only asserted once `k_max` reaches this rank.
    pub ratio_min_k: usize,
    pub weyl_decades: usize,
    pub weyl_points_per_decade: usize,
    /// Relative tolerance of the 2D finite-difference tensorization check.
    pub fd_tolerance: f64,
    /// Above this many ranks, records are thinned (flags still see every rank).
    pub max_records: usize,
    pub samples: u64,
    /// Monte Carlo agreement in standard errors.
    pub mc_sigmas: f64,
}

impl Default for Policy {
    fn default() -> Self {
        Self {
            ratio_tolerance: 0.10,
            ratio_min_k: 10_000,
            weyl_decades: 3,
            weyl_points_per_decade: 10,
            fd_tolerance: 1e-4,
            max_records: 10_000,
            samples: 1_000_000,
            mc_sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub m: usize,
    pub d: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub k_max: usize,
    pub tol: f64,
    pub seed: u64,
    #[serde(default)]
    pub bc: Option<BoundaryCondition>,
    #[serde(default)]
    pub symbol: SymbolKind,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Top of the Weyl ladder; derived from `k_max` when absent.
    #[serde(default)]
    pub lambda_max: Option<f64>,
    #[serde(default)]
    pub policy: Policy,
    /// Perturbs one checked value so the checker can be seen to fail.
    #[serde(default)]
    pub inject_fault: bool,
    /// Wall-clock timings make reports non-reproducible, so they are opt-in.
    #[serde(default)]
    pub timings: bool,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            m: 1,
            d: 2,
            length: 2.0 * std::f64::consts::PI,
            k_max: 1000,
            tol: DEFAULT_TOL,
            seed: 0,
            bc: None,
            symbol: SymbolKind::Lp,
            format: Format::Json,
            out: None,
            lambda_max: None,
            policy: Policy::default(),
            inject_fault: false,
            timings: false,
        }
    }

    pub fn with(mut self, m: usize, d: usize, length: f64, k_max: usize) -> Self {
        self.m = m;
        self.d = d;
        self.length = length;
        self.k_max = k_max;
        self
    }

    /// Boundary condition after applying the experiment default.
    pub fn boundary(&self) -> BoundaryCondition {
        self.bc.unwrap_or(match self.experiment {
            Experiment::Star => BoundaryCondition::Neumann,
            _ => BoundaryCondition::Dirichlet,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 || self.d < 1 {
            return Err(invalid(format!("m and d must be at least 1 (got {}, {})", self.m, self.d)));
        }
        if self.k_max < 1 {
            return Err(invalid("kmax must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(invalid(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(invalid(format!("L must be positive, got {}", self.length)));
        }
        if let Some(l) = self.lambda_max {
            if !(l > 0.0 && l.is_finite()) {
                return Err(invalid(format!("lambda_max must be positive, got {l}")));
            }
        }
        let p = &self.policy;
        if !(p.ratio_tolerance > 0.0) || !(p.fd_tolerance > 0.0) || !(p.mc_sigmas > 0.0) {
            return Err(invalid("policy tolerances must be positive"));
        }
        if p.weyl_decades < 1 || p.weyl_points_per_decade < 1 || p.max_records < 1 {
            return Err(invalid("policy counts must be at least 1"));
        }
        match self.experiment {
            Experiment::Star if self.boundary() != BoundaryCondition::Neumann => {
                Err(invalid("the star experiment uses Neumann conditions"))
            }
            Experiment::Dirichlet if self.boundary() != BoundaryCondition::Dirichlet => {
                Err(invalid("the dirichlet experiment uses Dirichlet conditions"))
            }
            Experiment::Star | Experiment::Dirichlet | Experiment::Weyl
                if self.symbol == SymbolKind::Euclidean && self.m > 1 =>
            {
                Err(invalid("box spectra have symbol Σ z_j^(2m); |z|^(2m) only coincides for m = 1"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlagKind {
    /// An inequality or identity proved for the configured setting.
    Theorem,
    /// A harness tolerance (convergence ratios, statistical agreement).
    Policy,
    /// Agreement with an independent numerical oracle.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub name: String,
    pub kind: FlagKind,
    pub passed: bool,
    pub checked: u64,
    pub failures: u64,
    pub first_failure: Option<u64>,
    pub detail: String,
}

/// Accumulates pass/fail outcomes for one named flag.
#[derive(Debug, Clone)]
pub struct Check {
    name: String,
    kind: FlagKind,
    checked: u64,
    failures: u64,
    first_failure: Option<u64>,
}

impl Check {
    pub fn new(name: &str, kind: FlagKind) -> Self {
        Self { name: name.to_string(), kind, checked: 0, failures: 0, first_failure: None }
    }

    pub fn record(&mut self, at: u64, ok: bool) -> bool {
        self.checked += 1;
        if !ok {
            self.failures += 1;
            self.first_failure.get_or_insert(at);
        }
        ok
    }

    pub fn finish(self, detail: impl Into<String>) -> Flag {
        Flag {
            name: self.name,
            kind: self.kind,
            passed: self.failures == 0,
            checked: self.checked,
            failures: self.failures,
            first_failure: self.first_failure,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub k: u64,
    pub a_k: Option<f64>,
    pub witness: Option<MultiIndex>,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    pub ratio: Option<f64>,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
    /// Outcome of each flag asserted at this rank.
    #[serde(default)]
    pub flags: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub version: String,
    pub records: Vec<Record>,
    pub constants: BTreeMap<String, f64>,
    pub flags: Vec<Flag>,
    pub timings: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub(crate) fn new(config: &ExperimentConfig) -> Self {
        Self {
            config: config.clone(),
            version: VERSION.to_string(),
            records: Vec::new(),
            constants: BTreeMap::new(),
            flags: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.flags.iter().all(|f| f.passed)
    }

    pub fn flag(&self, name: &str) -> Option<&Flag> {
        self.flags.iter().find(|f| f.name == name)
    }

    pub fn failed_flags(&self) -> impl Iterator<Item = &Flag> {
        self.flags.iter().filter(|f| !f.passed)
    }
}

/// Whether rank `k` gets its own record.
///
/// Up to `max_records` ranks every rank is kept; beyond that the first 1000,
/// about 900 per later decade, and the listed extra ranks.
pub(crate) fn keep_record(k: usize, k_max: usize, max_records: usize, extra: &[usize]) -> bool {
    if k_max <= max_records || k <= 1000 || k == k_max || extra.contains(&k) {
        return true;
    }
    let digits = k.ilog10();
    k.is_multiple_of(10usize.pow(digits - 2))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let mut report = match config.experiment {
        Experiment::Star => run_star_experiment(config),
        Experiment::Dirichlet => run_dirichlet_experiment(config),
        Experiment::Weyl => run_weyl_convergence(config),
        Experiment::Lemmas => run_lemma_checks(config),
        Experiment::Spectrum1d => run_spectrum1d(config),
        Experiment::Volume => run_volume_experiment(config),
    }?;
    if config.timings {
        report.timings.insert("total_seconds".into(), start.elapsed().as_secs_f64());
    }
    Ok(report)
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

/// Process exit status for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_) | Error::InvalidVariant(_) => EXIT_INVALID,
        Error::ResourceLimit { .. } => EXIT_RESOURCE,
        Error::OracleMismatch { .. } => EXIT_ASSERTION,
        _ => EXIT_OTHER,
    }
}

/// Reads a config from a JSON file holding either a bare config or a report.
pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let value = match value.get("config") {
        Some(c) => c.clone(),
        None => value,
    };
    serde_json::from_value(value).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

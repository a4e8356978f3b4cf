//! Eigenvalues of the univariate polyharmonic operator `(-1)^m d^(2m)/dt^(2m)`
//! on `[0, L]` under Dirichlet or Neumann boundary conditions.
//!
//! Dirichlet eigenvalues are isolated as sign changes of a scaled
//! characteristic determinant, scanned in increasing `κ = λ^(1/2m)`, refined by
//! bisection and polished with a secant step. Every enclosure is intersected
//! with the a-priori bracket `(πn/L)^(2m) ≤ λ_n ≤ (π(n+m-1)/L)^(2m)`.
//! Neumann spectra are the Dirichlet spectra preceded by an `m`-fold zero.

mod determinant;
pub mod fd;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{self, Exec};
use determinant::CharacteristicMatrix;

pub use fd::{fd_oracle_eigenvalues, fd_richardson, FdOptions};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    /// `u^(j)(0) = u^(j)(L) = 0` for `j < m`.
    Dirichlet,
    /// `u^(j)(0) = u^(j)(L) = 0` for `m ≤ j < 2m`.
    Neumann,
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryCondition::Dirichlet => f.write_str("dirichlet"),
            BoundaryCondition::Neumann => f.write_str("neumann"),
        }
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            "neumann" => Ok(BoundaryCondition::Neumann),
            other => Err(Error::InvalidVariant(format!("boundary condition {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueEnclosure {
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
}

impl EigenvalueEnclosure {
    fn exact(index: usize, value: f64) -> Self {
        Self { index, lower: value, upper: value, estimate: value }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateSpectrum {
    pub m: usize,
    pub length: f64,
    pub bc: BoundaryCondition,
    pub values: Vec<EigenvalueEnclosure>,
}

impl UnivariateSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Enclosure of the `n`-th eigenvalue (1-based).
    pub fn get(&self, n: usize) -> Result<&EigenvalueEnclosure> {
        if n == 0 {
            return Err(Error::IndexOutOfRange { index: 0, len: self.len() });
        }
        self.values
            .get(n - 1)
            .ok_or(Error::IndexOutOfRange { index: n, len: self.len() })
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.values.iter().map(|e| e.estimate).collect()
    }
}

fn check_order_length(m: usize, length: f64) -> Result<()> {
    if m < 1 {
        return Err(invalid(format!("order m must be >= 1, got {m}")));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(invalid(format!("interval length must be positive, got {length}")));
    }
    Ok(())
}

/// `(π x / L)^(2m)`.
fn bracket_point(x: f64, m: usize, length: f64) -> f64 {
    (PI / length * x).powi(2 * m as i32)
}

/// A-priori bracket for the `n`-th Dirichlet eigenvalue.
pub fn eigenvalue_bracket(m: usize, length: f64, n: usize) -> Result<(f64, f64)> {
    check_order_length(m, length)?;
    if n < 1 {
        return Err(invalid("eigenvalue index must be >= 1"));
    }
    Ok((
        bracket_point(n as f64, m, length),
        bracket_point((n + m - 1) as f64, m, length),
    ))
}

/// Scaled characteristic determinant `D(λ)`; its zeros are the eigenvalues.
pub fn characteristic_determinant(
    m: usize,
    length: f64,
    bc: BoundaryCondition,
    lambda: f64,
) -> Result<f64> {
    check_order_length(m, length)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let kappa = lambda.powf(1.0 / (2 * m) as f64);
    Ok(CharacteristicMatrix::new(m).eval_kappa(kappa, length, bc))
}

/// Incremental Dirichlet eigenvalue solver.
///
/// Scans `κ` on the fixed grid `π/L · (1 + i/(4(m+1)))`, so the roots found
/// do not depend on how many were requested or on how the scan was split.
#[derive(Debug, Clone)]
pub struct DirichletSolver {
    m: usize,
    length: f64,
    tol: f64,
    exec: Exec,
    matrix: CharacteristicMatrix,
    next_grid: usize,
    prev: Option<(f64, f64)>,
    values: Vec<EigenvalueEnclosure>,
}

#[derive(Debug, Clone, Copy)]
enum Isolated {
    Bracket { a: f64, fa: f64, b: f64, fb: f64 },
    Exact(f64),
}

impl DirichletSolver {
    pub fn new(m: usize, length: f64, tol: f64) -> Result<Self> {
        check_order_length(m, length)?;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(invalid(format!("tolerance must lie in (0, 1), got {tol}")));
        }
        Ok(Self {
            m,
            length,
            tol,
            exec: Exec::default(),
            matrix: CharacteristicMatrix::new(m),
            next_grid: 0,
            prev: None,
            values: Vec::new(),
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn values(&self) -> &[EigenvalueEnclosure] {
        &self.values
    }

    fn panels_per_gap(&self) -> usize {
        4 * (self.m + 1)
    }

    fn grid_kappa(&self, i: usize) -> f64 {
        PI / self.length * (1.0 + i as f64 / self.panels_per_gap() as f64)
    }

    /// Ensures at least `n` eigenvalues are available.
    pub fn extend_to(&mut self, n: usize) -> Result<()> {
        if self.values.len() >= n {
            return Ok(());
        }
        if self.m == 1 {
            for idx in self.values.len() + 1..=n {
                let v = bracket_point(idx as f64, 1, self.length);
                self.values.push(EigenvalueEnclosure::exact(idx, v));
            }
            return Ok(());
        }
        let first_new = self.values.len() + 1;
        let isolated = self.isolate(n)?;
        let refined: Vec<Result<EigenvalueEnclosure>> =
            exec::map_range(self.exec, isolated.len(), |j| {
                self.refine(first_new + j, isolated[j])
            });
        for r in refined {
            self.values.push(r?);
        }
        self.merge_coincident(first_new);
        Ok(())
    }

    fn eval(&self, kappa: f64) -> f64 {
        self.matrix.eval_kappa(kappa, self.length, BoundaryCondition::Dirichlet)
    }

    fn isolate(&mut self, n: usize) -> Result<Vec<Isolated>> {
        let mut found = Vec::new();
        let mut have = self.values.len();
        while have < n {
            let target = have + 1;
            let kappa_max = PI / self.length * (target + self.m - 1) as f64;
            let kappa = self.grid_kappa(self.next_grid);
            if kappa > kappa_max * (1.0 + 1e-12) + PI / self.length / self.panels_per_gap() as f64 {
                return Err(Error::ConvergenceFailure {
                    index: target,
                    reason: format!("no sign change found below κ = {kappa_max}"),
                });
            }
            let f = self.eval(kappa);
            self.next_grid += 1;
            if f == 0.0 {
                found.push(Isolated::Exact(kappa));
                have += 1;
                // Next comparison uses the following nonzero sample.
                self.prev = None;
                continue;
            }
            if let Some((pk, pf)) = self.prev {
                if pf.signum() != f.signum() {
                    found.push(Isolated::Bracket { a: pk, fa: pf, b: kappa, fb: f });
                    have += 1;
                }
            }
            self.prev = Some((kappa, f));
        }
        Ok(found)
    }

    fn refine(&self, index: usize, iso: Isolated) -> Result<EigenvalueEnclosure> {
        let p = 2 * self.m as i32;
        let (lo, hi, est) = match iso {
            Isolated::Exact(k) => {
                let v = k.powi(p);
                (v, v, v)
            }
            Isolated::Bracket { mut a, mut fa, mut b, mut fb } => {
                let mut steps = 0;
                while (b.powi(p) - a.powi(p)) > self.tol * a.powi(p) {
                    if steps == MAX_BISECTIONS {
                        return Err(Error::ConvergenceFailure {
                            index,
                            reason: format!("bisection budget of {MAX_BISECTIONS} steps exhausted"),
                        });
                    }
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    let fm = self.eval(mid);
                    if fm == 0.0 {
                        a = mid;
                        b = mid;
                        fa = 0.0;
                        fb = 0.0;
                        break;
                    }
                    if fm.signum() == fa.signum() {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                        fb = fm;
                    }
                    steps += 1;
                }
                if (b.powi(p) - a.powi(p)) > self.tol * a.powi(p) {
                    return Err(Error::ConvergenceFailure {
                        index,
                        reason: "floating-point resolution reached before tolerance".into(),
                    });
                }
                // Secant polish inside the final bracket.
                let mut k = if fb != fa { a - fa * (b - a) / (fb - fa) } else { 0.5 * (a + b) };
                if !(k >= a && k <= b) {
                    k = 0.5 * (a + b);
                }
                (a.powi(p), b.powi(p), k.powi(p))
            }
        };
        let (blo, bhi) = eigenvalue_bracket(self.m, self.length, index)?;
        let lower = lo.max(blo);
        let upper = hi.min(bhi);
        if lower > upper {
            return Err(Error::ConvergenceFailure {
                index,
                reason: format!("enclosure [{lo}, {hi}] misses bracket [{blo}, {bhi}]"),
            });
        }
        Ok(EigenvalueEnclosure { index, lower, upper, estimate: est.clamp(lower, upper) })
    }

    /// Numerically coincident roots share one enclosure.
    fn merge_coincident(&mut self, first_new: usize) {
        let start = first_new.saturating_sub(2);
        for i in start.max(1)..self.values.len() {
            let (prev, cur) = (self.values[i - 1], self.values[i]);
            if cur.lower <= prev.upper {
                let lower = prev.lower.min(cur.lower);
                let upper = prev.upper.max(cur.upper);
                let estimate = (0.5 * (prev.estimate + cur.estimate)).clamp(lower, upper);
                self.values[i - 1] = EigenvalueEnclosure { index: prev.index, lower, upper, estimate };
                self.values[i] = EigenvalueEnclosure { index: cur.index, lower, upper, estimate };
            }
        }
    }

    pub fn spectrum(&self) -> UnivariateSpectrum {
        UnivariateSpectrum {
            m: self.m,
            length: self.length,
            bc: BoundaryCondition::Dirichlet,
            values: self.values.clone(),
        }
    }
}

fn check_count_tol(n_max: usize, tol: f64) -> Result<()> {
    if n_max < 1 {
        return Err(invalid("n_max must be >= 1"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    Ok(())
}

pub fn dirichlet_eigenvalues(m: usize, length: f64, n_max: usize, tol: f64) -> Result<UnivariateSpectrum> {
    dirichlet_eigenvalues_with(m, length, n_max, tol, Exec::default())
}

pub fn dirichlet_eigenvalues_with(
    m: usize,
    length: f64,
    n_max: usize,
    tol: f64,
    exec: Exec,
) -> Result<UnivariateSpectrum> {
    check_count_tol(n_max, tol)?;
    let mut solver = DirichletSolver::new(m, length, tol)?.with_exec(exec);
    solver.extend_to(n_max)?;
    let mut s = solver.spectrum();
    s.values.truncate(n_max);
    Ok(s)
}

/// Neumann spectrum from a Dirichlet one: `m` zeros, then `μ_(n+m) = λ_n`.
pub fn neumann_from_dirichlet(dirichlet: &[EigenvalueEnclosure], m: usize, n_max: usize) -> Vec<EigenvalueEnclosure> {
    (1..=n_max)
        .map_while(|idx| {
            if idx <= m {
                Some(EigenvalueEnclosure::exact(idx, 0.0))
            } else {
                dirichlet.get(idx - m - 1).map(|e| EigenvalueEnclosure { index: idx, ..*e })
            }
        })
        .collect()
}

pub fn neumann_eigenvalues(m: usize, length: f64, n_max: usize, tol: f64) -> Result<UnivariateSpectrum> {
    check_count_tol(n_max, tol)?;
    check_order_length(m, length)?;
    let dirichlet = if n_max > m {
        dirichlet_eigenvalues(m, length, n_max - m, tol)?.values
    } else {
        Vec::new()
    };
    Ok(UnivariateSpectrum {
        m,
        length,
        bc: BoundaryCondition::Neumann,
        values: neumann_from_dirichlet(&dirichlet, m, n_max),
    })
}

pub fn eigenvalues(
    m: usize,
    length: f64,
    bc: BoundaryCondition,
    n_max: usize,
    tol: f64,
) -> Result<UnivariateSpectrum> {
    match bc {
        BoundaryCondition::Dirichlet => dirichlet_eigenvalues(m, length, n_max, tol),
        BoundaryCondition::Neumann => neumann_eigenvalues(m, length, n_max, tol),
    }
}

/// Lower bound for the `n`-th univariate eigenvalue from the a-priori bracket.
pub fn a_priori_lower(m: usize, length: f64, bc: BoundaryCondition, n: usize) -> f64 {
    match bc {
        BoundaryCondition::Dirichlet => bracket_point(n as f64, m, length),
        BoundaryCondition::Neumann if n <= m => 0.0,
        BoundaryCondition::Neumann => bracket_point((n - m) as f64, m, length),
    }
}

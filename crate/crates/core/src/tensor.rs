//! Tensor spectra on the box `[0, L]^d`.
//!
//! For the operator `(-1)^m Σ_j ∂_j^(2m)` the eigenvalues on the box are the
//! sums `Σ_j ν_(n_j)` of univariate eigenvalues over multi-indices `n̄ ∈ ℕ^d`.
//! Approximation numbers are `(1 + Σ μ)^(-1/2)` for Neumann and
//! `(Σ λ)^(-1/2)` for Dirichlet conditions; ranking them means enumerating the
//! lattice in nondecreasing eigensum order.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{self, Exec};
use crate::univariate::{
    a_priori_lower, BoundaryCondition, DirichletSolver, EigenvalueEnclosure, DEFAULT_TOL,
};

/// Default cap on the best-first frontier.
pub const DEFAULT_FRONTIER_BUDGET: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn ones(d: usize) -> Self {
        Self(vec![1; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxNumberEntry {
    pub rank: usize,
    pub value: f64,
    pub witness: MultiIndex,
    pub eigensum: f64,
    pub eigensum_lower: f64,
    pub eigensum_upper: f64,
    /// Eigensum enclosure overlaps a neighbour with a different estimate.
    pub tie_within_tolerance: bool,
}

impl ApproxNumberEntry {
    /// Largest value compatible with the eigensum enclosure.
    pub fn value_upper(&self, bc: BoundaryCondition) -> f64 {
        approx_value(self.eigensum_lower, bc)
    }

    /// Smallest value compatible with the eigensum enclosure.
    pub fn value_lower(&self, bc: BoundaryCondition) -> f64 {
        approx_value(self.eigensum_upper, bc)
    }
}

/// `(1 + s)^(-1/2)` for Neumann, `s^(-1/2)` for Dirichlet.
pub fn approx_value(eigensum: f64, bc: BoundaryCondition) -> f64 {
    match bc {
        BoundaryCondition::Neumann => 1.0 / (1.0 + eigensum).sqrt(),
        BoundaryCondition::Dirichlet => 1.0 / eigensum.sqrt(),
    }
}

/// Univariate spectrum that grows on demand.
///
/// Indexing follows the boundary condition: for Neumann the first `m` entries
/// are exact zeros and entry `n + m` is Dirichlet entry `n`.
#[derive(Debug, Clone)]
pub struct LazySpectrum {
    m: usize,
    bc: BoundaryCondition,
    solver: DirichletSolver,
}

impl LazySpectrum {
    pub fn new(m: usize, length: f64, bc: BoundaryCondition, tol: f64) -> Result<Self> {
        Ok(Self { m, bc, solver: DirichletSolver::new(m, length, tol)? })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.solver = self.solver.with_exec(exec);
        self
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn m(&self) -> usize {
        self.m
    }

    fn dirichlet_index(&self, n: usize) -> Option<usize> {
        match self.bc {
            BoundaryCondition::Dirichlet => Some(n),
            BoundaryCondition::Neumann if n <= self.m => None,
            BoundaryCondition::Neumann => Some(n - self.m),
        }
    }

    /// Makes entries `1..=n` available, growing geometrically.
    pub fn ensure(&mut self, n: usize) -> Result<()> {
        if let Some(k) = self.dirichlet_index(n) {
            let have = self.solver.values().len();
            if k > have {
                self.solver.extend_to(k.max(2 * have).max(16))?;
            }
        }
        Ok(())
    }

    /// Entry `n` (1-based); [`ensure`](Self::ensure) must have covered it.
    pub fn get(&self, n: usize) -> EigenvalueEnclosure {
        match self.dirichlet_index(n) {
            None => EigenvalueEnclosure { index: n, lower: 0.0, upper: 0.0, estimate: 0.0 },
            Some(k) => EigenvalueEnclosure { index: n, ..self.solver.values()[k - 1] },
        }
    }

    pub fn available(&self) -> usize {
        match self.bc {
            BoundaryCondition::Dirichlet => self.solver.values().len(),
            BoundaryCondition::Neumann => self.solver.values().len() + self.m,
        }
    }

    pub fn snapshot(&self, n: usize) -> Result<Vec<EigenvalueEnclosure>> {
        self.ensure_clone_check(n)?;
        Ok((1..=n).map(|i| self.get(i)).collect())
    }

    fn ensure_clone_check(&self, n: usize) -> Result<()> {
        if n > self.available() {
            return Err(Error::IndexOutOfRange { index: n, len: self.available() });
        }
        Ok(())
    }
}

/// `(Σ estimate, Σ lower, Σ upper)` summed in coordinate order.
fn sums<F: Fn(usize) -> EigenvalueEnclosure>(idx: &[u32], get: F) -> (f64, f64, f64) {
    idx.iter().fold((0.0, 0.0, 0.0), |(s, lo, hi), &n| {
        let e = get(n as usize);
        (s + e.estimate, lo + e.lower, hi + e.upper)
    })
}

/// `Σ_j estimate(n_j)` over a precomputed spectrum, with its enclosure.
pub fn tensor_eigensum(nbar: &MultiIndex, spectrum: &[EigenvalueEnclosure]) -> Result<(f64, f64, f64)> {
    for &n in &nbar.0 {
        if n == 0 || n as usize > spectrum.len() {
            return Err(Error::IndexOutOfRange { index: n as usize, len: spectrum.len() });
        }
    }
    Ok(sums(&nbar.0, |n| spectrum[n - 1]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RearrangeOptions {
    pub tol: f64,
    pub frontier_budget: usize,
    pub exec: Exec,
}

impl Default for RearrangeOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, frontier_budget: DEFAULT_FRONTIER_BUDGET, exec: Exec::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationAudit {
    pub pops: u64,
    pub pushes: u64,
    pub visited: u64,
    pub frontier_high_water: u64,
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    sum: f64,
    lower: f64,
    upper: f64,
    idx: MultiIndex,
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sum.total_cmp(&other.sum).then_with(|| self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn check_rearrange(m: usize, d: usize, length: f64, k_max: usize) -> Result<()> {
    if m < 1 || d < 1 || k_max < 1 {
        return Err(invalid(format!("need m, d, k_max >= 1 (got {m}, {d}, {k_max})")));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(invalid(format!("box side must be positive, got {length}")));
    }
    Ok(())
}

/// Best-first enumeration of `ℕ^d` in nondecreasing eigensum order.
///
/// Ties are broken by the lexicographically smallest multi-index. Every
/// predecessor of a node (one coordinate decremented) has a strictly smaller
/// key, so pop order is exactly the sorted order.
pub struct Rearrangement {
    d: usize,
    spectrum: LazySpectrum,
    heap: BinaryHeap<Reverse<Node>>,
    visited: HashSet<MultiIndex>,
    budget: usize,
    audit: EnumerationAudit,
    rank: usize,
}

impl Rearrangement {
    pub fn new(m: usize, d: usize, length: f64, bc: BoundaryCondition, opts: RearrangeOptions) -> Result<Self> {
        check_rearrange(m, d, length, 1)?;
        let mut spectrum = LazySpectrum::new(m, length, bc, opts.tol)?.with_exec(opts.exec);
        spectrum.ensure(2)?;
        let mut this = Self {
            d,
            spectrum,
            heap: BinaryHeap::new(),
            visited: HashSet::new(),
            budget: opts.frontier_budget,
            audit: EnumerationAudit::default(),
            rank: 0,
        };
        this.push(MultiIndex::ones(d))?;
        Ok(this)
    }

    pub fn audit(&self) -> EnumerationAudit {
        self.audit
    }

    pub fn spectrum(&self) -> &LazySpectrum {
        &self.spectrum
    }

    fn push(&mut self, idx: MultiIndex) -> Result<()> {
        if !self.visited.insert(idx.clone()) {
            return Ok(());
        }
        let max = idx.0.iter().copied().max().unwrap_or(1) as usize;
        self.spectrum.ensure(max)?;
        let (sum, lower, upper) = sums(&idx.0, |n| self.spectrum.get(n));
        self.heap.push(Reverse(Node { sum, lower, upper, idx }));
        self.audit.pushes += 1;
        self.audit.visited = self.visited.len() as u64;
        let size = self.heap.len() as u64;
        self.audit.frontier_high_water = self.audit.frontier_high_water.max(size);
        if self.heap.len() > self.budget {
            return Err(Error::ResourceLimit {
                context: "best-first frontier".into(),
                budget: self.budget as u64,
                high_water: self.audit.frontier_high_water,
            });
        }
        Ok(())
    }

    /// Next entry of the non-increasing rearrangement.
    pub fn next_entry(&mut self) -> Result<ApproxNumberEntry> {
        let Reverse(node) = self.heap.pop().expect("lattice frontier is never empty");
        self.audit.pops += 1;
        for j in 0..self.d {
            let mut succ = node.idx.clone();
            succ.0[j] += 1;
            self.push(succ)?;
        }
        self.rank += 1;
        Ok(ApproxNumberEntry {
            rank: self.rank,
            value: approx_value(node.sum, self.spectrum.bc()),
            witness: node.idx,
            eigensum: node.sum,
            eigensum_lower: node.lower,
            eigensum_upper: node.upper,
            tie_within_tolerance: false,
        })
    }

    pub fn take(&mut self, k: usize) -> Result<Vec<ApproxNumberEntry>> {
        // Every emitted rank stays in the visited set.
        if self.visited.len() + k > self.budget {
            return Err(Error::ResourceLimit {
                context: "best-first enumeration".into(),
                budget: self.budget as u64,
                high_water: (self.visited.len() + k) as u64,
            });
        }
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            out.push(self.next_entry()?);
        }
        flag_ties(&mut out);
        Ok(out)
    }
}

fn flag_ties(entries: &mut [ApproxNumberEntry]) {
    for i in 1..entries.len() {
        let (a, b) = (&entries[i - 1], &entries[i]);
        let widths = a.eigensum_upper > a.eigensum_lower || b.eigensum_upper > b.eigensum_lower;
        if widths && a.eigensum != b.eigensum && a.eigensum_upper >= b.eigensum_lower {
            entries[i - 1].tie_within_tolerance = true;
            entries[i].tie_within_tolerance = true;
        }
    }
}

pub fn rearranged_approx_numbers(
    m: usize,
    d: usize,
    length: f64,
    bc: BoundaryCondition,
    k_max: usize,
) -> Result<Vec<ApproxNumberEntry>> {
    rearranged_approx_numbers_with(m, d, length, bc, k_max, RearrangeOptions::default())
}

pub fn rearranged_approx_numbers_with(
    m: usize,
    d: usize,
    length: f64,
    bc: BoundaryCondition,
    k_max: usize,
    opts: RearrangeOptions,
) -> Result<Vec<ApproxNumberEntry>> {
    check_rearrange(m, d, length, k_max)?;
    Rearrangement::new(m, d, length, bc, opts)?.take(k_max)
}

/// Maximum number of lattice points the brute-force oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 10_000_000;

/// Full enumeration of `{1..box_side}^d`, sorted by `(eigensum, multi-index)`.
///
/// Fails with [`Error::OracleBoxTooSmall`] unless the `k_max`-th eigensum is
/// provably below every eigensum outside the box.
pub fn brute_force_rearrangement(
    m: usize,
    d: usize,
    length: f64,
    bc: BoundaryCondition,
    box_side: usize,
    k_max: usize,
) -> Result<Vec<ApproxNumberEntry>> {
    brute_force_rearrangement_with(m, d, length, bc, box_side, k_max, RearrangeOptions::default())
}

pub fn brute_force_rearrangement_with(
    m: usize,
    d: usize,
    length: f64,
    bc: BoundaryCondition,
    box_side: usize,
    k_max: usize,
    opts: RearrangeOptions,
) -> Result<Vec<ApproxNumberEntry>> {
    check_rearrange(m, d, length, k_max)?;
    let total = (box_side as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if box_side < 1 || total > BRUTE_FORCE_LIMIT as u128 {
        return Err(invalid(format!("box {box_side}^{d} outside 1..={BRUTE_FORCE_LIMIT} points")));
    }
    let total = total as usize;
    if k_max > total {
        return Err(Error::OracleBoxTooSmall {
            box_side,
            k_max,
            kth_sum: f64::INFINITY,
            excluded_min: f64::NAN,
        });
    }
    let mut spectrum = LazySpectrum::new(m, length, bc, opts.tol)?.with_exec(opts.exec);
    spectrum.ensure(box_side.max(1))?;
    let table: Vec<EigenvalueEnclosure> = (1..=box_side).map(|n| spectrum.get(n)).collect();

    let decode = |mut lin: usize| -> Vec<u32> {
        let mut idx = vec![0u32; d];
        for j in (0..d).rev() {
            idx[j] = (lin % box_side) as u32 + 1;
            lin /= box_side;
        }
        idx
    };
    // Linear index with the first coordinate most significant, so numeric
    // order equals lexicographic order of multi-indices.
    let mut keyed: Vec<(f64, usize)> = exec::map_range(opts.exec, total, |lin| {
        let idx = decode(lin);
        (sums(&idx, |n| table[n - 1]).0, lin)
    });
    exec::sort_by(opts.exec, &mut keyed, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.truncate(k_max);

    let mut out: Vec<ApproxNumberEntry> = keyed
        .iter()
        .enumerate()
        .map(|(r, &(sum, lin))| {
            let idx = decode(lin);
            let (_, lower, upper) = sums(&idx, |n| table[n - 1]);
            ApproxNumberEntry {
                rank: r + 1,
                value: approx_value(sum, bc),
                witness: MultiIndex(idx),
                eigensum: sum,
                eigensum_lower: lower,
                eigensum_upper: upper,
                tie_within_tolerance: false,
            }
        })
        .collect();

    let kth = out.last().expect("k_max >= 1").eigensum_upper;
    let floor = match bc {
        BoundaryCondition::Neumann => 0.0,
        BoundaryCondition::Dirichlet => a_priori_lower(m, length, bc, 1),
    };
    let excluded_min = a_priori_lower(m, length, bc, box_side + 1) + (d - 1) as f64 * floor;
    if !(kth < excluded_min) {
        return Err(Error::OracleBoxTooSmall { box_side, k_max, kth_sum: kth, excluded_min });
    }
    flag_ties(&mut out);
    Ok(out)
}

/// Smallest box side (by doubling) for which the brute-force guarantee holds.
pub fn brute_force_auto(
    m: usize,
    d: usize,
    length: f64,
    bc: BoundaryCondition,
    k_max: usize,
) -> Result<Vec<ApproxNumberEntry>> {
    let mut side = ((k_max as f64).powf(1.0 / d as f64).ceil() as usize).max(2) + m;
    loop {
        match brute_force_rearrangement(m, d, length, bc, side, k_max) {
            Err(Error::OracleBoxTooSmall { .. }) => side *= 2,
            other => return other,
        }
    }
}

/// Counts `#{n̄ : Σ v_(n_j) ≤ threshold}` (or `<` when `strict`) over a
/// nondecreasing table `v`; needs `v.last() > threshold` to be exhaustive.
fn count_sublevel(exec: Exec, values: &[f64], d: usize, threshold: f64, strict: bool) -> u64 {
    let admits = |s: f64| if strict { s < threshold } else { s <= threshold };
    fn rec(values: &[f64], left: usize, partial: f64, admits: &dyn Fn(f64) -> bool) -> u64 {
        if left == 1 {
            return values.partition_point(|&v| admits(partial + v)) as u64;
        }
        let mut total = 0;
        for &v in values {
            if !admits(partial + v) {
                break;
            }
            total += rec(values, left - 1, partial + v, admits);
        }
        total
    }
    if d == 1 {
        return rec(values, 1, 0.0, &admits);
    }
    let first = values.partition_point(|&v| admits(v));
    exec::sum_range_u64(exec, first, |i| rec(values, d - 1, values[i], &admits))
}

/// `C(l, d) = #{n̄ ∈ ℕ^d : Σ μ_(n_j) ≤ μ_l}` for a Neumann spectrum.
pub fn counting_c(l: usize, d: usize, spectrum: &[EigenvalueEnclosure]) -> Result<u64> {
    if l < 1 || d < 1 {
        return Err(invalid("counting C needs l, d >= 1"));
    }
    let threshold = spectrum
        .get(l - 1)
        .ok_or(Error::IndexOutOfRange { index: l, len: spectrum.len() })?
        .estimate;
    let values: Vec<f64> = spectrum.iter().map(|e| e.estimate).collect();
    if values.last().is_none_or(|&v| v <= threshold) {
        return Err(Error::IndexOutOfRange { index: spectrum.len() + 1, len: spectrum.len() });
    }
    Ok(count_sublevel(Exec::default(), &values, d, threshold, false))
}

/// Convenience wrapper that builds a long enough Neumann spectrum.
pub fn counting_c_for(l: usize, d: usize, m: usize, length: f64, tol: f64) -> Result<u64> {
    let mut lazy = LazySpectrum::new(m, length, BoundaryCondition::Neumann, tol)?;
    let mut n = l.max(m) + 2;
    loop {
        lazy.ensure(n)?;
        let snap = lazy.snapshot(n)?;
        match counting_c(l, d, &snap) {
            Err(Error::IndexOutOfRange { .. }) => n *= 2,
            other => return other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountResult {
    /// Count using eigensum estimates.
    pub count: u64,
    /// Count if every eigensum sat at its lower enclosure end.
    pub count_if_lower: u64,
    /// Count if every eigensum sat at its upper enclosure end.
    pub count_if_upper: u64,
    pub ambiguous: bool,
}

/// Budget on lattice points visited by the counting function.
pub const COUNT_BUDGET: u64 = 1 << 31;

/// Weyl counting function: tensor eigenvalues strictly below `lambda_cut`.
pub fn counting_n(
    lambda_cut: f64,
    m: usize,
    d: usize,
    length: f64,
    bc: BoundaryCondition,
) -> Result<CountResult> {
    counting_n_with(lambda_cut, m, d, length, bc, DEFAULT_TOL, Exec::default())
}

pub fn counting_n_with(
    lambda_cut: f64,
    m: usize,
    d: usize,
    length: f64,
    bc: BoundaryCondition,
    tol: f64,
    exec: Exec,
) -> Result<CountResult> {
    check_rearrange(m, d, length, 1)?;
    if !(lambda_cut > 0.0 && lambda_cut.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda_cut}")));
    }
    // (πn/L)^(2m) ≤ λ_n bounds the univariate indices that can contribute.
    let reach = length / std::f64::consts::PI * lambda_cut.powf(1.0 / (2 * m) as f64);
    let offset = if bc == BoundaryCondition::Neumann { m } else { 0 };
    let n_needed = reach.floor() as usize + 1 + offset;
    let estimate = (reach + 1.0).powi(d as i32);
    if estimate > COUNT_BUDGET as f64 {
        return Err(Error::ResourceLimit {
            context: "Weyl counting enumeration".into(),
            budget: COUNT_BUDGET,
            high_water: estimate.min(u64::MAX as f64) as u64,
        });
    }
    let mut lazy = LazySpectrum::new(m, length, bc, tol)?.with_exec(exec);
    lazy.ensure(n_needed)?;
    let table = lazy.snapshot(n_needed)?;
    let est: Vec<f64> = table.iter().map(|e| e.estimate).collect();
    let lo: Vec<f64> = table.iter().map(|e| e.lower).collect();
    let hi: Vec<f64> = table.iter().map(|e| e.upper).collect();
    let count = count_sublevel(exec, &est, d, lambda_cut, true);
    let count_if_lower = count_sublevel(exec, &lo, d, lambda_cut, true);
    let count_if_upper = count_sublevel(exec, &hi, d, lambda_cut, true);
    Ok(CountResult {
        count,
        count_if_lower,
        count_if_upper,
        ambiguous: count_if_lower != count_if_upper,
    })
}

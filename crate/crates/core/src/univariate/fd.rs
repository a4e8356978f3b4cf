//! Finite-difference oracle for polyharmonic eigenvalues.
//!
//! The discrete problem is variational: the energy `∫|u^(m)|²` is replaced by
//! a weighted sum of squared `m`-th differences `Σ_r w_r (D u)_r²`, the `L₂`
//! product by a diagonal mass. Dirichlet conditions pad the unknowns with
//! zeros and place the boundary at the centre of each block of `m` zero
//! nodes, so `u, …, u^(m-1)` vanish there to second order and `h = L/(N+m)`.
//! Neumann conditions are natural (only differences that fit in the grid
//! enter the energy).
//!
//! The smallest eigenvalues are computed by block inverse iteration on a
//! banded Cholesky factorisation followed by Rayleigh-Ritz, where the
//! projected stiffness is evaluated from the differences `D X` rather than
//! from the assembled matrix. That keeps small eigenvalues accurate even
//! though the assembled matrix has condition number of order `h^(-2m)`.
//!
//! For a fixed index the relative discretisation error is `O(h²)`.

use nalgebra::{DMatrix, SymmetricEigen};

use super::BoundaryCondition;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    /// Maximum block inverse-iteration sweeps.
    pub max_sweeps: usize,
    /// Relative change of the wanted Ritz values that counts as converged.
    pub rtol: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self { max_sweeps: 2000, rtol: 1e-14 }
    }
}

#[derive(Debug, Clone)]
struct Row {
    weight: f64,
    entries: Vec<(usize, f64)>,
}

/// Discrete energy `Σ w (row · u)²` with diagonal mass.
#[derive(Debug, Clone)]
pub(crate) struct QuadraticForm {
    n: usize,
    rows: Vec<Row>,
    mass: Vec<f64>,
    /// Multiply discrete eigenvalues by this to get physical units.
    scale: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients of the forward `m`-th difference.
fn difference_stencil(m: usize) -> Vec<f64> {
    (0..=m)
        .map(|k| if (m - k).is_multiple_of(2) { binomial(m, k) } else { -binomial(m, k) })
        .collect()
}

/// 1D rows of the `m`-th difference operator.
///
/// Dirichlet: unknowns are nodes `1..=N`; every other node is zero and the
/// boundary sits at the centre of each block of `m` zeros. Every window that
/// touches an unknown contributes.
/// Neumann: unknowns are all `N+2` nodes; windows must fit inside the grid.
fn rows_1d(m: usize, interior: usize, bc: BoundaryCondition) -> Vec<Row> {
    let stencil = difference_stencil(m);
    let (n, first, last) = match bc {
        BoundaryCondition::Dirichlet => (interior as i64, 1 - m as i64, interior as i64),
        BoundaryCondition::Neumann => (interior as i64 + 2, 0, interior as i64 + 1 - m as i64),
    };
    let offset = if bc == BoundaryCondition::Dirichlet { 1 } else { 0 };
    (first..=last)
        .filter_map(|start| {
            let entries: Vec<(usize, f64)> = stencil
                .iter()
                .enumerate()
                .filter_map(|(k, &c)| {
                    let col = start + k as i64 - offset;
                    (0..n).contains(&col).then_some((col as usize, c))
                })
                .collect();
            (!entries.is_empty()).then_some(Row { weight: 1.0, entries })
        })
        .collect()
}

/// Grid spacing for `interior` unknowns.
fn spacing(m: usize, length: f64, interior: usize, bc: BoundaryCondition) -> f64 {
    match bc {
        BoundaryCondition::Dirichlet => length / (interior + m) as f64,
        BoundaryCondition::Neumann => length / (interior + 1) as f64,
    }
}

impl QuadraticForm {
    pub(crate) fn interval(m: usize, length: f64, interior: usize, bc: BoundaryCondition) -> Self {
        let h = spacing(m, length, interior, bc);
        let rows = rows_1d(m, interior, bc);
        let (n, mass) = match bc {
            BoundaryCondition::Dirichlet => (interior, vec![1.0; interior]),
            BoundaryCondition::Neumann => {
                let mut mass = vec![1.0; interior + 2];
                mass[0] = 0.5;
                mass[interior + 1] = 0.5;
                (interior + 2, mass)
            }
        };
        Self { n, rows, mass, scale: h.powi(-2 * m as i32) }
    }

    /// Dirichlet square `[0, L]²`, unknown `(ix, iy)` at index `ix + N·iy`.
    pub(crate) fn dirichlet_square(m: usize, length: f64, interior: usize) -> Self {
        let h = spacing(m, length, interior, BoundaryCondition::Dirichlet);
        let line = rows_1d(m, interior, BoundaryCondition::Dirichlet);
        let mut rows = Vec::with_capacity(2 * interior * line.len());
        for fixed in 0..interior {
            for r in &line {
                rows.push(Row {
                    weight: r.weight,
                    entries: r.entries.iter().map(|&(c, v)| (c + interior * fixed, v)).collect(),
                });
                rows.push(Row {
                    weight: r.weight,
                    entries: r.entries.iter().map(|&(c, v)| (fixed + interior * c, v)).collect(),
                });
            }
        }
        let n = interior * interior;
        Self { n, rows, mass: vec![1.0; n], scale: h.powi(-2 * m as i32) }
    }

    fn bandwidth(&self) -> usize {
        self.rows
            .iter()
            .map(|r| {
                let lo = r.entries.iter().map(|e| e.0).min().unwrap_or(0);
                let hi = r.entries.iter().map(|e| e.0).max().unwrap_or(0);
                hi - lo
            })
            .max()
            .unwrap_or(0)
    }

    /// `Σ w (row·x)(row·y)`.
    fn energy(&self, x: &[f64], y: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let dx: f64 = r.entries.iter().map(|&(c, v)| v * x[c]).sum();
                let dy: f64 = r.entries.iter().map(|&(c, v)| v * y[c]).sum();
                r.weight * dx * dy
            })
            .sum()
    }

    fn assemble(&self, shift: f64) -> Banded {
        let mut band = Banded::zeros(self.n, self.bandwidth());
        for r in &self.rows {
            for &(i, a) in &r.entries {
                for &(j, b) in &r.entries {
                    if j <= i {
                        band.add(i, j, r.weight * a * b);
                    }
                }
            }
        }
        for (i, &mi) in self.mass.iter().enumerate() {
            band.add(i, i, shift * mi);
        }
        band
    }
}

/// Symmetric banded matrix, lower band stored row-wise.
#[derive(Debug, Clone)]
struct Banded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl Banded {
    fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (self.bw + j - i)
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    /// In-place Cholesky `A = G Gᵀ`; fails on a non-positive pivot.
    fn cholesky(mut self) -> Option<Self> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = self.get(i, j);
                for k in k0..j {
                    s -= self.get(i, k) * self.get(j, k);
                }
                let slot = self.idx(i, j);
                if i == j {
                    if !(s > 0.0) {
                        return None;
                    }
                    self.data[slot] = s.sqrt();
                } else {
                    self.data[slot] = s / self.get(j, j);
                }
            }
        }
        Some(self)
    }

    #[allow(clippy::needless_range_loop)]
    fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.get(i, k) * x[k];
            }
            x[i] = s / self.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.get(k, i) * x[k];
            }
            x[i] = s / self.get(i, i);
        }
    }
}

/// Smallest `count` eigenvalues of `E(u) = λ M(u)`, in physical units.
fn smallest_eigenvalues(form: &QuadraticForm, count: usize, shift: f64, opts: FdOptions) -> Result<Vec<f64>> {
    let n = form.n;
    let block = (count + count.div_ceil(2).max(4)).min(n);
    let factor = form.assemble(shift).cholesky().ok_or_else(|| {
        invalid("finite-difference matrix is numerically singular at this resolution")
    })?;

    // Deterministic, non-degenerate start block.
    let mut x: Vec<Vec<f64>> = (0..block)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let t = (i as f64 + 0.5) / n as f64;
                    ((j + 1) as f64 * std::f64::consts::PI * t).sin() + 1e-3 * ((i * 7 + j * 13) % 17) as f64
                })
                .collect()
        })
        .collect();

    let mut prev: Option<Vec<f64>> = None;
    for _ in 0..opts.max_sweeps {
        // y = K⁻¹ M x, normalised in the mass norm.
        for col in x.iter_mut() {
            for (v, &mi) in col.iter_mut().zip(&form.mass) {
                *v *= mi;
            }
            factor.solve_in_place(col);
            let nrm = col.iter().zip(&form.mass).map(|(v, &mi)| mi * v * v).sum::<f64>().sqrt();
            col.iter_mut().for_each(|v| *v /= nrm);
        }
        let (ritz, vecs) = rayleigh_ritz(form, &x)?;
        x = vecs;
        let wanted: Vec<f64> = ritz[..count].to_vec();
        let done = prev.as_ref().is_some_and(|p: &Vec<f64>| {
            p.iter().zip(&wanted).all(|(a, b)| {
                let scale = b.abs().max(ritz[count.min(block - 1)].abs() * 1e-8);
                (a - b).abs() <= opts.rtol * scale
            })
        });
        prev = Some(wanted);
        if done {
            break;
        }
    }
    let vals = prev.expect("at least one sweep");
    Ok(vals.into_iter().map(|v| v * form.scale).collect())
}

/// Rayleigh-Ritz on span(x): returns ascending Ritz values and M-orthonormal vectors.
fn rayleigh_ritz(form: &QuadraticForm, x: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let p = x.len();
    let mut k = DMatrix::<f64>::zeros(p, p);
    let mut mm = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        for j in 0..=i {
            let e = form.energy(&x[i], &x[j]);
            let g: f64 = x[i].iter().zip(&x[j]).zip(&form.mass).map(|((a, b), &w)| w * a * b).sum();
            k[(i, j)] = e;
            k[(j, i)] = e;
            mm[(i, j)] = g;
            mm[(j, i)] = g;
        }
    }
    let chol = mm.cholesky().ok_or_else(|| invalid("Ritz basis lost linear independence"))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| invalid("Ritz basis lost linear independence"))?;
    let s = &linv * &k * linv.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    // Coefficients of Ritz vectors in the x basis: L⁻ᵀ Q.
    let coeff = linv.transpose() * &eig.eigenvectors;
    let n = x[0].len();
    let vecs = order
        .iter()
        .map(|&c| {
            let mut v = vec![0.0; n];
            for (j, xj) in x.iter().enumerate() {
                let a = coeff[(j, c)];
                v.iter_mut().zip(xj).for_each(|(vi, &xv)| *vi += a * xv);
            }
            v
        })
        .collect();
    let vals = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    Ok((vals, vecs))
}

/// Smallest `n_max` eigenvalues of the finite-difference discretisation with
/// `grid_points` interior nodes. Requires `grid_points ≥ 8 (n_max + 2m)`.
pub fn fd_oracle_eigenvalues(
    m: usize,
    length: f64,
    bc: BoundaryCondition,
    n_max: usize,
    grid_points: usize,
) -> Result<Vec<f64>> {
    fd_oracle_eigenvalues_with(m, length, bc, n_max, grid_points, FdOptions::default())
}

pub fn fd_oracle_eigenvalues_with(
    m: usize,
    length: f64,
    bc: BoundaryCondition,
    n_max: usize,
    grid_points: usize,
    opts: FdOptions,
) -> Result<Vec<f64>> {
    if m < 1 || !(length > 0.0) || n_max < 1 {
        return Err(invalid("fd oracle needs m >= 1, L > 0, n_max >= 1"));
    }
    let required = 8 * (n_max + 2 * m);
    if grid_points < required {
        return Err(Error::InsufficientResolution { grid_points, required });
    }
    let form = QuadraticForm::interval(m, length, grid_points, bc);
    let shift = match bc {
        BoundaryCondition::Dirichlet => 0.0,
        // Lift the m-dimensional kernel to roughly the first positive eigenvalue.
        BoundaryCondition::Neumann => (std::f64::consts::PI / length).powi(2 * m as i32) / form.scale,
    };
    // Ritz values come from the unshifted energy; the shift only conditions the solve.
    smallest_eigenvalues(&form, n_max, shift, opts)
}

/// Richardson extrapolation in `h²` over grids with `N+1` doubling each level.
///
/// `coarse` interior points define the first grid; `levels ≥ 2` grids are used
/// and the extrapolation table is eliminated for `h², h³, …` in turn.
pub fn fd_richardson(
    m: usize,
    length: f64,
    bc: BoundaryCondition,
    n_max: usize,
    coarse: usize,
    levels: usize,
) -> Result<Vec<f64>> {
    if levels < 2 {
        return Err(invalid("Richardson extrapolation needs at least two grids"));
    }
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels);
    let mut cells = coarse + 1;
    for _ in 0..levels {
        table.push(fd_oracle_eigenvalues(m, length, bc, n_max, cells - 1)?);
        cells *= 2;
    }
    richardson_table(table)
}

fn richardson_table(mut table: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let mut order = 2;
    while table.len() > 1 {
        let f = 2f64.powi(order);
        table = table
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(c, fine)| (f * fine - c) / (f - 1.0)).collect())
            .collect();
        order += 1;
    }
    Ok(table.pop().expect("non-empty"))
}

/// Smallest eigenvalues of the Dirichlet square `[0, L]²` discretised directly.
pub fn fd_square_dirichlet(m: usize, length: f64, n_max: usize, grid_points: usize) -> Result<Vec<f64>> {
    let required = 2 * (n_max + 2 * m);
    if grid_points < required {
        return Err(Error::InsufficientResolution { grid_points, required });
    }
    let form = QuadraticForm::dirichlet_square(m, length, grid_points);
    smallest_eigenvalues(&form, n_max, 0.0, FdOptions::default())
}

/// Richardson-extrapolated square eigenvalues over `levels` grids.
pub fn fd_square_richardson(m: usize, length: f64, n_max: usize, coarse: usize, levels: usize) -> Result<Vec<f64>> {
    if levels < 2 {
        return Err(invalid("Richardson extrapolation needs at least two grids"));
    }
    let mut table = Vec::with_capacity(levels);
    let mut cells = coarse + 1;
    for _ in 0..levels {
        table.push(fd_square_dirichlet(m, length, n_max, cells - 1)?);
        cells *= 2;
    }
    richardson_table(table)
}

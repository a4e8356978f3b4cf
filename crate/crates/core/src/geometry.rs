//! Volumes of `ℓ_p` balls and symbol sublevel sets, and lattice counts.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::exec::{self, Exec};

/// `Σ_α z^(2α)` over a support of multi-indices with `|α| = m`.
///
/// Coefficients are implicitly one; every `α` in the support is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomogeneousSymbol {
    m: usize,
    d: usize,
    support: BTreeSet<Vec<u32>>,
}

impl HomogeneousSymbol {
    pub fn new(m: usize, d: usize, support: impl IntoIterator<Item = Vec<u32>>) -> Result<Self> {
        if m < 1 || d < 1 {
            return Err(invalid(format!("symbol needs m, d >= 1 (got {m}, {d})")));
        }
        let support: BTreeSet<Vec<u32>> = support.into_iter().collect();
        if support.is_empty() {
            return Err(invalid("symbol needs at least one nonzero coefficient"));
        }
        for alpha in &support {
            let order: u32 = alpha.iter().sum();
            if alpha.len() != d || order as usize != m {
                return Err(invalid(format!("multi-index {alpha:?} is not of order {m} in dimension {d}")));
            }
        }
        Ok(Self { m, d, support })
    }

    /// `Σ_j z_j^(2m)`, whose unit sublevel set is the `ℓ_(2m)` ball.
    pub fn power_sum(m: usize, d: usize) -> Result<Self> {
        Self::new(m, d, (0..d).map(|j| {
            let mut a = vec![0; d];
            a[j] = m as u32;
            a
        }))
    }

    /// All multi-indices of order `m`.
    pub fn complete(m: usize, d: usize) -> Result<Self> {
        fn rec(left: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if slots == 1 {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
                return;
            }
            for a in 0..=left {
                cur.push(a);
                rec(left - a, slots - 1, cur, out);
                cur.pop();
            }
        }
        if d < 1 {
            return Err(invalid("symbol needs d >= 1"));
        }
        let mut out = Vec::new();
        rec(m as u32, d, &mut Vec::new(), &mut out);
        Self::new(m, d, out)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn support(&self) -> impl Iterator<Item = &[u32]> {
        self.support.iter().map(Vec::as_slice)
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.support
            .iter()
            .map(|alpha| alpha.iter().zip(z).map(|(&a, &x)| (x * x).powi(a as i32)).product::<f64>())
            .sum()
    }

    /// Every pure power `z_j^(2m)` is present.
    ///
    /// All terms are nonnegative, so this gives `a(z) ≥ max_j z_j^(2m)` and a
    /// sublevel set inside `[-1, 1]^d`; without it `a` vanishes on an axis.
    pub fn is_coercive(&self) -> bool {
        self.first_degenerate_axis().is_none()
    }

    fn first_degenerate_axis(&self) -> Option<usize> {
        (0..self.d).find(|&j| {
            !self.support.iter().any(|a| a[j] as usize == self.m)
        })
    }

    fn is_power_sum(&self) -> bool {
        self.support.len() == self.d && self.is_coercive()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Symbol {
    Polynomial(HomogeneousSymbol),
    /// `|z|^(2m)`; its expansion has multinomial coefficients, so it is kept
    /// apart from the `{0, 1}` symbols.
    Euclidean { m: usize, d: usize },
}

impl Symbol {
    pub fn lp(m: usize, d: usize) -> Result<Self> {
        HomogeneousSymbol::power_sum(m, d).map(Self::Polynomial)
    }

    pub fn euclidean(m: usize, d: usize) -> Result<Self> {
        if m < 1 || d < 1 {
            return Err(invalid(format!("symbol needs m, d >= 1 (got {m}, {d})")));
        }
        Ok(Self::Euclidean { m, d })
    }

    pub fn m(&self) -> usize {
        match self {
            Self::Polynomial(s) => s.m,
            Self::Euclidean { m, .. } => *m,
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Self::Polynomial(s) => s.d,
            Self::Euclidean { d, .. } => *d,
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        match self {
            Self::Polynomial(s) => s.eval(z),
            Self::Euclidean { m, .. } => z.iter().map(|x| x * x).sum::<f64>().powi(*m as i32),
        }
    }

    /// Closed-form `vol{a < 1}` when the sublevel set is a known ball.
    pub fn exact_volume(&self) -> Option<f64> {
        match self {
            Self::Polynomial(s) if s.is_power_sum() => volume_lp_ball_exact(s.d, 2.0 * s.m as f64).ok(),
            Self::Polynomial(_) => None,
            Self::Euclidean { d, .. } => volume_lp_ball_exact(*d, 2.0).ok(),
        }
    }

    /// Half-side of a box containing `{a < 1}`.
    fn bounding_radius(&self) -> Result<f64> {
        match self {
            Self::Polynomial(s) => match s.first_degenerate_axis() {
                Some(axis) => Err(Error::UnboundedSublevel { axis }),
                None => Ok(1.0),
            },
            Self::Euclidean { .. } => Ok(1.0),
        }
    }
}

/// `vol B^d_p = 2^d Γ(1 + 1/p)^d / Γ(1 + d/p)`.
pub fn volume_lp_ball_exact(d: usize, p: f64) -> Result<f64> {
    if d < 1 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid(format!("p must be positive and finite, got {p}")));
    }
    let d_f = d as f64;
    Ok((d_f * std::f64::consts::LN_2 + d_f * ln_gamma(1.0 + 1.0 / p) - ln_gamma(1.0 + d_f / p)).exp())
}

/// `(2^d (e(d+2m))^(-d/2m), 2^d (2em/d)^(d/2m))`, a sandwich for `vol B^d_(2m)`.
pub fn volume_b2m_bounds(d: usize, m: usize) -> Result<(f64, f64)> {
    if d < 1 || m < 1 {
        return Err(invalid(format!("need d, m >= 1 (got {d}, {m})")));
    }
    let (d_f, m_f) = (d as f64, m as f64);
    let e = std::f64::consts::E;
    let two_d = 2f64.powi(d as i32);
    let lower = two_d * (e * (d_f + 2.0 * m_f)).powf(-d_f / (2.0 * m_f));
    let upper = two_d * (2.0 * e * m_f / d_f).powf(d_f / (2.0 * m_f));
    Ok((lower, upper))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl VolumeEstimate {
    /// `|mean - value| ≤ k · standard_error`, with a rounding floor for the
    /// zero-variance case where the sampling box lies inside the sublevel set.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.standard_error.max(1e-12 * value.abs())
    }
}

/// Samples per independently keyed block of the random stream.
const MC_CHUNK: u64 = 4096;

/// Minimum number of Monte Carlo samples.
pub const MIN_SAMPLES: u64 = 1000;

pub fn volume_sublevel_mc(symbol: &Symbol, samples: u64, seed: u64) -> Result<VolumeEstimate> {
    volume_sublevel_mc_with(symbol, 1.0, samples, seed, Exec::default())
}

/// Estimates `vol{z : a(z) < level}` by rejection sampling.
///
/// Sample `i` uses words `2d·i ..` of the ChaCha8 stream keyed by `seed`, so
/// the estimate does not depend on how samples are split across workers.
pub fn volume_sublevel_mc_with(
    symbol: &Symbol,
    level: f64,
    samples: u64,
    seed: u64,
    exec: Exec,
) -> Result<VolumeEstimate> {
    if samples < MIN_SAMPLES {
        return Err(invalid(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    if !(level > 0.0 && level.is_finite()) {
        return Err(invalid(format!("level must be positive, got {level}")));
    }
    let d = symbol.d();
    let rho = symbol.bounding_radius()? * level.powf(1.0 / (2 * symbol.m()) as f64);
    let chunks = samples.div_ceil(MC_CHUNK);
    let words_per_sample = 2 * d as u128;
    let hits = exec::sum_range_u64(exec, chunks as usize, |c| {
        let start = c as u64 * MC_CHUNK;
        let end = (start + MC_CHUNK).min(samples);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(start as u128 * words_per_sample);
        let mut z = vec![0.0; d];
        let mut hits = 0;
        for _ in start..end {
            for x in z.iter_mut() {
                *x = rho * (2.0 * rng.random::<f64>() - 1.0);
            }
            if symbol.eval(&z) < level {
                hits += 1;
            }
        }
        hits
    });
    let box_volume = (2.0 * rho).powi(d as i32);
    let n = samples as f64;
    let p = hits as f64 / n;
    Ok(VolumeEstimate {
        mean: box_volume * p,
        standard_error: box_volume * (p * (1.0 - p) / n).sqrt(),
        samples,
        seed,
    })
}

/// `V(λ) = V₁ λ^(d/2m)` and `∫_{a<λ} a = d/(2m+d) · V₁ λ^((2m+d)/2m)`.
pub fn sublevel_scaling(v1: f64, lambda: f64, m: usize, d: usize) -> Result<(f64, f64)> {
    if !(v1 >= 0.0) || !(lambda > 0.0) || m < 1 || d < 1 {
        return Err(invalid("sublevel scaling needs V1 >= 0, lambda > 0, m, d >= 1"));
    }
    let (m_f, d_f) = (m as f64, d as f64);
    let v = v1 * lambda.powf(d_f / (2.0 * m_f));
    let integral = d_f / (2.0 * m_f + d_f) * v1 * lambda.powf((2.0 * m_f + d_f) / (2.0 * m_f));
    Ok((v, integral))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeCount {
    pub count: u64,
    /// Clamped to zero when `r ≤ d^(1/p)`.
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// `r > d^(1/p)`, where the lower bound is asserted.
    pub lower_valid: bool,
}

impl LatticeCount {
    pub fn sandwich_holds(&self) -> bool {
        self.lower_bound <= self.count as f64 && self.count as f64 <= self.upper_bound
    }
}

/// Budget on `r^d`, the size of the enumerated box.
pub const LATTICE_BUDGET: u64 = 1 << 34;

pub fn lattice_count(r: f64, d: usize, p: f64) -> Result<LatticeCount> {
    lattice_count_with(r, d, p, Exec::default())
}

/// `#{k̄ ∈ ℕ^d : ‖k̄‖_p ≤ r}` with the sandwich `2^(-d)(r ∓ d^(1/p))^d vol B^d_p`.
pub fn lattice_count_with(r: f64, d: usize, p: f64, exec: Exec) -> Result<LatticeCount> {
    if !(r > 0.0 && r.is_finite()) || d < 1 || !(p >= 1.0 && p.is_finite()) {
        return Err(invalid(format!("lattice count needs r > 0, d >= 1, p >= 1 (got {r}, {d}, {p})")));
    }
    let size = r.powi(d as i32);
    if size > LATTICE_BUDGET as f64 {
        return Err(Error::ResourceLimit {
            context: "lattice enumeration".into(),
            budget: LATTICE_BUDGET,
            high_water: size.min(u64::MAX as f64) as u64,
        });
    }
    let pow = |k: u64| -> f64 {
        if p.fract() == 0.0 {
            (k as f64).powi(p as i32)
        } else {
            (k as f64).powf(p)
        }
    };
    let budget = if p.fract() == 0.0 { r.powi(p as i32) } else { r.powf(p) };
    let kmax = r.floor() as u64;
    let table: Vec<f64> = (1..=kmax).map(pow).collect();

    fn rec(table: &[f64], left: usize, room: f64) -> u64 {
        if left == 1 {
            return table.partition_point(|&v| v <= room) as u64;
        }
        let mut total = 0;
        for &v in table {
            if v > room {
                break;
            }
            total += rec(table, left - 1, room - v);
        }
        total
    }
    let count = if d == 1 {
        rec(&table, 1, budget)
    } else {
        let first = table.partition_point(|&v| v <= budget);
        exec::sum_range_u64(exec, first, |i| rec(&table, d - 1, budget - table[i]))
    };

    let vol = volume_lp_ball_exact(d, p)?;
    let reach = (d as f64).powf(1.0 / p);
    let scale = 2f64.powi(-(d as i32)) * vol;
    let lower_valid = r > reach;
    let lower_bound = if lower_valid { scale * (r - reach).powi(d as i32) } else { 0.0 };
    let upper_bound = scale * (r + reach).powi(d as i32);
    Ok(LatticeCount { count, lower_bound, upper_bound, lower_valid })
}

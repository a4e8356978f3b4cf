//! Closed-form bounds, thresholds and asymptotic constants for approximation
//! numbers of Sobolev embeddings.
//!
//! Throughout, `Θ = vol Ω / (2π)^d · vol A` where `A = {a < 1}` is the unit
//! sublevel set of the symbol.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::volume_lp_ball_exact;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    DirichletUpper,
    NeumannLower,
    StarUpper,
    StarLower,
    EpsilonUpper,
    EpsilonLower,
    ExampleStar,
    ExampleLaplacePower,
    ExampleFractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEvaluation {
    pub k: u64,
    pub value: f64,
    pub kind: BoundKind,
    /// Smallest real rank from which the bound is asserted.
    pub valid_from: f64,
    pub formula_id: FormulaId,
}

impl BoundEvaluation {
    /// `⌈valid_from⌉`, at least one.
    pub fn valid_from_rank(&self) -> u64 {
        threshold_rank(self.valid_from)
    }

    pub fn applies(&self) -> bool {
        self.k >= self.valid_from_rank()
    }

    /// Whether `a_k` satisfies the bound (strictly checked, no tolerance).
    pub fn admits(&self, a_k: f64) -> bool {
        match self.kind {
            BoundKind::Upper => a_k <= self.value,
            BoundKind::Lower => a_k >= self.value,
        }
    }
}

/// `⌈t⌉` as a rank, at least one.
pub fn threshold_rank(t: f64) -> u64 {
    if t <= 1.0 {
        1
    } else {
        t.ceil() as u64
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

fn check(k: u64, m: usize, d: usize, vol_omega: f64, vol_a: f64) -> Result<()> {
    if k < 1 || m < 1 || d < 1 {
        return Err(invalid(format!("need k, m, d >= 1 (got {k}, {m}, {d})")));
    }
    positive("vol_omega", vol_omega)?;
    positive("vol_A", vol_a)
}

fn theta(d: usize, vol_omega: f64, vol_a: f64) -> f64 {
    vol_omega / (2.0 * PI).powi(d as i32) * vol_a
}

/// `√((2m+d)/d) · Θ^(m/d) · k^(-m/d)`, an upper bound for Dirichlet `a_k`.
pub fn dirichlet_upper_bound(k: u64, m: usize, d: usize, vol_omega: f64, vol_a: f64) -> Result<BoundEvaluation> {
    check(k, m, d, vol_omega, vol_a)?;
    let (m_f, d_f) = (m as f64, d as f64);
    let value = ((2.0 * m_f + d_f) / d_f).sqrt()
        * theta(d, vol_omega, vol_a).powf(m_f / d_f)
        * (k as f64).powf(-m_f / d_f);
    Ok(BoundEvaluation { k, value, kind: BoundKind::Upper, valid_from: 1.0, formula_id: FormulaId::DirichletUpper })
}

/// `[1 + ((2m+d)/2m)^(2m/d) Θ^(-2m/d) k^(2m/d)]^(-1/2)`, a lower bound for
/// Neumann `a_(k+1)`.
pub fn neumann_lower_bound(k: u64, m: usize, d: usize, vol_omega: f64, vol_a: f64) -> Result<BoundEvaluation> {
    check(k, m, d, vol_omega, vol_a)?;
    let (m_f, d_f) = (m as f64, d as f64);
    let e = 2.0 * m_f / d_f;
    let inner = ((2.0 * m_f + d_f) / (2.0 * m_f)).powf(e)
        * theta(d, vol_omega, vol_a).powf(-e)
        * (k as f64).powf(e);
    Ok(BoundEvaluation {
        k,
        value: 1.0 / (1.0 + inner).sqrt(),
        kind: BoundKind::Lower,
        valid_from: 1.0,
        formula_id: FormulaId::NeumannLower,
    })
}

/// `d/(2m+d) · Θ^(-2m/d) · k^((2m+d)/d)`.
///
/// Upper bound for `Σ_(j≤k) μ_j` (Neumann) and lower bound for
/// `Σ_(j≤k) λ_j` (Dirichlet).
pub fn eigenvalue_sum_bound(k: u64, m: usize, d: usize, vol_omega: f64, vol_a: f64) -> Result<f64> {
    check(k, m, d, vol_omega, vol_a)?;
    let (m_f, d_f) = (m as f64, d as f64);
    Ok(d_f / (2.0 * m_f + d_f)
        * theta(d, vol_omega, vol_a).powf(-2.0 * m_f / d_f)
        * (k as f64).powf((2.0 * m_f + d_f) / d_f))
}

/// Alias of [`eigenvalue_sum_bound`] for the Neumann partial sums.
pub fn eigenvalue_sum_upper(k: u64, m: usize, d: usize, vol_omega: f64, vol_a: f64) -> Result<f64> {
    eigenvalue_sum_bound(k, m, d, vol_omega, vol_a)
}

/// `Θ^(m/d) = lim a_k k^(m/d)`.
pub fn asymptotic_constant(m: usize, d: usize, vol_omega: f64, vol_a: f64) -> Result<f64> {
    check(1, m, d, vol_omega, vol_a)?;
    Ok(theta(d, vol_omega, vol_a).powf(m as f64 / d as f64))
}

fn check_box(m: usize, d: usize, length: f64) -> Result<f64> {
    if m < 1 || d < 1 {
        return Err(invalid(format!("need m, d >= 1 (got {m}, {d})")));
    }
    positive("L", length)?;
    volume_lp_ball_exact(d, 2.0 * m as f64)
}

/// Asymptotic constant on `[0, L]^d` with the `ℓ_(2m)` symbol:
/// `(L/2π)^m (vol B^d_(2m))^(m/d)`.
pub fn star_asymptotic_constant(m: usize, d: usize, length: f64) -> Result<f64> {
    let v = check_box(m, d, length)?;
    Ok((length / (2.0 * PI)).powi(m as i32) * v.powf(m as f64 / d as f64))
}

/// Explicit two-sided bounds on `[0, L]^d` with their rank thresholds.
pub fn star_explicit_bounds(k: u64, m: usize, d: usize, length: f64) -> Result<(BoundEvaluation, BoundEvaluation)> {
    if k < 1 {
        return Err(invalid("rank must be at least 1"));
    }
    let v = check_box(m, d, length)?;
    let (m_f, d_f) = (m as f64, d as f64);
    let root = d_f.powf(1.0 / (2.0 * m_f));
    let decay = v.powf(m_f / d_f) * (k as f64).powf(-m_f / d_f);
    let upper = BoundEvaluation {
        k,
        value: (length / PI).powi(m as i32) * decay,
        kind: BoundKind::Upper,
        valid_from: (2.0 * m_f).powi(d as i32) * (root + 1.0).powi(d as i32) * v,
        formula_id: FormulaId::StarUpper,
    };
    let lower = BoundEvaluation {
        k,
        value: (length / (4.0 * PI)).powi(m as i32) * decay,
        kind: BoundKind::Lower,
        valid_from: (0.5 + (m_f + root) / 2.0 + length / (2.0 * PI)).powi(d as i32) * v,
        formula_id: FormulaId::StarLower,
    };
    Ok((upper, lower))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonThresholds {
    pub eps: f64,
    pub k0: f64,
    pub k1: f64,
    /// `a_k ≤ upper_factor · k^(-m/d)` for `k ≥ k0`.
    pub upper_factor: f64,
    /// `a_k ≥ lower_factor · k^(-m/d)` for `k ≥ k1`.
    pub lower_factor: f64,
    /// `eps = 1`: the lower factor vanishes.
    pub lower_degenerate: bool,
}

impl EpsilonThresholds {
    pub fn upper(&self, k: u64, m: usize, d: usize) -> BoundEvaluation {
        BoundEvaluation {
            k,
            value: self.upper_factor * (k as f64).powf(-(m as f64) / d as f64),
            kind: BoundKind::Upper,
            valid_from: self.k0,
            formula_id: FormulaId::EpsilonUpper,
        }
    }

    pub fn lower(&self, k: u64, m: usize, d: usize) -> BoundEvaluation {
        BoundEvaluation {
            k,
            value: self.lower_factor * (k as f64).powf(-(m as f64) / d as f64),
            kind: BoundKind::Lower,
            valid_from: self.k1,
            formula_id: FormulaId::EpsilonLower,
        }
    }
}

/// Thresholds `k0(ε), k1(ε)` beyond which `a_k k^(m/d)` lies within a factor
/// `(1 ± ε)^m` of the asymptotic constant.
pub fn epsilon_thresholds(eps: f64, m: usize, d: usize, length: f64) -> Result<EpsilonThresholds> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid(format!("eps must lie in (0, 1], got {eps}")));
    }
    let v = check_box(m, d, length)?;
    let (m_f, d_f) = (m as f64, d as f64);
    let root = d_f.powf(1.0 / (2.0 * m_f));
    let di = d as i32;
    let k0 = ((1.0 + eps) / eps).powi(di) * m_f.powi(di) * (root + 1.0).powi(di) * v;
    let k1 = (0.5 + (1.0 - eps) / eps * ((m_f + root) / 2.0 + length / (2.0 * PI))).powi(di) * v;
    let base = (length / (2.0 * PI)).powi(m as i32) * v.powf(m_f / d_f);
    Ok(EpsilonThresholds {
        eps,
        k0,
        k1,
        upper_factor: base * (1.0 + eps).powi(m as i32),
        lower_factor: base * (1.0 - eps).powi(m as i32),
        lower_degenerate: eps == 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleVariant {
    Star,
    LaplacePower,
    Fractional,
}

impl std::str::FromStr for ExampleVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(Self::Star),
            "laplace_power" => Ok(Self::LaplacePower),
            "fractional" => Ok(Self::Fractional),
            other => Err(Error::InvalidVariant(other.to_string())),
        }
    }
}

/// Upper bounds for concrete norms, with the ball volume replaced by an
/// elementary estimate.
///
/// `order` is `m` (star, laplace_power) or the smoothness `s` (fractional);
/// `p` is only read by the fractional variant. The star and laplace_power
/// forms carry the factor `(vol Ω/(2π)^d)^(m/d)`, which is one on `(0, 2π)^d`.
pub fn example_upper_bounds(
    variant: ExampleVariant,
    k: u64,
    order: f64,
    d: usize,
    p: Option<f64>,
    vol_omega: f64,
) -> Result<BoundEvaluation> {
    if k < 1 || d < 1 {
        return Err(invalid(format!("need k, d >= 1 (got {k}, {d})")));
    }
    positive("order", order)?;
    positive("vol_omega", vol_omega)?;
    let d_f = d as f64;
    let lead = ((2.0 * order + d_f) / d_f).sqrt()
        * (vol_omega / (2.0 * PI).powi(d as i32)).powf(order / d_f)
        * (k as f64).powf(-order / d_f);
    let (value, formula_id) = match variant {
        ExampleVariant::Star | ExampleVariant::LaplacePower if order.fract() != 0.0 => {
            return Err(invalid(format!("order must be an integer for {variant:?}, got {order}")));
        }
        ExampleVariant::Star => (
            lead * 2f64.powf(order) * (2.0 * E * order / d_f).sqrt(),
            FormulaId::ExampleStar,
        ),
        ExampleVariant::LaplacePower => (
            lead * PI.powf(order / 2.0) * (2.0 * E / d_f).powf(order / 2.0),
            FormulaId::ExampleLaplacePower,
        ),
        ExampleVariant::Fractional => {
            let p = p.ok_or_else(|| invalid("fractional variant needs p"))?;
            positive("p", p)?;
            let base = if p >= 1.0 { E * p / d_f } else { E * (p + 1.0) / d_f };
            (lead * 2f64.powf(order) * base.powf(order / p), FormulaId::ExampleFractional)
        }
    };
    Ok(BoundEvaluation { k, value, kind: BoundKind::Upper, valid_from: 1.0, formula_id })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dirichlet_upper_examples() {
        let b = dirichlet_upper_bound(1, 1, 1, PI, 2.0).unwrap();
        assert_relative_eq!(b.value, 3f64.sqrt(), max_relative = 1e-15);
        assert!(b.admits(1.0));
        assert_eq!(b.valid_from_rank(), 1);
        for d in 1..=3usize {
            let k = 7u64;
            let a = dirichlet_upper_bound(k, 2, d, 1.3, 0.7).unwrap().value;
            let b = dirichlet_upper_bound(k << d, 2, d, 1.3, 0.7).unwrap().value;
            assert_relative_eq!(b, a / 4.0, max_relative = 1e-14);
        }
        assert!(dirichlet_upper_bound(0, 1, 1, 1.0, 1.0).is_err());
        assert!(dirichlet_upper_bound(1, 1, 1, -1.0, 1.0).is_err());
    }

    #[test]
    fn neumann_lower_examples() {
        let b = neumann_lower_bound(1, 1, 1, PI, 2.0).unwrap();
        assert_relative_eq!(b.value, 3.25f64.powf(-0.5), max_relative = 1e-15);
        assert!(b.admits(0.5f64.sqrt()));
        let (m, d, vo, va) = (2usize, 3usize, 2.0, 1.5);
        let k = 1u64 << 40;
        let scaled = neumann_lower_bound(k, m, d, vo, va).unwrap().value * (k as f64).powf(m as f64 / d as f64);
        let limit = ((2.0 * m as f64 + d as f64) / (2.0 * m as f64)).powf(-(m as f64) / d as f64)
            * theta(d, vo, va).powf(m as f64 / d as f64);
        assert_relative_eq!(scaled, limit, max_relative = 1e-6);
    }

    #[test]
    fn sum_bound_example() {
        assert_relative_eq!(eigenvalue_sum_upper(3, 1, 1, PI, 2.0).unwrap(), 9.0, max_relative = 1e-14);
    }

    #[test]
    fn asymptotic_constant_examples() {
        let c = asymptotic_constant(1, 2, (2.0 * PI).powi(2), PI).unwrap();
        assert_relative_eq!(c, PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(asymptotic_constant(5, 3, (2.0 * PI).powi(3), 1.0).unwrap(), 1.0, max_relative = 1e-14);
        let (m, d, l) = (2usize, 3usize, 1.7f64);
        let v = volume_lp_ball_exact(d, 4.0).unwrap();
        assert_relative_eq!(
            asymptotic_constant(m, d, l.powi(3), v).unwrap(),
            star_asymptotic_constant(m, d, l).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn star_examples() {
        let (up, lo) = star_explicit_bounds(8, 1, 1, 2.0 * PI).unwrap();
        assert_eq!(up.valid_from_rank(), 8);
        assert_relative_eq!(up.value, 0.5, max_relative = 1e-14);
        assert_eq!(lo.valid_from_rank(), 5);
        let (_, lo5) = star_explicit_bounds(5, 1, 1, 2.0 * PI).unwrap();
        assert_relative_eq!(lo5.value, 0.2, max_relative = 1e-14);
        assert_relative_eq!(lo.value, 0.125, max_relative = 1e-14);
    }

    #[test]
    fn epsilon_examples() {
        for (m, d, l) in [(1usize, 1usize, 2.0 * PI), (2, 2, 1.0), (3, 3, 5.0)] {
            let t = epsilon_thresholds(1.0, m, d, l).unwrap();
            let (up, _) = star_explicit_bounds(1, m, d, l).unwrap();
            assert_eq!(t.k0, up.valid_from);
            assert_eq!(t.lower_factor, 0.0);
            assert!(t.lower_degenerate);
        }
        let t = epsilon_thresholds(0.5, 1, 1, 2.0 * PI).unwrap();
        assert_relative_eq!(t.k0, 12.0, max_relative = 1e-14);
        assert_relative_eq!(t.upper_factor, 3.0, max_relative = 1e-14);
        // eps = 1/2 reproduces the lower explicit bound.
        for (m, d, l) in [(1usize, 2usize, 1.0), (2, 1, 2.0 * PI)] {
            let t = epsilon_thresholds(0.5, m, d, l).unwrap();
            let (_, lo) = star_explicit_bounds(1, m, d, l).unwrap();
            assert_relative_eq!(t.k1, lo.valid_from, max_relative = 1e-14);
            assert_relative_eq!(t.lower(1, m, d).value, lo.value, max_relative = 1e-14);
        }
        assert!(epsilon_thresholds(0.0, 1, 1, 1.0).is_err());
        assert!(epsilon_thresholds(1.5, 1, 1, 1.0).is_err());
    }

    #[test]
    fn example_bounds() {
        let q = (2.0 * PI).powi(2);
        let b = example_upper_bounds(ExampleVariant::Star, 4, 1.0, 2, None, q).unwrap();
        assert_relative_eq!(b.value, 2f64.sqrt() * 2.0 * E.sqrt() * 0.5, max_relative = 1e-14);
        assert!((b.value - 2.332).abs() < 1e-3);
        for (m, d) in [(1usize, 2usize), (2, 3), (3, 5)] {
            let vol_q = (2.0 * PI).powi(d as i32);
            let ex = example_upper_bounds(ExampleVariant::LaplacePower, 10, m as f64, d, None, vol_q).unwrap();
            let vol_a = volume_lp_ball_exact(d, 2.0).unwrap();
            let th = dirichlet_upper_bound(10, m, d, vol_q, vol_a).unwrap();
            assert!(ex.value >= th.value);
        }
        let f = example_upper_bounds(ExampleVariant::Fractional, 3, 1.5, 2, Some(0.5), 1.0).unwrap();
        assert!(f.value > 0.0);
        assert!(example_upper_bounds(ExampleVariant::Fractional, 3, 1.5, 2, None, 1.0).is_err());
        assert!(matches!("bogus".parse::<ExampleVariant>(), Err(Error::InvalidVariant(_))));
    }
}

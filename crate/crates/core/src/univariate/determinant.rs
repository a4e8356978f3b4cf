//! Scaled boundary-condition determinant for `(-1)^m u^(2m) = λ u` on `[0, L]`.
//!
//! With `κ = λ^(1/2m)` the characteristic roots are `κ ω_j`, where
//! `ω_j = i·exp(iπj/m)` runs over the `2m` solutions of `ω^(2m) = (-1)^m`.
//! The fundamental system is taken real (`Re`/`Im` of `exp(κ ω t)` for each
//! conjugate pair, plus the real exponentials when `m` is even). Each column
//! whose exponent has positive real part is multiplied by `exp(-κ Re(ω) L)`
//! and row `q` (derivative order) by `κ^-q`. Both factors are positive, so the
//! zeros and the sign of the determinant are unchanged while every entry stays
//! bounded by one in absolute value.

use std::f64::consts::PI;

use super::BoundaryCondition;

#[derive(Debug, Clone, Copy)]
enum Part {
    Re,
    Im,
}

#[derive(Debug, Clone, Copy)]
struct Column {
    /// Argument of `ω` on the unit circle.
    theta: f64,
    re: f64,
    im: f64,
    part: Part,
}

/// Precomputed basis layout for one order `m`.
#[derive(Debug, Clone)]
pub(crate) struct CharacteristicMatrix {
    m: usize,
    columns: Vec<Column>,
}

impl CharacteristicMatrix {
    pub(crate) fn new(m: usize) -> Self {
        let mut columns = Vec::with_capacity(2 * m);
        for j in 0..2 * m {
            let theta = PI / 2.0 + PI * j as f64 / m as f64;
            let (re, im) = (-(PI * j as f64 / m as f64).sin(), (PI * j as f64 / m as f64).cos());
            if 2 * j == m || 2 * j == 3 * m {
                // ω = ∓1 exactly.
                let re = if 2 * j == m { -1.0 } else { 1.0 };
                columns.push(Column { theta, re, im: 0.0, part: Part::Re });
            } else if im > 0.0 {
                columns.push(Column { theta, re, im, part: Part::Re });
                columns.push(Column { theta, re, im, part: Part::Im });
            }
        }
        debug_assert_eq!(columns.len(), 2 * m);
        Self { m, columns }
    }

    /// Scaled determinant as a function of `κ = λ^(1/2m)`.
    pub(crate) fn eval_kappa(&self, kappa: f64, length: f64, bc: BoundaryCondition) -> f64 {
        let m = self.m;
        let n = 2 * m;
        let offset = match bc {
            BoundaryCondition::Dirichlet => 0,
            BoundaryCondition::Neumann => m,
        };
        let mut a = [0.0f64; 64];
        for (c, col) in self.columns.iter().enumerate() {
            let shift = if col.re > 0.0 { kappa * col.re * length } else { 0.0 };
            for (end, t) in [0.0, length].into_iter().enumerate() {
                let mag = (kappa * col.re * t - shift).exp();
                let phase = kappa * col.im * t;
                for i in 0..m {
                    let q = (offset + i) as f64;
                    // ω^q · exp(κωt - shift), argument q·θ + κ Im(ω) t.
                    let arg = q * col.theta + phase;
                    let v = match col.part {
                        Part::Re => mag * arg.cos(),
                        Part::Im => mag * arg.sin(),
                    };
                    a[(end * m + i) * n + c] = v;
                }
            }
        }
        determinant(&mut a[..n * n], n)
    }
}

/// Determinant by Gaussian elimination with partial pivoting (destroys `a`).
fn determinant(a: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].abs();
        for r in k + 1..n {
            let v = a[r * n + k].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            det = -det;
        }
        let pivot = a[k * n + k];
        det *= pivot;
        for r in k + 1..n {
            let f = a[r * n + k] / pivot;
            if f != 0.0 {
                for c in k + 1..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
            }
        }
    }
    det
}

use std::collections::HashSet;
use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use widths_core::bounds::{
    asymptotic_constant, dirichlet_upper_bound, epsilon_thresholds, neumann_lower_bound, star_asymptotic_constant,
    star_explicit_bounds,
};
use widths_core::exec::Exec;
use widths_core::geometry::{
    lattice_count, volume_lp_ball_exact, volume_sublevel_mc, volume_sublevel_mc_with, Symbol,
};
use widths_core::tensor::{
    brute_force_auto, counting_c, counting_n, rearranged_approx_numbers, RearrangeOptions, Rearrangement,
};
use widths_core::univariate::{
    dirichlet_eigenvalues, fd_richardson, neumann_eigenvalues, BoundaryCondition, DEFAULT_TOL,
};

use BoundaryCondition::{Dirichlet, Neumann};

fn bc_strategy() -> impl Strategy<Value = BoundaryCondition> {
    prop_oneof![Just(Dirichlet), Just(Neumann)]
}

#[test]
fn neumann_shift_is_bitwise() {
    for m in 1..=3 {
        for l in [1.0, PI, 2.0 * PI] {
            let dir = dirichlet_eigenvalues(m, l, 40, DEFAULT_TOL).unwrap();
            let neu = neumann_eigenvalues(m, l, 40 + m, DEFAULT_TOL).unwrap();
            for (i, mu) in neu.values.iter().enumerate() {
                if i < m {
                    assert_eq!((mu.lower, mu.estimate, mu.upper), (0.0, 0.0, 0.0));
                } else {
                    let lam = &dir.values[i - m];
                    assert_eq!((mu.lower, mu.estimate, mu.upper), (lam.lower, lam.estimate, lam.upper));
                }
            }
        }
    }
}

#[test]
fn finite_differences_agree_with_determinant_roots() {
    for m in 1..=3 {
        let exact = dirichlet_eigenvalues(m, 1.0, 5, DEFAULT_TOL).unwrap();
        let fine = fd_richardson(m, 1.0, Dirichlet, 5, 99, 4).unwrap();
        let coarse = fd_richardson(m, 1.0, Dirichlet, 5, 99, 3).unwrap();
        for ((e, f), c) in exact.values.iter().zip(&fine).zip(&coarse) {
            let discretisation = (f - c).abs() / f;
            let rel = (f / e.estimate - 1.0).abs();
            assert!(rel <= 10.0 * DEFAULT_TOL + discretisation, "m={m} n={}: {rel:e}", e.index);
        }
    }
}

#[test]
fn counting_identity_holds() {
    for m in 1..=3 {
        for l in [1.0, 2.0 * PI] {
            let spectrum = neumann_eigenvalues(m, l, 400, DEFAULT_TOL).unwrap().values;
            for d in 1..=3 {
                for idx in 1..=20 {
                    let c = counting_c(idx, d, &spectrum).unwrap() as usize;
                    let a = rearranged_approx_numbers(m, d, l, Neumann, c).unwrap();
                    let want = 1.0 / (1.0 + spectrum[idx - 1].estimate).sqrt();
                    let e = &a[c - 1];
                    let width = e.value_lower(Neumann) - e.value_upper(Neumann);
                    assert!((e.value - want).abs() <= width.abs() + 4.0 * f64::EPSILON, "m={m} d={d} l={idx}");
                }
            }
        }
    }
}

#[test]
fn plateau_is_exact() {
    for m in 1..=3usize {
        for d in 1..=3usize {
            let n = m.pow(d as u32);
            let a = rearranged_approx_numbers(m, d, 1.0, Neumann, n + 1).unwrap();
            assert!(a[..n].iter().all(|e| e.value == 1.0));
            assert!(a[n].value < 1.0);
        }
    }
}

#[test]
fn monte_carlo_agrees_for_most_seeds() {
    let symbol = Symbol::lp(2, 2).unwrap();
    let exact = volume_lp_ball_exact(2, 4.0).unwrap();
    let agreeing = (0..100u64)
        .filter(|&seed| volume_sublevel_mc(&symbol, 100_000, seed).unwrap().agrees_with(exact, 3.0))
        .count();
    assert!(agreeing >= 99, "{agreeing} of 100 seeds");
}

#[test]
fn monte_carlo_is_independent_of_workers() {
    for symbol in [Symbol::lp(3, 4).unwrap(), Symbol::euclidean(2, 3).unwrap()] {
        let serial = volume_sublevel_mc_with(&symbol, 1.0, 50_000, 7, Exec::Serial).unwrap();
        let parallel = volume_sublevel_mc_with(&symbol, 1.0, 50_000, 7, Exec::Parallel).unwrap();
        assert_eq!(serial, parallel);
    }
}

#[test]
fn bound_ratio_at_infinity() {
    for m in 1..=3usize {
        for d in 1..=4usize {
            let (m_f, d_f) = (m as f64, d as f64);
            let k = 1u64 << 50;
            let kf = (k as f64).powf(m_f / d_f);
            let up = dirichlet_upper_bound(k, m, d, 1.0, 1.0).unwrap().value * kf;
            let low = neumann_lower_bound(k, m, d, 1.0, 1.0).unwrap().value * kf;
            let want = ((2.0 * m_f + d_f) / d_f).sqrt() * ((2.0 * m_f + d_f) / (2.0 * m_f)).powf(m_f / d_f);
            assert_relative_eq!(up / low, want, max_relative = 1e-6);
            assert_relative_eq!(low, asymptotic_constant(m, d, 1.0, 1.0).unwrap() / ((2.0 * m_f + d_f) / (2.0 * m_f)).powf(m_f / d_f), max_relative = 1e-6);
        }
    }
}

#[test]
fn unit_epsilon_reproduces_upper_threshold() {
    for m in 1..=3 {
        for d in 1..=3 {
            for l in [1.0, 2.0 * PI] {
                let t = epsilon_thresholds(1.0, m, d, l).unwrap();
                let (ub, _) = star_explicit_bounds(1, m, d, l).unwrap();
                assert_eq!(t.k0, ub.valid_from);
                assert!(t.lower_degenerate && t.lower_factor == 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn best_first_matches_brute_force(m in 1usize..=3, d in 1usize..=3, l in 0.5f64..8.0, bc in bc_strategy(), k in 1usize..400) {
        let fast = rearranged_approx_numbers(m, d, l, bc, k).unwrap();
        let slow = brute_force_auto(m, d, l, bc, k).unwrap();
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert_eq!(a.value, b.value);
            prop_assert_eq!(&a.witness, &b.witness);
        }
    }

    #[test]
    fn values_are_monotone_and_audited(m in 1usize..=3, d in 1usize..=3, l in 0.5f64..8.0, bc in bc_strategy(), k in 1usize..600) {
        let mut r = Rearrangement::new(m, d, l, bc, RearrangeOptions::default()).unwrap();
        let a = r.take(k).unwrap();
        prop_assert!(a.windows(2).all(|w| w[0].value >= w[1].value));
        if bc == Neumann {
            prop_assert!(a.iter().all(|e| e.value > 0.0 && e.value <= 1.0));
        }
        let distinct: HashSet<_> = a.iter().map(|e| e.witness.clone()).collect();
        prop_assert_eq!(distinct.len(), k);
        prop_assert!(a.iter().all(|e| e.witness.0.len() == d && e.witness.0.iter().all(|&n| n >= 1)));
        let audit = r.audit();
        prop_assert_eq!(audit.pops, k as u64);
        prop_assert_eq!(audit.pushes, audit.visited);
    }

    #[test]
    fn scaling_law(m in 1usize..=3, l in 0.2f64..10.0) {
        let base = dirichlet_eigenvalues(m, 1.0, 12, DEFAULT_TOL).unwrap();
        let scaled = dirichlet_eigenvalues(m, l, 12, DEFAULT_TOL).unwrap();
        for (s, b) in scaled.values.iter().zip(&base.values) {
            let back = s.estimate * l.powi(2 * m as i32);
            prop_assert!((back / b.estimate - 1.0).abs() <= 10.0 * DEFAULT_TOL);
        }
    }

    #[test]
    fn star_bounds_decrease_scale_and_nest(m in 1usize..=3, d in 1usize..=3, l in 0.1f64..10.0, k in 1u64..1_000_000) {
        let (ub, lb) = star_explicit_bounds(k, m, d, l).unwrap();
        let (ub1, lb1) = star_explicit_bounds(k, m, d, 1.0).unwrap();
        let (ub_next, lb_next) = star_explicit_bounds(k + 1, m, d, l).unwrap();
        prop_assert!(ub_next.value < ub.value && lb_next.value < lb.value);
        let lm = l.powi(m as i32);
        prop_assert!((ub.value / (lm * ub1.value) - 1.0).abs() < 1e-12);
        prop_assert!((lb.value / (lm * lb1.value) - 1.0).abs() < 1e-12);
        let middle = star_asymptotic_constant(m, d, l).unwrap() * (k as f64).powf(-(m as f64) / d as f64);
        prop_assert!(ub.value >= middle && middle >= lb.value);
        prop_assert!(ub.valid_from >= 1.0 && lb.valid_from >= 1.0);
    }

    #[test]
    fn theorem_bounds_decrease(m in 1usize..=3, d in 1usize..=4, vol in 0.1f64..100.0, k in 1u64..1_000_000) {
        let up = |k| dirichlet_upper_bound(k, m, d, vol, 1.5).unwrap().value;
        let low = |k| neumann_lower_bound(k, m, d, vol, 1.5).unwrap().value;
        prop_assert!(up(k + 1) < up(k) && up(k) > 0.0);
        prop_assert!(low(k + 1) < low(k) && low(k) > 0.0);
    }

    #[test]
    fn lattice_count_is_monotone(d in 1usize..=4, p in prop_oneof![Just(1.0), Just(2.0), Just(4.0), Just(6.0)], r in 0.5f64..25.0, dr in 0.0f64..3.0) {
        let a = lattice_count(r, d, p).unwrap();
        let b = lattice_count(r + dr, d, p).unwrap();
        prop_assert!(a.count <= b.count);
        prop_assert!(a.count as f64 <= a.upper_bound);
        if a.lower_valid {
            prop_assert!(a.sandwich_holds());
        }
    }

    #[test]
    fn weyl_count_brackets_are_ordered(m in 1usize..=2, d in 1usize..=3, lam in 1.0f64..5e4, bc in bc_strategy()) {
        let c = counting_n(lam, m, d, 2.0 * PI, bc).unwrap();
        prop_assert!(c.count_if_upper <= c.count && c.count <= c.count_if_lower);
        prop_assert_eq!(c.ambiguous, c.count_if_upper != c.count_if_lower);
    }
}

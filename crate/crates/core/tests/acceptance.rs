//! End-to-end acceptance criteria. Each test prints one verdict line to
//! stderr (uncaptured) and then asserts it.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use statrs::function::gamma::gamma;
use widths_core::bounds::{dirichlet_upper_bound, eigenvalue_sum_bound, neumann_lower_bound, star_explicit_bounds};
use widths_core::geometry::{lattice_count, volume_b2m_bounds, volume_lp_ball_exact, volume_sublevel_mc, Symbol};
use widths_core::harness::{run_experiment, Experiment, ExperimentConfig};
use widths_core::tensor::{brute_force_auto, rearranged_approx_numbers, ApproxNumberEntry};
use widths_core::univariate::{dirichlet_eigenvalues, fd_richardson, BoundaryCondition, DEFAULT_TOL};

use BoundaryCondition::{Dirichlet, Neumann};

/// Writes the verdict past the test harness capture and returns whether it passed.
fn verdict(id: u32, name: &str, ok: bool, started: Instant, limit: Duration, detail: &str) -> bool {
    let elapsed = started.elapsed();
    let pass = ok && elapsed <= limit;
    let line = format!(
        "criterion {id:>2} {name}: {} ({:.2}s of {}s) {detail}\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    pass
}

/// `(2Γ(1+1/p))^d / Γ(1+d/p)`, evaluated directly.
fn vol_lp(d: usize, p: f64) -> f64 {
    (2.0 * gamma(1.0 + 1.0 / p)).powi(d as i32) / gamma(1.0 + d as f64 / p)
}

fn euclidean_ball(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma(1.0 + d as f64 / 2.0)
}

fn values(entries: &[ApproxNumberEntry]) -> Vec<f64> {
    entries.iter().map(|e| e.value).collect()
}

#[test]
fn criterion_01_plateau() {
    let started = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for (m, d) in [(2usize, 2usize), (2, 3), (3, 2)] {
        let plateau = m.pow(d as u32);
        for l in [1.0, 2.0 * PI] {
            let a = values(&rearranged_approx_numbers(m, d, l, Neumann, plateau + 1).unwrap());
            let flat = a[..plateau].iter().all(|&v| v == 1.0);
            let drop = a[plateau] < 1.0;
            ok &= flat && drop;
            if l == 1.0 {
                detail += &format!("(m={m},d={d}) a_{}={:.4} ", plateau + 1, a[plateau]);
            }
        }
    }
    assert!(verdict(1, "plateau a_k = 1 for k <= m^d", ok, started, Duration::from_secs(1), &detail));
}

#[test]
fn criterion_02_asymptotic_constant() {
    let started = Instant::now();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for d in 1..=3usize {
        let k = if d == 3 { 1_000_000 } else { 100_000 };
        let ball = [2.0, PI, 4.0 * PI / 3.0][d - 1];
        for l in [PI, 2.0 * PI] {
            let case = Instant::now();
            let a = rearranged_approx_numbers(1, d, l, Neumann, k).unwrap();
            let ratio = a[k - 1].value * (k as f64).powf(1.0 / d as f64);
            let limit = l / (2.0 * PI) * ball.powf(1.0 / d as f64);
            let dev = (ratio / limit - 1.0).abs();
            worst = worst.max(dev);
            slowest = slowest.max(case.elapsed());
            ok &= dev <= 0.10 && case.elapsed() < Duration::from_secs(60);
        }
    }
    let detail = format!("max relative deviation {worst:.4}, slowest case {:.2}s", slowest.as_secs_f64());
    assert!(verdict(2, "a_k k^(m/d) within 10% of the limit", ok, started, Duration::from_secs(360), &detail));
}

#[test]
fn criterion_03_explicit_estimates() {
    let started = Instant::now();
    let k_top = 100_000u64;
    let mut ok = true;
    let mut checked = 0u64;
    for m in 1..=2usize {
        for d in 1..=2usize {
            let v = vol_lp(d, 2.0 * m as f64);
            let (m_f, d_f) = (m as f64, d as f64);
            let root = d_f.powf(1.0 / (2.0 * m_f));
            for l in [1.0, 2.0 * PI] {
                let k_up = ((2.0 * m_f).powi(d as i32) * (root + 1.0).powi(d as i32) * v).ceil().max(1.0) as u64;
                let k_low = ((0.5 + (m_f + root) / 2.0 + l / (2.0 * PI)).powi(d as i32) * v).ceil().max(1.0) as u64;
                ok &= k_up <= k_top && k_low <= k_top;
                let a = rearranged_approx_numbers(m, d, l, Neumann, k_top as usize).unwrap();
                for k in k_up.min(k_low)..=k_top {
                    let e = &a[k as usize - 1];
                    let decay = v.powf(m_f / d_f) * (k as f64).powf(-m_f / d_f);
                    let (ub, lb) = star_explicit_bounds(k, m, d, l).unwrap();
                    if k >= k_up {
                        let bound = (l / PI).powi(m as i32) * decay;
                        ok &= (ub.value / bound - 1.0).abs() < 1e-12 && ub.valid_from_rank() == k_up;
                        ok &= e.value_upper(Neumann) <= bound;
                        checked += 1;
                    }
                    if k >= k_low {
                        let bound = (l / (4.0 * PI)).powi(m as i32) * decay;
                        ok &= (lb.value / bound - 1.0).abs() < 1e-12 && lb.valid_from_rank() == k_low;
                        ok &= e.value_lower(Neumann) >= bound;
                        checked += 1;
                    }
                }
            }
        }
    }
    let detail = format!("{checked} bound checks up to k = {k_top}");
    assert!(verdict(3, "explicit two-sided estimates", ok, started, Duration::from_secs(60), &detail));
}

/// `vol Ω vol A / (2π)^d` for the cube and the `ℓ_(2m)` symbol.
fn theta(m: usize, d: usize, l: f64) -> f64 {
    l.powi(d as i32) * vol_lp(d, 2.0 * m as f64) / (2.0 * PI).powi(d as i32)
}

#[test]
fn criterion_04_dirichlet_upper_bound() {
    let started = Instant::now();
    let k_top = 10_000usize;
    let mut ok = true;
    let mut tightest: f64 = 0.0;
    for m in 1..=2usize {
        for d in 1..=3usize {
            for l in [1.0, 2.0 * PI] {
                let (m_f, d_f) = (m as f64, d as f64);
                let th = theta(m, d, l);
                let vol_a = vol_lp(d, 2.0 * m_f);
                let a = rearranged_approx_numbers(m, d, l, Dirichlet, k_top).unwrap();
                let mut partial = 0.0;
                for (i, e) in a.iter().enumerate() {
                    let k = i as u64 + 1;
                    let bound = ((2.0 * m_f + d_f) / d_f).sqrt() * th.powf(m_f / d_f) * (k as f64).powf(-m_f / d_f);
                    let lib = dirichlet_upper_bound(k, m, d, l.powi(d as i32), vol_a).unwrap();
                    ok &= (lib.value / bound - 1.0).abs() < 1e-12;
                    ok &= e.value_upper(Dirichlet) <= bound;
                    tightest = tightest.max(e.value / bound);

                    partial += e.eigensum_lower;
                    let sum_bound = d_f / (2.0 * m_f + d_f) * th.powf(-2.0 * m_f / d_f) * (k as f64).powf((2.0 * m_f + d_f) / d_f);
                    let lib_sum = eigenvalue_sum_bound(k, m, d, l.powi(d as i32), vol_a).unwrap();
                    ok &= (lib_sum / sum_bound - 1.0).abs() < 1e-12;
                    ok &= partial >= sum_bound;
                }
            }
        }
    }
    let detail = format!("max a_k / bound = {tightest:.4}");
    assert!(verdict(4, "Dirichlet upper bound and eigenvalue sums", ok, started, Duration::from_secs(120), &detail));
}

#[test]
fn criterion_05_neumann_lower_bound() {
    let started = Instant::now();
    let k_top = 10_000usize;
    let mut ok = true;
    let mut tightest = f64::INFINITY;
    for m in 1..=2usize {
        for d in 1..=3usize {
            for l in [1.0, 2.0 * PI] {
                let (m_f, d_f) = (m as f64, d as f64);
                let th = theta(m, d, l);
                let vol_a = vol_lp(d, 2.0 * m_f);
                let a = rearranged_approx_numbers(m, d, l, Neumann, k_top + 1).unwrap();
                let mut partial = 0.0;
                for k in 1..=k_top as u64 {
                    let next = &a[k as usize];
                    let e = 2.0 * m_f / d_f;
                    let inner = ((2.0 * m_f + d_f) / (2.0 * m_f)).powf(e) * th.powf(-e) * (k as f64).powf(e);
                    let bound = 1.0 / (1.0 + inner).sqrt();
                    let lib = neumann_lower_bound(k, m, d, l.powi(d as i32), vol_a).unwrap();
                    ok &= (lib.value / bound - 1.0).abs() < 1e-12;
                    ok &= next.value_lower(Neumann) >= bound;
                    tightest = tightest.min(next.value / bound);

                    partial += a[k as usize - 1].eigensum_upper;
                    let sum_bound = d_f / (2.0 * m_f + d_f) * th.powf(-e) * (k as f64).powf((2.0 * m_f + d_f) / d_f);
                    ok &= partial <= sum_bound;
                }
            }
        }
    }
    let detail = format!("min a_(k+1) / bound = {tightest:.4}");
    assert!(verdict(5, "Neumann lower bound and eigenvalue sums", ok, started, Duration::from_secs(120), &detail));
}

#[test]
fn criterion_06_univariate_solver() {
    let started = Instant::now();
    let mut ok = true;
    for m in 1..=3usize {
        for l in [1.0, PI, 2.0 * PI] {
            let s = dirichlet_eigenvalues(m, l, 50, DEFAULT_TOL).unwrap();
            ok &= s.values.len() == 50;
            for e in &s.values {
                let lo = (PI / l * e.index as f64).powi(2 * m as i32);
                let hi = (PI / l * (e.index + m - 1) as f64).powi(2 * m as i32);
                ok &= lo <= e.lower && e.lower <= e.estimate && e.estimate <= e.upper && e.upper <= hi;
            }
        }
    }
    // Clamped beam: λ_1 = β⁴ with cos β cosh β = 1.
    let beta: f64 = 4.730_040_744_862_704;
    let reference = beta.powi(4);
    let solver = dirichlet_eigenvalues(2, 1.0, 1, DEFAULT_TOL).unwrap().values[0].estimate;
    let fd = fd_richardson(2, 1.0, Dirichlet, 1, 99, 4).unwrap()[0];
    let fd_rel = (fd / solver - 1.0).abs();
    ok &= fd_rel <= 1e-6 && (solver / reference - 1.0).abs() <= 1e-9;
    let detail = format!("λ_1 = {solver:.10}, finite differences {fd:.10} (rel {fd_rel:.2e})");
    assert!(verdict(6, "eigenvalue brackets and finite-difference oracle", ok, started, Duration::from_secs(30), &detail));
}

/// Exact count of `k ∈ {1, 2, ...}^d` with `Σ (2k_i)^p ≤ q^p`, i.e. `‖k‖_p ≤ q/2`.
fn naive_count(q: u64, d: usize, p: u32) -> u64 {
    let budget = (q as u128).pow(p);
    let kmax = q / 2;
    fn walk(depth: usize, left: u128, kmax: u64, p: u32) -> u64 {
        if depth == 0 {
            return 1;
        }
        (1..=kmax)
            .map(|k| (2 * k as u128).pow(p))
            .take_while(|&c| c <= left)
            .map(|c| walk(depth - 1, left - c, kmax, p))
            .sum()
    }
    walk(d, budget, kmax, p)
}

#[test]
fn criterion_07_lattice_sandwich() {
    let started = Instant::now();
    let mut ok = true;
    let mut checked = 0u64;
    for d in 1..=4usize {
        for p in [1u32, 2, 4, 6] {
            let vol = vol_lp(d, p as f64);
            let shift = (d as f64).powf(1.0 / p as f64);
            let mut previous = 0;
            for q in 2..=60u64 {
                let r = q as f64 / 2.0;
                let c = lattice_count(r, d, p as f64).unwrap();
                let exact = naive_count(q, d, p);
                let upper = 0.5f64.powi(d as i32) * (r + shift).powi(d as i32) * vol;
                ok &= c.count == exact && exact >= previous && exact as f64 <= upper;
                if r > shift {
                    let lower = 0.5f64.powi(d as i32) * (r - shift).powi(d as i32) * vol;
                    ok &= lower <= exact as f64 && c.sandwich_holds();
                }
                previous = exact;
                checked += 1;
            }
        }
    }
    let detail = format!("{checked} radii, counts match direct enumeration");
    assert!(verdict(7, "lattice point sandwich", ok, started, Duration::from_secs(30), &detail));
}

#[test]
fn criterion_08_volumes() {
    let started = Instant::now();
    let samples = 1_000_000u64;
    let mut ok = true;
    let mut worst_z: f64 = 0.0;
    for d in 1..=4usize {
        for m in 1..=3usize {
            let cases = [
                (Symbol::lp(m, d).unwrap(), vol_lp(d, 2.0 * m as f64)),
                (Symbol::euclidean(m, d).unwrap(), euclidean_ball(d)),
            ];
            for (symbol, exact) in cases {
                let seed = (100 * d + 10 * m) as u64;
                let a = volume_sublevel_mc(&symbol, samples, seed).unwrap();
                let b = volume_sublevel_mc(&symbol, samples, seed).unwrap();
                // Zero variance when the sampling box lies inside the sublevel set.
                let z = (a.mean - exact).abs() / a.standard_error.max(1e-12 * exact);
                worst_z = worst_z.max(z);
                ok &= a == b && z <= 3.0;
                ok &= (symbol.exact_volume().unwrap() / exact - 1.0).abs() < 1e-12;
            }
        }
    }
    for d in 1..=64usize {
        for m in 1..=8usize {
            let exact = volume_lp_ball_exact(d, 2.0 * m as f64).unwrap();
            let (lo, hi) = volume_b2m_bounds(d, m).unwrap();
            let (m_f, d_f) = (m as f64, d as f64);
            let lo_ref = 2f64.powi(d as i32) * (std::f64::consts::E * (d_f + 2.0 * m_f)).powf(-d_f / (2.0 * m_f));
            let hi_ref = 2f64.powi(d as i32) * (2.0 * std::f64::consts::E * m_f / d_f).powf(d_f / (2.0 * m_f));
            ok &= (lo / lo_ref - 1.0).abs() < 1e-12 && (hi / hi_ref - 1.0).abs() < 1e-12;
            ok &= lo <= exact && exact <= hi;
        }
    }
    let detail = format!("worst Monte Carlo deviation {worst_z:.2} standard errors");
    assert!(verdict(8, "sublevel volumes and volume bounds", ok, started, Duration::from_secs(60), &detail));
}

#[test]
fn criterion_09_weyl_ratio() {
    let started = Instant::now();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for d in 1..=2usize {
        let cfg = ExperimentConfig::new(Experiment::Weyl).with(1, d, 2.0 * PI, 100_000);
        let report = run_experiment(&cfg).unwrap();
        ok &= report.flag("weyl_top_decade").is_some_and(|f| f.passed && f.checked > 0);
        let per = cfg.policy.weyl_points_per_decade;
        let top = &report.records[report.records.len() - per - 1..];
        for rec in top {
            let lam = rec.values["lambda"];
            // On [0, 2π]^d the eigenvalues are |n|²/4, n ∈ {1, 2, ...}^d.
            let n_max = (2.0 * lam.sqrt()) as u64 + 1;
            let count: u64 = if d == 1 {
                (1..=n_max).filter(|&n| ((n * n) as f64) < 4.0 * lam).count() as u64
            } else {
                (1..=n_max)
                    .map(|a| (1..=n_max).filter(|&b| ((a * a + b * b) as f64) < 4.0 * lam).count() as u64)
                    .sum()
            };
            let v = lam.powf(d as f64 / 2.0) * euclidean_ball(d);
            let ratio = count as f64 / v;
            worst = worst.max((ratio - 1.0).abs());
            ok &= rec.values["count"] == count as f64 && (ratio - 1.0).abs() <= 0.10;
        }
    }
    let detail = format!("max |N/V - 1| = {worst:.4} on the top decade");
    assert!(verdict(9, "Weyl counting ratio", ok, started, Duration::from_secs(60), &detail));
}

#[test]
fn criterion_10_oracle_equivalence() {
    let started = Instant::now();
    let k = 2000usize;
    let mut ok = true;
    let mut cases = 0;
    for m in 1..=3usize {
        for d in 1..=3usize {
            for l in [1.0, PI, 2.0 * PI] {
                for bc in [Dirichlet, Neumann] {
                    let fast = rearranged_approx_numbers(m, d, l, bc, k).unwrap();
                    let slow = brute_force_auto(m, d, l, bc, k).unwrap();
                    ok &= values(&fast) == values(&slow);
                    ok &= fast.iter().zip(&slow).all(|(a, b)| a.witness == b.witness);
                    cases += 1;
                }
            }
        }
    }
    let detail = format!("{cases} parameter sets, k <= {k}");
    assert!(verdict(10, "best-first equals brute force", ok, started, Duration::from_secs(60), &detail));
}

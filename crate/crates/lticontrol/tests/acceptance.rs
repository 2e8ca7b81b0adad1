//! Acceptance gate: the release-blocking behaviors in one target, one
//! criterion per test, each printing a single pass line (visible under
//! `cargo test --test acceptance -- --nocapture`).

use lticontrol::classify::{
    classify_finite_dim, classify_norm_pair, classify_time_pair, cross_validate,
    finite_dim_boundary_data, BoundaryData, Cell, ExtReal, Query, SolutionRef, ValidateThresholds,
};
use lticontrol::matrix::{default_rank_tol, full_orthogonal_basis, norm2};
use lticontrol::models::{double_integrator, heat_point_control, scalar_system, truncate};
use lticontrol::norm::{
    check_bangbang, minimal_norm, norm_at_infinity, LimitOptions, NormAtInfinity, NormProblem,
    NormStatus, SolveOptions,
};
use lticontrol::oracle::{bracket, scalar_closed_form};
use lticontrol::system::{reachable_subspace, TimeGrid};
use lticontrol::time::{minimal_time, roundtrip_check, TimeOptions, TimeProblem, TimeStatus};
use lticontrol::{LtiSystem, Matrix};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn pass(criterion: usize, detail: &str) {
    println!("criterion {criterion}: PASS - {detail}");
}

fn scalar_prob(a: f64, b: f64, y0: f64, t: f64) -> NormProblem {
    NormProblem::new(scalar_system(a, b).unwrap(), vec![y0], t).unwrap()
}

#[test]
fn criterion_1_scalar_closed_form_suite() {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let mut count = 0usize;
    let mut worst = 0.0f64;
    for a in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        for b in [0.5, 1.0, 2.0] {
            for y0 in [1.0, -1.0, 3.0, -3.0] {
                for t in [0.25, 1.0, 4.0] {
                    let sol = minimal_norm(&scalar_prob(a, b, y0, t), &opts).unwrap();
                    let cf = scalar_closed_form(a, y0, t, b);
                    let rel = (sol.value - cf).abs() / cf;
                    assert!(
                        rel <= 1e-4,
                        "a={a} b={b} y0={y0} T={t}: {} vs {cf} (rel {rel:.3e})",
                        sol.value
                    );
                    worst = worst.max(rel);
                    count += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "suite took {elapsed:?}");
    pass(
        1,
        &format!("{count} scalar instances within 1e-4 of the closed form (worst rel {worst:.2e}, {elapsed:?})"),
    );
}

#[test]
fn criterion_2_double_integrator_brackets() {
    let start = Instant::now();
    let dint = double_integrator();
    let states: [[f64; 2]; 9] = [
        [1.0, 0.0],
        [-1.0, 0.0],
        [0.0, 1.0],
        [0.0, -1.0],
        [1.0, 1.0],
        [1.0, -1.0],
        [-1.0, 1.0],
        [2.0, 0.5],
        [0.5, -2.0],
    ];
    let opts = SolveOptions::default();
    let mut worst_gap = 0.0f64;
    let mut count = 0usize;
    for y0 in &states {
        for t in [0.5, 1.0, 2.0, 4.0] {
            let prob = NormProblem::new(dint.clone(), y0.to_vec(), t).unwrap();
            let quad = TimeGrid::new(t, 2048).unwrap();
            let grid = TimeGrid::new(t, 256).unwrap();
            let br = bracket(&prob, 2000, &quad, &grid, 1500).unwrap();
            let rel_gap = br.gap / br.lower;
            assert!(
                rel_gap <= 5e-3,
                "y0={y0:?} T={t}: bracket [{}, {}] rel gap {rel_gap:.3e}",
                br.lower,
                br.upper
            );
            let sol = minimal_norm(&prob, &opts).unwrap();
            assert!(
                sol.value >= br.lower * (1.0 - 1e-6) && sol.value <= br.upper * (1.0 + 1e-6),
                "y0={y0:?} T={t}: solver {} outside [{}, {}]",
                sol.value,
                br.lower,
                br.upper
            );
            worst_gap = worst_gap.max(rel_gap);
            count += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "suite took {elapsed:?}");
    pass(
        2,
        &format!("{count} instances inside independent brackets (worst rel gap {worst_gap:.2e}, {elapsed:?})"),
    );
}

#[test]
fn criterion_3_bang_bang_structure() {
    let heat4 = truncate(&heat_point_control(1.0, 4).unwrap()).unwrap();
    let heat6 = truncate(&heat_point_control(1.0, 6).unwrap()).unwrap();
    let geom = |j: usize| -> Vec<f64> { (0..j).map(|k| 0.5f64.powi(k as i32)).collect() };
    let cases: Vec<(&str, LtiSystem, Vec<f64>, f64, f64)> = vec![
        ("scalar", scalar_system(1.0, 1.0).unwrap(), vec![1.0], 1.0, 2.0),
        ("dint", double_integrator(), vec![1.0, 0.0], 2.0, 1.0),
        ("heat J=4", heat4, geom(4), 1.0, 3.0),
        ("heat J=6", heat6, geom(6), 1.0, 4.0),
    ];
    let opts = SolveOptions::default();
    let topts = TimeOptions::default();
    let mut worst_bb = 1.0f64;
    for (name, sys, y0, t, m) in &cases {
        let y0_norm = norm2(y0);
        let nsol = minimal_norm(
            &NormProblem::new(sys.clone(), y0.clone(), *t).unwrap(),
            &opts,
        )
        .unwrap();
        assert_eq!(nsol.status, NormStatus::Solved, "{name}");
        let control = nsol.control.as_ref().unwrap();
        assert_eq!(control.grid().panels(), 512, "{name}");
        let bb = check_bangbang(control, nsol.value, 1e-3);
        assert!(
            bb.fraction_on_boundary >= 0.99,
            "{name} norm control: bb fraction {}",
            bb.fraction_on_boundary
        );
        assert!(
            nsol.residual <= 1e-6 * y0_norm,
            "{name} norm residual {}",
            nsol.residual
        );
        worst_bb = worst_bb.min(bb.fraction_on_boundary);

        let tsol = minimal_time(
            &TimeProblem::new(sys.clone(), y0.clone(), *m).unwrap(),
            &topts,
        )
        .unwrap();
        assert_eq!(tsol.status, TimeStatus::Solved, "{name}");
        let control = tsol.control.as_ref().unwrap();
        assert_eq!(control.grid().panels(), 512, "{name}");
        let bb = check_bangbang(control, tsol.bound, 1e-3);
        assert!(
            bb.fraction_on_boundary >= 0.99,
            "{name} time control: bb fraction {}",
            bb.fraction_on_boundary
        );
        assert!(
            tsol.residual <= 1e-6 * y0_norm,
            "{name} time residual {}",
            tsol.residual
        );
        worst_bb = worst_bb.min(bb.fraction_on_boundary);
    }
    pass(
        3,
        &format!(
            "{} systems, minimal-norm and minimal-time controls bang-bang at 512 panels (worst fraction {worst_bb:.6})",
            cases.len()
        ),
    );
}

#[test]
fn criterion_4_roundtrip_inversion() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let opts = TimeOptions::default();
    let mut done = 0usize;
    let mut worst = 0.0f64;
    while done < 50 {
        let n = rng.random_range(1..=3usize);
        let a_entries: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b_entries: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = Matrix::new(n, n, a_entries).unwrap();
        let b = Matrix::new(n, 1, b_entries).unwrap();
        let sys = match LtiSystem::new(a, b) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if reachable_subspace(&sys, default_rank_tol(n)).dim() != n {
            continue;
        }
        let mut y0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y_norm = norm2(&y0);
        if y_norm < 0.1 {
            continue;
        }
        y0.iter_mut().for_each(|x| *x /= y_norm);
        let t = rng.random_range(0.5..2.0);
        let rel = roundtrip_check(&sys, &y0, t, &opts).unwrap();
        assert!(rel <= 1e-3, "instance {done} (n={n}, T={t}): roundtrip error {rel:.3e}");
        worst = worst.max(rel);
        done += 1;
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "suite took {elapsed:?}");
    pass(
        4,
        &format!("50 randomized instances invert T -> N -> T within 1e-3 (worst {worst:.2e}, {elapsed:?})"),
    );
}

fn random_entries(rng: &mut ChaCha8Rng, len: usize, lim: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-lim..lim)).collect()
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    loop {
        let m = Matrix::new(n, n, random_entries(rng, n * n, 1.0)).unwrap();
        let (q, rank) = full_orthogonal_basis(&m, default_rank_tol(n));
        if rank == n {
            return q;
        }
    }
}

struct Composed {
    sys: LtiSystem,
    q: Matrix,
    nc: usize,
    n: usize,
}

/// Builds A = Q·blkdiag(A_c, A_u)·Qᵀ, B = Q·[B_c; 0] with a controllable
/// (A_c, B_c) pair, so the reachable subspace is exactly Q·(R^nc × 0).
fn compose(rng: &mut ChaCha8Rng, n: usize, nc: usize, antistable: bool) -> Option<Composed> {
    let (ac, bc) = if antistable {
        let mut ac = Matrix::zeros(nc, nc);
        for i in 0..nc {
            ac.set(i, i, rng.random_range(0.5..1.5));
            for j in i + 1..nc {
                ac.set(i, j, rng.random_range(-0.5..0.5));
            }
        }
        let bc: Vec<f64> = (0..nc)
            .map(|_| {
                let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                s * rng.random_range(0.5..1.5)
            })
            .collect();
        (ac, bc)
    } else {
        let ac = Matrix::new(nc, nc, random_entries(rng, nc * nc, 0.7)).unwrap();
        let bc: Vec<f64> = (0..nc)
            .map(|_| {
                let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                s * rng.random_range(0.3..1.0)
            })
            .collect();
        (ac, bc)
    };
    let sub = LtiSystem::new(ac.clone(), Matrix::column(&bc).ok()?).ok()?;
    if reachable_subspace(&sub, default_rank_tol(nc)).dim() != nc {
        return None;
    }
    let mut blk = Matrix::zeros(n, n);
    for i in 0..nc {
        for j in 0..nc {
            blk.set(i, j, ac.get(i, j));
        }
    }
    let nu = n - nc;
    if nu > 0 {
        let au = random_entries(rng, nu * nu, 0.8);
        for i in 0..nu {
            for j in 0..nu {
                blk.set(nc + i, nc + j, au[i * nu + j]);
            }
        }
    }
    let mut bfull = vec![0.0; n];
    bfull[..nc].copy_from_slice(&bc);
    let q = random_orthogonal(rng, n);
    let a = q.mul(&blk).mul(&q.transpose());
    let b = q.mul(&Matrix::column(&bfull).ok()?);
    let sys = LtiSystem::new(a, b).ok()?;
    // the solvers must see the same split the construction intended
    if reachable_subspace(&sys, default_rank_tol(n)).dim() != nc {
        return None;
    }
    Some(Composed { sys, q, nc, n })
}

fn mixed_state(rng: &mut ChaCha8Rng, c: &Composed, unreachable: bool) -> Vec<f64> {
    let mut v = vec![0.0; c.n];
    for x in v.iter_mut().take(c.nc) {
        let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        *x = s * rng.random_range(0.2..1.0);
    }
    if unreachable {
        for x in v.iter_mut().skip(c.nc) {
            let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            *x = s * rng.random_range(0.5..1.0);
        }
    }
    let mut y0 = c.q.mul_vec(&v);
    let norm = norm2(&y0);
    y0.iter_mut().for_each(|x| *x /= norm);
    y0
}

#[test]
fn criterion_5_classification_consistency() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let limit = LimitOptions::default();
    let solve = SolveOptions::default();
    let topts = TimeOptions::default();
    let mut counts = [0usize; 3];
    let mut i = 0usize;
    while i < 100 {
        let cat = i % 3;
        let n = rng.random_range(2..=4usize);
        let nc = match cat {
            0 => rng.random_range(1..n),
            _ => rng.random_range(1..=n),
        };
        let composed = match compose(&mut rng, n, nc, cat == 2) {
            Some(c) => c,
            None => continue,
        };
        let thresholds = ValidateThresholds {
            y0_norm: Some(1.0),
            ..ValidateThresholds::default()
        };
        match cat {
            0 => {
                // state with an unreachable component: infeasible at every horizon
                let y0 = mixed_state(&mut rng, &composed, true);
                for t in [0.5, 2.0] {
                    let c = classify_finite_dim(&composed.sys, &y0, Query::Horizon(t), &limit)
                        .unwrap();
                    let label = c.label.unwrap();
                    assert_eq!(label.cell, Cell::W34, "instance {i}");
                    let prob =
                        NormProblem::new(composed.sys.clone(), y0.clone(), t).unwrap();
                    let sol = minimal_norm(&prob, &solve).unwrap();
                    assert_eq!(sol.status, NormStatus::Infeasible, "instance {i} T={t}");
                    let report =
                        cross_validate(&label, &SolutionRef::Norm(&sol), &thresholds).unwrap();
                    assert!(report.ok(), "instance {i}: {:?}", report.violations);
                }
            }
            1 => {
                // reachable state, bound above the limit norm: bang-bang solve
                let y0 = mixed_state(&mut rng, &composed, false);
                let n1 = minimal_norm(
                    &NormProblem::new(composed.sys.clone(), y0.clone(), 1.0).unwrap(),
                    &solve,
                )
                .unwrap();
                assert_eq!(n1.status, NormStatus::Solved, "instance {i}");
                let m = 2.0 * n1.value;
                let c =
                    classify_finite_dim(&composed.sys, &y0, Query::Bound(m), &limit).unwrap();
                assert!(!c.uncertain, "instance {i}");
                let label = c.label.unwrap();
                assert_eq!(label.cell, Cell::V32, "instance {i}");
                let prob = TimeProblem::new(composed.sys.clone(), y0.clone(), m).unwrap();
                let sol = minimal_time(&prob, &topts).unwrap();
                assert_eq!(sol.status, TimeStatus::Solved, "instance {i}");
                let report =
                    cross_validate(&label, &SolutionRef::Time(&sol), &thresholds).unwrap();
                assert!(report.ok(), "instance {i}: {:?}", report.violations);
            }
            _ => {
                // antistable reachable block, bound below the limit norm
                let y0 = mixed_state(&mut rng, &composed, false);
                let boundary = finite_dim_boundary_data(&composed.sys, &y0, &limit).unwrap();
                assert!(boundary.converged, "instance {i}");
                let n_inf = boundary.data.n_at_t1.as_f64().unwrap();
                assert!(n_inf > 1e-9, "instance {i}: antistable limit norm {n_inf}");
                let m = 0.5 * n_inf;
                let c =
                    classify_finite_dim(&composed.sys, &y0, Query::Bound(m), &limit).unwrap();
                let label = c.label.unwrap();
                assert_eq!(label.cell, Cell::V31, "instance {i}");
                let prob = TimeProblem::new(composed.sys.clone(), y0.clone(), m).unwrap();
                let sol = minimal_time(&prob, &topts).unwrap();
                assert_eq!(sol.status, TimeStatus::NoAdmissibleControl, "instance {i}");
                let report =
                    cross_validate(&label, &SolutionRef::Time(&sol), &thresholds).unwrap();
                assert!(report.ok(), "instance {i}: {:?}", report.violations);
            }
        }
        counts[cat] += 1;
        i += 1;
    }
    let elapsed = start.elapsed();
    pass(
        5,
        &format!(
            "100 block-composed systems with zero violations ({} unreachable, {} solvable, {} inadmissible; {elapsed:?})",
            counts[0], counts[1], counts[2]
        ),
    );
}

#[test]
fn criterion_6_property_suite() {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let config = Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new(config);
    let strategy = (
        -2.0..2.0f64,
        prop_oneof![0.25..2.0f64, -2.0..-0.25f64],
        prop_oneof![0.1..3.0f64, -3.0..-0.1f64],
        0.25..4.0f64,
    );
    let result = runner.run(&strategy, |(a, b, y0, t)| {
        let sol = minimal_norm(&scalar_prob(a, b, y0, t), &opts).unwrap();
        let cf = scalar_closed_form(a, y0, t, b);
        prop_assert!(
            (sol.value - cf).abs() <= 1e-4 * cf,
            "closed form: a={a} b={b} y0={y0} T={t}: {} vs {cf}",
            sol.value
        );
        let doubled = minimal_norm(&scalar_prob(a, b, 2.0 * y0, t), &opts).unwrap();
        prop_assert!(
            (doubled.value - 2.0 * sol.value).abs() <= 1e-6 * 2.0 * sol.value,
            "homogeneity: a={a} b={b} y0={y0} T={t}: {} vs {}",
            doubled.value,
            2.0 * sol.value
        );
        Ok(())
    });
    assert!(result.is_ok(), "{result:?}");
    // deterministic positive-homogeneity grid on the double integrator
    let mut worst = 0.0f64;
    for y0 in [[1.0, 0.0], [0.3, -0.7], [1.0, 1.0], [-0.5, 2.0]] {
        for t in [1.0, 2.0] {
            let base = minimal_norm(
                &NormProblem::new(double_integrator(), y0.to_vec(), t).unwrap(),
                &opts,
            )
            .unwrap();
            let scaled = minimal_norm(
                &NormProblem::new(
                    double_integrator(),
                    y0.iter().map(|x| 2.0 * x).collect(),
                    t,
                )
                .unwrap(),
                &opts,
            )
            .unwrap();
            let rel = (scaled.value - 2.0 * base.value).abs() / (2.0 * base.value);
            assert!(rel <= 1e-6, "y0={y0:?} T={t}: rel {rel:.3e}");
            worst = worst.max(rel);
        }
    }
    let elapsed = start.elapsed();
    pass(
        6,
        &format!("1000 randomized trials, 0 failures; N(T, 2y0) = 2N(T, y0) within 1e-6 (worst {worst:.2e}, {elapsed:?})"),
    );
}

#[test]
fn criterion_7_spectral_truncations() {
    let start = Instant::now();
    let excluded = [
        Cell::W11,
        Cell::W12,
        Cell::W24,
        Cell::W33,
        Cell::V1,
        Cell::V21,
        Cell::V31,
    ];
    let limit = LimitOptions::default();
    let opts = SolveOptions::default();
    let mut models = 0usize;
    for x0 in [0.3, 0.7, 1.0, 1.3, 2.2] {
        for j in [2usize, 3, 4, 6] {
            let model = heat_point_control(x0, j).unwrap();
            let sys = truncate(&model).unwrap();
            let y0 = vec![1.0 / (j as f64).sqrt(); j];
            // structural facts: every mode is excited, the flow never
            // annihilates a state in finite time, and waiting is free
            assert_eq!(
                reachable_subspace(&sys, default_rank_tol(j)).dim(),
                j,
                "x0={x0} J={j}"
            );
            let facts = BoundaryData::new(
                ExtReal::Finite(0.0),
                ExtReal::Inf,
                ExtReal::Inf,
                ExtReal::Finite(0.0),
            )
            .unwrap();
            let w = classify_norm_pair(&facts, 1.0).unwrap();
            let v = classify_time_pair(&facts, 1.0).unwrap();
            assert!(!excluded.contains(&w.cell), "x0={x0} J={j}: {}", w.cell);
            assert!(!excluded.contains(&v.cell), "x0={x0} J={j}: {}", v.cell);
            // the numeric route must stay out of the same cells
            let cw = classify_finite_dim(&sys, &y0, Query::Horizon(1.0), &limit).unwrap();
            assert!(!excluded.contains(&cw.label.unwrap().cell), "x0={x0} J={j}");
            let cv = classify_finite_dim(&sys, &y0, Query::Bound(1.0), &limit).unwrap();
            assert!(!cv.uncertain, "x0={x0} J={j}");
            assert!(!excluded.contains(&cv.label.unwrap().cell), "x0={x0} J={j}");
            // the limit norm collapses within five doublings of the horizon
            let n1 = minimal_norm(
                &NormProblem::new(sys.clone(), y0.clone(), 1.0).unwrap(),
                &opts,
            )
            .unwrap();
            let ladder = LimitOptions {
                base_horizon: 1.0,
                max_doublings: 5,
                ..LimitOptions::default()
            };
            match norm_at_infinity(&sys, &y0, &ladder).unwrap() {
                NormAtInfinity::Estimate { value, horizon, .. } => {
                    assert!(horizon <= 32.0 + 1e-9, "x0={x0} J={j}");
                    assert!(
                        value <= 1e-3 * n1.value,
                        "x0={x0} J={j}: limit {value} vs N(1) {}",
                        n1.value
                    );
                }
                NormAtInfinity::Unreachable => panic!("x0={x0} J={j}: reachable model"),
            }
            models += 1;
        }
    }
    let elapsed = start.elapsed();
    pass(
        7,
        &format!("{models} spectral truncations avoid the forbidden cells; limit norms collapse by T=32 ({elapsed:?})"),
    );
}

/// Independent re-encoding of the cell definitions over plain floats
/// (infinity encodes the extended value), kept deliberately separate from
/// the production classifier.
fn w_table(t0: f64, t1: f64, n0: f64, _n1: f64, t: f64) -> Vec<Cell> {
    let inf = f64::INFINITY;
    let finite_pos = n0 > 0.0 && n0 < inf;
    let mut hits = Vec::new();
    if n0 == 0.0 && t < t0 {
        hits.push(Cell::W11);
    }
    if n0 == 0.0 && t >= t0 {
        hits.push(Cell::W12);
    }
    if finite_pos && t < t0 {
        hits.push(Cell::W21);
    }
    if finite_pos && t == t0 {
        hits.push(Cell::W22);
    }
    if finite_pos && t0 < t && t < t1 {
        hits.push(Cell::W23);
    }
    if finite_pos && t >= t1 {
        hits.push(Cell::W24);
    }
    if n0 == inf && t0 < inf && t <= t0 {
        hits.push(Cell::W31);
    }
    if n0 == inf && t0 < inf && t0 < t && t < t1 {
        hits.push(Cell::W32);
    }
    if n0 == inf && t0 < inf && t >= t1 {
        hits.push(Cell::W33);
    }
    if t0 == inf {
        hits.push(Cell::W34);
    }
    hits
}

fn v_table(t0: f64, _t1: f64, n0: f64, n1: f64, m: f64) -> Vec<Cell> {
    let inf = f64::INFINITY;
    let finite_pos = n0 > 0.0 && n0 < inf;
    let mut hits = Vec::new();
    if n0 == 0.0 {
        hits.push(Cell::V1);
    }
    if finite_pos && m <= n1 {
        hits.push(Cell::V21);
    }
    if finite_pos && n1 < m && m < n0 {
        hits.push(Cell::V22);
    }
    if finite_pos && n1 < m && m == n0 {
        hits.push(Cell::V23);
    }
    if finite_pos && m > n0 {
        hits.push(Cell::V24);
    }
    if n0 == inf && t0 < inf && m <= n1 {
        hits.push(Cell::V31);
    }
    if n0 == inf && t0 < inf && m > n1 {
        hits.push(Cell::V32);
    }
    if t0 == inf {
        hits.push(Cell::V33);
    }
    hits
}

fn lattice(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(1..=80u32) as f64 / 8.0
}

/// Draws one consistent tuple as plain floats (dyadic values make the exact
/// equality branches reachable).
fn consistent_tuple(rng: &mut ChaCha8Rng) -> (f64, f64, f64, f64) {
    let inf = f64::INFINITY;
    match rng.random_range(0..4u32) {
        0 => {
            let tau = lattice(rng);
            (tau, tau, 0.0, 0.0)
        }
        1 => {
            let t0 = lattice(rng);
            if rng.random_bool(0.5) {
                (t0, t0 + lattice(rng), lattice(rng), 0.0)
            } else {
                let n1 = if rng.random_bool(0.5) { 0.0 } else { lattice(rng) };
                let n0 = if n1 > 0.0 && rng.random_bool(0.2) {
                    n1
                } else {
                    n1 + lattice(rng)
                };
                (t0, inf, n0, n1)
            }
        }
        2 => {
            let t0 = if rng.random_bool(0.25) { 0.0 } else { lattice(rng) };
            if rng.random_bool(0.5) {
                (t0, t0 + lattice(rng), inf, 0.0)
            } else {
                let n1 = if rng.random_bool(0.5) { 0.0 } else { lattice(rng) };
                (t0, inf, inf, n1)
            }
        }
        _ => (inf, inf, inf, inf),
    }
}

fn to_bd(tuple: (f64, f64, f64, f64)) -> lticontrol::Result<BoundaryData> {
    let (t0, t1, n0, n1) = tuple;
    BoundaryData::new(
        ExtReal::from_f64(t0)?,
        ExtReal::from_f64(t1)?,
        ExtReal::from_f64(n0)?,
        ExtReal::from_f64(n1)?,
    )
}

#[test]
fn criterion_8_classifier_fuzz() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 100_000usize;
    for trial in 0..trials {
        let (t0, t1, n0, n1) = consistent_tuple(&mut rng);
        let bd = to_bd((t0, t1, n0, n1))
            .unwrap_or_else(|e| panic!("consistent tuple ({t0},{t1},{n0},{n1}) rejected: {e}"));
        // horizon query, sometimes landing exactly on t0 or t1
        let t = match rng.random_range(0..4u32) {
            0 if t0.is_finite() && t0 > 0.0 => t0,
            1 if t1.is_finite() => t1,
            _ => lattice(&mut rng),
        };
        let w = classify_norm_pair(&bd, t).unwrap();
        let hits = w_table(t0, t1, n0, n1, t);
        assert_eq!(
            hits.len(),
            1,
            "trial {trial}: ({t0},{t1},{n0},{n1}) T={t} matched {hits:?}"
        );
        assert_eq!(hits[0], w.cell, "trial {trial}: T={t} on ({t0},{t1},{n0},{n1})");
        // bound query, sometimes landing exactly on n0 or n1
        let m = match rng.random_range(0..4u32) {
            0 if n0.is_finite() && n0 > 0.0 => n0,
            1 if n1.is_finite() && n1 > 0.0 => n1,
            _ => lattice(&mut rng),
        };
        let v = classify_time_pair(&bd, m).unwrap();
        let hits = v_table(t0, t1, n0, n1, m);
        assert_eq!(
            hits.len(),
            1,
            "trial {trial}: ({t0},{t1},{n0},{n1}) M={m} matched {hits:?}"
        );
        assert_eq!(hits[0], v.cell, "trial {trial}: M={m} on ({t0},{t1},{n0},{n1})");
    }

    // every mutation below breaks exactly one consistency rule
    let inf = f64::INFINITY;
    let mut rejected = 0usize;
    let mutations = 10_000usize;
    while rejected < mutations {
        let (t0, t1, n0, n1) = consistent_tuple(&mut rng);
        let broken = match rng.random_range(0..7u32) {
            0 => (-lattice(&mut rng), t1, n0, n1),
            1 if t1.is_finite() => (t1 + lattice(&mut rng), t1, n0, n1),
            2 if n0.is_finite() => (t0, t1, n0, n0 + lattice(&mut rng)),
            3 if n0.is_finite() && n0 > 0.0 => (0.0, t1, n0, n1),
            4 if t1.is_finite() => (t0, t1, n0, lattice(&mut rng)),
            5 if t0 > 0.0 && t0.is_finite() && t1 > t0 => (t0, t1, 0.0, 0.0),
            6 if t0.is_finite() => (t0, t1, inf, inf),
            _ => continue,
        };
        assert!(
            to_bd(broken).is_err(),
            "mutated tuple {broken:?} from ({t0},{t1},{n0},{n1}) accepted"
        );
        rejected += 1;
    }
    let elapsed = start.elapsed();
    pass(
        8,
        &format!("{trials} consistent tuples match the independent cell table exactly once per family; {mutations} mutations rejected ({elapsed:?})"),
    );
}

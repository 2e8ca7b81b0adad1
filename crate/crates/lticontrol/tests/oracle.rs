//! Oracle validators: closed forms, direction-grid dual bounds, primal
//! feasibility upper bounds, and their agreement on reference instances.

use lticontrol::models::{double_integrator, scalar_system};
use lticontrol::norm::{minimal_norm, NormProblem, SolveOptions};
use lticontrol::oracle::{
    bracket, dual_grid_search, primal_grid_upper_bound, scalar_closed_form, scalar_minimal_time,
    unit_directions, write_bracket_csv, OracleBracket,
};
use lticontrol::system::TimeGrid;
use lticontrol::Error;

fn scalar_prob(a: f64, b: f64, y0: f64, t: f64) -> NormProblem {
    NormProblem::new(scalar_system(a, b).unwrap(), vec![y0], t).unwrap()
}

#[test]
fn closed_form_reference_values() {
    assert_eq!(scalar_closed_form(0.0, 1.0, 2.0, 1.0), 0.5);
    let e = std::f64::consts::E;
    let n1 = scalar_closed_form(1.0, 1.0, 1.0, 1.0);
    assert!((n1 - 1.0 / (1.0 - 1.0 / e)).abs() < 1e-15);
    assert!((n1 - 1.5819767068693265).abs() < 1e-12);
    let nm1 = scalar_closed_form(-1.0, 1.0, 1.0, 1.0);
    assert!((nm1 - 1.0 / (e - 1.0)).abs() < 1e-15);
    assert!((nm1 - 0.5819767068693265).abs() < 1e-12);
}

#[test]
fn closed_form_scaling_relations() {
    // homogeneity in y0 and inverse homogeneity in b
    let base = scalar_closed_form(0.7, 1.3, 2.0, 0.9);
    assert!((scalar_closed_form(0.7, 2.6, 2.0, 0.9) - 2.0 * base).abs() < 1e-12);
    assert!((scalar_closed_form(0.7, 1.3, 2.0, 1.8) - 0.5 * base).abs() < 1e-12);
    // sign of y0 and b is immaterial
    assert_eq!(
        scalar_closed_form(0.7, -1.3, 2.0, 0.9),
        scalar_closed_form(0.7, 1.3, 2.0, -0.9)
    );
}

#[test]
fn minimal_time_closed_form() {
    // a=1: T = ln(M/(M−1)) for y0=b=1
    let t = scalar_minimal_time(1.0, 1.0, 2.0, 1.0).unwrap();
    assert!((t - std::f64::consts::LN_2).abs() < 1e-12);
    // a=0: T = |y0|/(|b| M)
    let t = scalar_minimal_time(0.0, 3.0, 2.0, 1.0).unwrap();
    assert!((t - 1.5).abs() < 1e-12);
    // bound at or below the norm at infinity: no admissible control
    assert!(scalar_minimal_time(1.0, 1.0, 1.0, 1.0).is_none());
    assert!(scalar_minimal_time(1.0, 1.0, 0.5, 1.0).is_none());
    // stable scalar: any positive bound works
    assert!(scalar_minimal_time(-1.0, 1.0, 0.1, 1.0).is_some());
}

#[test]
fn unit_direction_grids() {
    let d1 = unit_directions(1, 100).unwrap();
    assert!(d1.iter().any(|d| d[0] == 1.0) && d1.iter().any(|d| d[0] == -1.0));
    for n in [1, 2, 3] {
        let dirs = unit_directions(n, 250).unwrap();
        assert!(dirs.len() >= 2);
        for d in &dirs {
            assert_eq!(d.len(), n);
            let norm: f64 = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }
    assert!(unit_directions(1, 0).is_err());
}

#[test]
fn dual_grid_matches_scalar_closed_form() {
    for (a, t) in [(1.0, 1.0), (-1.0, 1.0), (0.0, 2.0), (2.0, 0.5)] {
        let prob = scalar_prob(a, 1.0, 1.0, t);
        let quad = TimeGrid::new(t, 16384).unwrap();
        let lower = dual_grid_search(&prob, 128, &quad).unwrap();
        let cf = scalar_closed_form(a, 1.0, t, 1.0);
        assert!(
            (lower - cf).abs() <= 1e-9 * cf,
            "a={a} T={t}: grid {lower} vs closed form {cf}"
        );
    }
}

#[test]
fn dual_grid_preconditions() {
    let prob = scalar_prob(1.0, 1.0, 1.0, 1.0);
    let quad = TimeGrid::new(1.0, 256).unwrap();
    assert!(matches!(
        dual_grid_search(&prob, 99, &quad),
        Err(Error::Invalid(_))
    ));
    let quad_wrong = TimeGrid::new(2.0, 256).unwrap();
    assert!(dual_grid_search(&prob, 128, &quad_wrong).is_err());
    // n = 4 exceeds the certified range
    let model = lticontrol::models::heat_point_control(1.0, 4).unwrap();
    let sys = lticontrol::models::truncate(&model).unwrap();
    let prob4 = NormProblem::new(sys, vec![1.0, 0.0, 0.0, 0.0], 1.0).unwrap();
    let quad4 = TimeGrid::new(1.0, 256).unwrap();
    assert!(dual_grid_search(&prob4, 128, &quad4).is_err());
}

#[test]
fn dual_grid_flags_unreachable_states() {
    // diag(−1,−2) with B = e1: the second mode is untouched by the control
    let a = lticontrol::Matrix::diagonal(&[-1.0, -2.0]).unwrap();
    let b = lticontrol::Matrix::column(&[1.0, 0.0]).unwrap();
    let sys = lticontrol::LtiSystem::new(a, b).unwrap();
    let prob = NormProblem::new(sys, vec![0.0, 1.0], 2.0).unwrap();
    let quad = TimeGrid::new(2.0, 512).unwrap();
    assert!(matches!(
        dual_grid_search(&prob, 500, &quad),
        Err(Error::InfeasibilityEvidence(_))
    ));
}

#[test]
fn dint_dual_grid_reference_value() {
    // frozen reference run: 10^4 directions, quad 4096 ⇒ lower within 1e-3
    // of the hand-derived N(2, e1) = 1 (one switch at t = 1)
    let prob = NormProblem::new(double_integrator(), vec![1.0, 0.0], 2.0).unwrap();
    let quad = TimeGrid::new(2.0, 4096).unwrap();
    let lower = dual_grid_search(&prob, 10_000, &quad).unwrap();
    assert!((lower - 1.0).abs() <= 1e-3, "lower = {lower}");
    assert!(lower <= 1.0 + 1e-12, "a dual ratio can never exceed the norm");
}

#[test]
fn primal_upper_bound_reference_instances() {
    // frozen from the oracle freeze run
    let prob = scalar_prob(0.0, 1.0, 1.0, 2.0);
    let grid = TimeGrid::new(2.0, 64).unwrap();
    let (upper, control) = primal_grid_upper_bound(&prob, &grid, 1200).unwrap();
    assert!(upper <= 0.5 + 1e-3, "upper = {upper}");
    assert_eq!(control.grid().panels(), 64);

    let prob = scalar_prob(1.0, 1.0, 1.0, 1.0);
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let (upper, _) = primal_grid_upper_bound(&prob, &grid, 1200).unwrap();
    assert!(upper <= 1.581977 * (1.0 + 2e-3), "upper = {upper}");
}

#[test]
fn primal_upper_bound_rejects_unreachable() {
    let a = lticontrol::Matrix::diagonal(&[-1.0, -2.0]).unwrap();
    let b = lticontrol::Matrix::column(&[1.0, 0.0]).unwrap();
    let sys = lticontrol::LtiSystem::new(a, b).unwrap();
    let prob = NormProblem::new(sys, vec![0.0, 1.0], 2.0).unwrap();
    let grid = TimeGrid::new(2.0, 128).unwrap();
    assert!(matches!(
        primal_grid_upper_bound(&prob, &grid, 400),
        Err(Error::InfeasibilityEvidence(_))
    ));
}

#[test]
fn dint_bracket_contains_solver_value() {
    let prob = NormProblem::new(double_integrator(), vec![1.0, 0.0], 2.0).unwrap();
    let quad = TimeGrid::new(2.0, 2048).unwrap();
    let grid = TimeGrid::new(2.0, 256).unwrap();
    let br = bracket(&prob, 2000, &quad, &grid, 1500).unwrap();
    assert!(br.lower <= br.upper);
    assert!((br.gap - (br.upper - br.lower)).abs() < 1e-15);
    assert!(br.gap / br.lower <= 5e-3, "gap = {}", br.gap);
    let sol = minimal_norm(&prob, &SolveOptions::default()).unwrap();
    assert!(
        sol.value >= br.lower - 1e-9 && sol.value <= br.upper + 1e-9,
        "solver {} outside [{}, {}]",
        sol.value,
        br.lower,
        br.upper
    );
}

#[test]
fn bracket_gap_shrinks_under_refinement() {
    let prob = NormProblem::new(double_integrator(), vec![1.0, 1.0], 1.0).unwrap();
    let coarse = bracket(
        &prob,
        200,
        &TimeGrid::new(1.0, 512).unwrap(),
        &TimeGrid::new(1.0, 64).unwrap(),
        600,
    )
    .unwrap();
    let fine = bracket(
        &prob,
        800,
        &TimeGrid::new(1.0, 1024).unwrap(),
        &TimeGrid::new(1.0, 128).unwrap(),
        1200,
    )
    .unwrap();
    assert!(fine.gap <= coarse.gap * (1.0 + 1e-9));
}

#[test]
fn heat_solver_below_primal_upper_bound() {
    // n = 4 exceeds the dual grid range; the primal feasibility bound still
    // applies and pins the solver value from above
    let model = lticontrol::models::heat_point_control(1.0, 4).unwrap();
    let sys = lticontrol::models::truncate(&model).unwrap();
    let prob = NormProblem::new(sys, vec![1.0, 0.5, 0.25, 0.125], 1.0).unwrap();
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let (upper, _) = primal_grid_upper_bound(&prob, &grid, 2000).unwrap();
    let sol = minimal_norm(&prob, &SolveOptions::default()).unwrap();
    assert!(sol.value <= upper * (1.0 + 1e-9));
    assert!((upper - sol.value) / sol.value <= 5e-3);
}

#[test]
fn bracket_csv_schema() {
    let rows = vec![
        OracleBracket {
            lower: 0.5,
            upper: 0.625,
            gap: 0.125,
        },
        OracleBracket {
            lower: 1.0,
            upper: 1.0,
            gap: 0.0,
        },
    ];
    let mut buf = Vec::new();
    write_bracket_csv(&mut buf, &[(1.0, rows[0].clone()), (2.0, rows[1].clone())]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "T,lower,upper,gap");
    assert!(lines.next().unwrap().starts_with("1.00000000e0,"));
}

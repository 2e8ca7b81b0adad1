//! Decomposition cells: extended reals, boundary-data consistency rules,
//! the two classifiers, numeric boundary data, and cross-validation.

use lticontrol::classify::{
    classify_finite_dim, classify_norm_pair, classify_report, classify_time_pair, cross_validate,
    finite_dim_boundary_data, BoundaryData, Cell, CellLabel, ClassifyReport, ExtReal, Family,
    Prediction, Query, SolutionRef, ValidateThresholds,
};
use lticontrol::models::{double_integrator, scalar_system};
use lticontrol::norm::{minimal_norm, LimitOptions, NormProblem, SolveOptions};
use lticontrol::time::{minimal_time, TimeOptions, TimeProblem};
use lticontrol::{Error, LtiSystem, Matrix};

fn fin(x: f64) -> ExtReal {
    ExtReal::Finite(x)
}

fn bd(t0: ExtReal, t1: ExtReal, n0: ExtReal, n1: ExtReal) -> BoundaryData {
    BoundaryData::new(t0, t1, n0, n1).unwrap()
}

fn unreachable_pair() -> LtiSystem {
    let a = Matrix::diagonal(&[-1.0, -2.0]).unwrap();
    let b = Matrix::column(&[1.0, 0.0]).unwrap();
    LtiSystem::new(a, b).unwrap()
}

#[test]
fn ext_real_conversions() {
    assert_eq!(ExtReal::from_f64(2.5).unwrap(), fin(2.5));
    assert_eq!(ExtReal::from_f64(f64::INFINITY).unwrap(), ExtReal::Inf);
    assert!(ExtReal::from_f64(f64::NAN).is_err());
    assert!(ExtReal::from_f64(f64::NEG_INFINITY).is_err());
    assert!(ExtReal::Inf.is_inf());
    assert_eq!(fin(3.0).as_f64(), Some(3.0));
    assert_eq!(ExtReal::Inf.as_f64(), None);
    assert!(fin(0.0).is_zero());
    assert!(!fin(1.0).is_zero());
    assert_eq!(fin(1.5).to_string(), "1.5");
    assert_eq!(ExtReal::Inf.to_string(), "inf");
}

#[test]
fn ext_real_serde_round_trip() {
    assert_eq!(serde_json::to_string(&fin(2.0)).unwrap(), "2.0");
    assert_eq!(serde_json::to_string(&ExtReal::Inf).unwrap(), "\"inf\"");
    assert_eq!(serde_json::from_str::<ExtReal>("2.0").unwrap(), fin(2.0));
    assert_eq!(serde_json::from_str::<ExtReal>("\"inf\"").unwrap(), ExtReal::Inf);
    assert!(serde_json::from_str::<ExtReal>("\"nan\"").is_err());
}

#[test]
fn boundary_data_accepts_consistent_tuples() {
    // one representative per structural regime
    bd(fin(2.0), fin(2.0), fin(0.0), fin(0.0)); // n0 = 0
    bd(fin(1.0), fin(2.0), fin(5.0), fin(0.0)); // 0 < n0 < inf, finite t1
    bd(fin(2.0), ExtReal::Inf, fin(5.0), fin(1.0)); // 0 < n0 < inf, t1 = inf
    bd(fin(0.0), ExtReal::Inf, ExtReal::Inf, fin(2.0)); // n0 = inf, t0 = 0
    bd(fin(1.0), fin(2.0), ExtReal::Inf, fin(0.0)); // n0 = inf, t0 finite positive
    bd(ExtReal::Inf, ExtReal::Inf, ExtReal::Inf, ExtReal::Inf); // never controllable
}

#[test]
fn boundary_data_rejects_each_inconsistency() {
    let cases: [(ExtReal, ExtReal, ExtReal, ExtReal); 10] = [
        // negative t0
        (fin(-1.0), ExtReal::Inf, ExtReal::Inf, fin(0.0)),
        // t1 = 0
        (fin(0.0), fin(0.0), ExtReal::Inf, ExtReal::Inf),
        // t0 > t1
        (fin(3.0), fin(2.0), fin(5.0), fin(0.0)),
        // negative norm
        (fin(1.0), ExtReal::Inf, fin(-2.0), fin(0.0)),
        // n1 > n0
        (fin(1.0), ExtReal::Inf, fin(1.0), fin(2.0)),
        // t0 = 0 with a finite norm at t0
        (fin(0.0), ExtReal::Inf, fin(5.0), fin(1.0)),
        // n0 = 0 without t0 = t1
        (fin(1.0), fin(2.0), fin(0.0), fin(0.0)),
        // t0 = t1 finite with a positive norm
        (fin(1.0), fin(1.0), fin(3.0), fin(3.0)),
        // finite t1 with a nonzero norm at t1
        (fin(1.0), fin(2.0), fin(5.0), fin(1.0)),
        // finite t0 with an infinite norm at t1
        (fin(1.0), ExtReal::Inf, ExtReal::Inf, ExtReal::Inf),
    ];
    for (t0, t1, n0, n1) in cases {
        let err = BoundaryData::new(t0, t1, n0, n1).unwrap_err();
        assert!(
            matches!(err, Error::InconsistentBoundaryData(_)),
            "({t0}, {t1}, {n0}, {n1}) gave {err:?}"
        );
    }
    // t0 = t1 = inf with mismatched norms (n0 forced infinite, n1 finite)
    let err = BoundaryData::new(ExtReal::Inf, ExtReal::Inf, ExtReal::Inf, fin(2.0)).unwrap_err();
    assert!(matches!(err, Error::InconsistentBoundaryData(_)));
}

#[test]
fn every_w_cell_is_reachable() {
    let zero = bd(fin(2.0), fin(2.0), fin(0.0), fin(0.0));
    let finite = bd(fin(1.0), fin(2.0), fin(5.0), fin(0.0));
    let inf_finite_t0 = bd(fin(1.0), fin(2.0), ExtReal::Inf, fin(0.0));
    let never = bd(ExtReal::Inf, ExtReal::Inf, ExtReal::Inf, ExtReal::Inf);
    let cases = [
        (&zero, 1.0, Cell::W11),
        (&zero, 2.0, Cell::W12),
        (&zero, 3.0, Cell::W12),
        (&finite, 0.5, Cell::W21),
        (&finite, 1.0, Cell::W22),
        (&finite, 1.5, Cell::W23),
        (&finite, 2.0, Cell::W24),
        (&finite, 3.0, Cell::W24),
        (&inf_finite_t0, 0.5, Cell::W31),
        (&inf_finite_t0, 1.0, Cell::W31),
        (&inf_finite_t0, 1.5, Cell::W32),
        (&inf_finite_t0, 2.0, Cell::W33),
        (&never, 7.0, Cell::W34),
    ];
    for (data, t, want) in cases {
        let label = classify_norm_pair(data, t).unwrap();
        assert_eq!(label.cell, want, "T = {t}");
        assert_eq!(label.family, Family::W);
    }
}

#[test]
fn every_v_cell_is_reachable() {
    let zero = bd(fin(1.0), fin(1.0), fin(0.0), fin(0.0));
    let finite = bd(fin(2.0), ExtReal::Inf, fin(5.0), fin(1.0));
    let inf_finite_t0 = bd(fin(0.0), ExtReal::Inf, ExtReal::Inf, fin(2.0));
    let never = bd(ExtReal::Inf, ExtReal::Inf, ExtReal::Inf, ExtReal::Inf);
    let cases = [
        (&zero, 3.0, Cell::V1),
        (&finite, 0.5, Cell::V21),
        (&finite, 1.0, Cell::V21),
        (&finite, 3.0, Cell::V22),
        (&finite, 5.0, Cell::V23),
        (&finite, 7.0, Cell::V24),
        (&inf_finite_t0, 1.0, Cell::V31),
        (&inf_finite_t0, 2.0, Cell::V31),
        (&inf_finite_t0, 3.0, Cell::V32),
        (&never, 1.0, Cell::V33),
    ];
    for (data, m, want) in cases {
        let label = classify_time_pair(data, m).unwrap();
        assert_eq!(label.cell, want, "M = {m}");
        assert_eq!(label.family, Family::V);
    }
}

#[test]
fn cell_predictions() {
    let expect = [
        (Cell::W11, Prediction::NoAdmissibleControl),
        (Cell::W12, Prediction::BangBangNullOptimal),
        (Cell::W21, Prediction::NoAdmissibleControl),
        (Cell::W22, Prediction::ExistsOnly),
        (Cell::W23, Prediction::BangBangNullNotOptimal),
        (Cell::W24, Prediction::BangBangNullOptimal),
        (Cell::W31, Prediction::NoAdmissibleControl),
        (Cell::W32, Prediction::BangBangNullNotOptimal),
        (Cell::W33, Prediction::BangBangNullOptimal),
        (Cell::W34, Prediction::NoAdmissibleControl),
        (Cell::V1, Prediction::InfinitelyManyNoBB),
        (Cell::V21, Prediction::NoAdmissibleControl),
        (Cell::V22, Prediction::BangBang),
        (Cell::V23, Prediction::ExistsOnly),
        (Cell::V24, Prediction::InfinitelyManyNoBB),
        (Cell::V31, Prediction::NoAdmissibleControl),
        (Cell::V32, Prediction::BangBang),
        (Cell::V33, Prediction::NoAdmissibleControl),
    ];
    for (cell, want) in expect {
        assert_eq!(cell.prediction(), want, "{cell}");
    }
}

#[test]
fn classifiers_reject_bad_queries() {
    let data = bd(fin(1.0), fin(2.0), fin(5.0), fin(0.0));
    assert!(classify_norm_pair(&data, 0.0).is_err());
    assert!(classify_norm_pair(&data, f64::INFINITY).is_err());
    assert!(classify_time_pair(&data, -1.0).is_err());
    assert!(classify_time_pair(&data, f64::NAN).is_err());
}

#[test]
fn finite_dim_boundary_regimes() {
    let opts = LimitOptions::default();
    // unstable scalar: reachable, N(inf) = a|y0|/|b| = 1
    let sys = scalar_system(1.0, 1.0).unwrap();
    let boundary = finite_dim_boundary_data(&sys, &[1.0], &opts).unwrap();
    assert!(boundary.converged);
    assert_eq!(boundary.data.t0, fin(0.0));
    assert!(boundary.data.t1.is_inf());
    assert!(boundary.data.n_at_t0.is_inf());
    let n1 = boundary.data.n_at_t1.as_f64().unwrap();
    assert!((n1 - 1.0).abs() <= 1e-3, "n_at_t1 = {n1}");
    // stable scalar: the limit norm vanishes
    let sys = scalar_system(-1.0, 1.0).unwrap();
    let boundary = finite_dim_boundary_data(&sys, &[1.0], &opts).unwrap();
    assert!(boundary.converged);
    assert!(boundary.data.n_at_t1.as_f64().unwrap() <= 1e-6);
    // unreachable state: every quantity is infinite
    let boundary = finite_dim_boundary_data(&unreachable_pair(), &[0.0, 1.0], &opts).unwrap();
    assert!(boundary.converged);
    assert!(boundary.data.t0.is_inf());
    assert!(boundary.data.n_at_t1.is_inf());
}

#[test]
fn finite_dim_classification_cells() {
    let opts = LimitOptions::default();
    let sys = scalar_system(1.0, 1.0).unwrap();
    // M above N(inf) = 1: bang-bang regime
    let c = classify_finite_dim(&sys, &[1.0], Query::Bound(2.0), &opts).unwrap();
    assert_eq!(c.label.unwrap().cell, Cell::V32);
    assert!(!c.uncertain);
    // M below N(inf): no admissible control
    let c = classify_finite_dim(&sys, &[1.0], Query::Bound(0.5), &opts).unwrap();
    assert_eq!(c.label.unwrap().cell, Cell::V31);
    // horizon queries land in W32 (0 = t0 < T < t1 = inf)
    let c = classify_finite_dim(&sys, &[1.0], Query::Horizon(1.0), &opts).unwrap();
    let label = c.label.unwrap();
    assert_eq!(label.cell, Cell::W32);
    assert_eq!(label.prediction, Prediction::BangBangNullNotOptimal);
    // unreachable state at any horizon
    let c = classify_finite_dim(&unreachable_pair(), &[0.0, 1.0], Query::Horizon(3.0), &opts)
        .unwrap();
    assert_eq!(c.label.unwrap().cell, Cell::W34);
    let c = classify_finite_dim(&unreachable_pair(), &[0.0, 1.0], Query::Bound(1.0), &opts)
        .unwrap();
    assert_eq!(c.label.unwrap().cell, Cell::V33);
}

#[test]
fn boundary_uncertain_marker() {
    // a starved ladder cannot converge; bound queries inside its uncertainty
    // band must refuse to pick a side of the V31/V32 boundary
    let opts = LimitOptions {
        max_doublings: 1,
        ..LimitOptions::default()
    };
    let sys = scalar_system(1.0, 1.0).unwrap();
    let boundary = finite_dim_boundary_data(&sys, &[1.0], &opts).unwrap();
    assert!(!boundary.converged);
    let n1 = boundary.data.n_at_t1.as_f64().unwrap();
    let c = classify_finite_dim(&sys, &[1.0], Query::Bound(n1 + 0.01), &opts).unwrap();
    assert!(c.uncertain);
    assert!(c.label.is_none());
    // far from the band the classification still goes through
    let c = classify_finite_dim(&sys, &[1.0], Query::Bound(50.0), &opts).unwrap();
    assert!(!c.uncertain);
    assert_eq!(c.label.unwrap().cell, Cell::V32);
}

#[test]
fn cross_validation_agreements() {
    let solve = SolveOptions::default();
    // W34 vs an infeasible norm solve
    let prob = NormProblem::new(unreachable_pair(), vec![0.0, 1.0], 3.0).unwrap();
    let infeasible = minimal_norm(&prob, &solve).unwrap();
    let label = CellLabel::from_cell(Cell::W34);
    let report = cross_validate(
        &label,
        &SolutionRef::Norm(&infeasible),
        &ValidateThresholds::default(),
    )
    .unwrap();
    assert!(report.ok());
    // W12 (null optimal) vs a decayed instance
    let prob = NormProblem::new(scalar_system(-1.0, 1.0).unwrap(), vec![1.0], 20.0).unwrap();
    let zero = minimal_norm(&prob, &solve).unwrap();
    let report = cross_validate(
        &CellLabel::from_cell(Cell::W12),
        &SolutionRef::Norm(&zero),
        &ValidateThresholds::default(),
    )
    .unwrap();
    assert!(report.ok());
    // W32 (bang-bang away from null) vs a generic solved instance
    let prob = NormProblem::new(double_integrator(), vec![1.0, 0.0], 2.0).unwrap();
    let solved = minimal_norm(&prob, &solve).unwrap();
    let thresholds = ValidateThresholds {
        y0_norm: Some(1.0),
        ..ValidateThresholds::default()
    };
    let report = cross_validate(
        &CellLabel::from_cell(Cell::W32),
        &SolutionRef::Norm(&solved),
        &thresholds,
    )
    .unwrap();
    assert!(report.ok(), "violations: {:?}", report.violations);
    assert!(report.passed.len() >= 3);
    // W22 makes no checkable claim
    let report = cross_validate(
        &CellLabel::from_cell(Cell::W22),
        &SolutionRef::Norm(&solved),
        &ValidateThresholds::default(),
    )
    .unwrap();
    assert!(report.ok());
    // V32 (bang-bang) vs a solved time instance
    let tprob = TimeProblem::new(scalar_system(1.0, 1.0).unwrap(), vec![1.0], 2.0).unwrap();
    let tsolved = minimal_time(&tprob, &TimeOptions::default()).unwrap();
    let report = cross_validate(
        &CellLabel::from_cell(Cell::V32),
        &SolutionRef::Time(&tsolved),
        &thresholds,
    )
    .unwrap();
    assert!(report.ok(), "violations: {:?}", report.violations);
    // V31 (no admissible control) vs an inadmissible bound
    let tprob = TimeProblem::new(scalar_system(1.0, 1.0).unwrap(), vec![1.0], 0.5).unwrap();
    let tnone = minimal_time(&tprob, &TimeOptions::default()).unwrap();
    let report = cross_validate(
        &CellLabel::from_cell(Cell::V31),
        &SolutionRef::Time(&tnone),
        &ValidateThresholds::default(),
    )
    .unwrap();
    assert!(report.ok());
    // V24 asserts existence only
    let report = cross_validate(
        &CellLabel::from_cell(Cell::V24),
        &SolutionRef::Time(&tsolved),
        &ValidateThresholds::default(),
    )
    .unwrap();
    assert!(report.ok());
}

#[test]
fn cross_validation_violations_and_errors() {
    let solve = SolveOptions::default();
    let prob = NormProblem::new(double_integrator(), vec![1.0, 0.0], 2.0).unwrap();
    let solved = minimal_norm(&prob, &solve).unwrap();
    // predicted infeasible, got a solution
    let report = cross_validate(
        &CellLabel::from_cell(Cell::W34),
        &SolutionRef::Norm(&solved),
        &ValidateThresholds::default(),
    )
    .unwrap();
    assert!(!report.ok());
    assert_eq!(report.violations.len(), 1);
    // family/solution mismatch is an error, not a violation
    let tprob = TimeProblem::new(scalar_system(1.0, 1.0).unwrap(), vec![1.0], 2.0).unwrap();
    let tsolved = minimal_time(&tprob, &TimeOptions::default()).unwrap();
    assert!(cross_validate(
        &CellLabel::from_cell(Cell::W32),
        &SolutionRef::Time(&tsolved),
        &ValidateThresholds::default(),
    )
    .is_err());
    assert!(cross_validate(
        &CellLabel::from_cell(Cell::V32),
        &SolutionRef::Norm(&solved),
        &ValidateThresholds::default(),
    )
    .is_err());
    // hand-built labels with impossible predictions are rejected
    let bad = CellLabel {
        family: Family::W,
        cell: Cell::W23,
        prediction: Prediction::BangBang,
    };
    assert!(cross_validate(&bad, &SolutionRef::Norm(&solved), &ValidateThresholds::default())
        .is_err());
}

#[test]
fn report_json_shape() {
    let report: ClassifyReport = classify_report(
        &unreachable_pair(),
        &[0.0, 1.0],
        Query::Horizon(3.0),
        &LimitOptions::default(),
        None,
    )
    .unwrap();
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["cell"], "W34");
    assert_eq!(json["prediction"], "NoAdmissibleControl");
    assert_eq!(json["boundary_data"]["t0"], "inf");
    assert_eq!(json["boundary_data"]["n_at_t1"], "inf");
    assert_eq!(json["inputs"]["n"], 2);
    assert_eq!(json["inputs"]["T"], 3.0);
    assert_eq!(json["inputs"]["A"].as_array().unwrap().len(), 4);
    assert_eq!(json["uncertain"], false);
    assert!(json.get("note").is_none());
}

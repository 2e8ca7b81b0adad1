//! Cell classification of problem instances: horizon pairs (T, y0) land in
//! W-cells and bound pairs (M, y0) land in V-cells, each cell carrying a
//! sharp prediction about existence and bang-bang structure of the optimal
//! control. Boundary data (the two critical times and the minimal norms at
//! them) determines the cell completely.

use crate::error::{Error, Result};
use crate::matrix;
use crate::norm::{
    check_bangbang, norm_at_infinity, LimitOptions, NormAtInfinity, NormSolution, NormStatus,
};
use crate::system::LtiSystem;
use crate::time::{TimeSolution, TimeStatus};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Extended real with an explicit +∞ flag; comparisons are total. JSON
/// renders finite values as numbers and infinity as the string "inf".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Inf,
}

impl ExtReal {
    /// Maps ordinary floats in, turning `f64::INFINITY` into the flag.
    pub fn from_f64(x: f64) -> Result<Self> {
        if x.is_nan() {
            return Err(Error::Invalid("extended real cannot be NaN".into()));
        }
        if x == f64::INFINITY {
            Ok(ExtReal::Inf)
        } else if x == f64::NEG_INFINITY {
            Err(Error::Invalid("extended real cannot be -inf".into()))
        } else {
            Ok(ExtReal::Finite(x))
        }
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, ExtReal::Inf)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(*v),
            ExtReal::Inf => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtReal::Finite(v) if *v == 0.0)
    }

    fn le(&self, other: &ExtReal) -> bool {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a <= b,
            (ExtReal::Finite(_), ExtReal::Inf) => true,
            (ExtReal::Inf, ExtReal::Inf) => true,
            (ExtReal::Inf, ExtReal::Finite(_)) => false,
        }
    }

    fn lt(&self, other: &ExtReal) -> bool {
        self.le(other) && self != other
    }

    /// finite x < self
    fn gt_f(&self, x: f64) -> bool {
        match self {
            ExtReal::Finite(v) => *v > x,
            ExtReal::Inf => true,
        }
    }

    fn ge_f(&self, x: f64) -> bool {
        match self {
            ExtReal::Finite(v) => *v >= x,
            ExtReal::Inf => true,
        }
    }

    fn eq_f(&self, x: f64) -> bool {
        matches!(self, ExtReal::Finite(v) if *v == x)
    }
}

impl std::fmt::Display for ExtReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Inf => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) if v.is_finite() => Ok(ExtReal::Finite(v)),
            Repr::Num(v) => Err(D::Error::custom(format!("non-finite number {v}"))),
            Repr::Str(s) if s == "inf" => Ok(ExtReal::Inf),
            Repr::Str(s) => Err(D::Error::custom(format!("expected \"inf\", got \"{s}\""))),
        }
    }
}

/// The four boundary quantities of an initial state: the minimal
/// controllability time t0, the flow-annihilation time t1, and the minimal
/// norms at those two times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub t0: ExtReal,
    pub t1: ExtReal,
    pub n_at_t0: ExtReal,
    pub n_at_t1: ExtReal,
}

impl BoundaryData {
    pub fn new(t0: ExtReal, t1: ExtReal, n_at_t0: ExtReal, n_at_t1: ExtReal) -> Result<Self> {
        let bd = BoundaryData {
            t0,
            t1,
            n_at_t0,
            n_at_t1,
        };
        bd.validate()?;
        Ok(bd)
    }

    /// Checks the consistency relations between the four quantities; any
    /// violation is reported with the failing rule.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InconsistentBoundaryData(msg.into()));
        if let ExtReal::Finite(v) = self.t0 {
            if !(v >= 0.0) {
                return fail("t0 must be nonnegative");
            }
        }
        if !self.t0.le(&self.t1) {
            return fail("t0 must not exceed t1");
        }
        if !self.t1.gt_f(0.0) {
            return fail("t1 must be positive");
        }
        for norm in [self.n_at_t0, self.n_at_t1] {
            if let ExtReal::Finite(v) = norm {
                if !(v >= 0.0) {
                    return fail("norms must be nonnegative");
                }
            }
        }
        if !self.n_at_t1.le(&self.n_at_t0) {
            return fail("the norm at t0 must dominate the norm at t1");
        }
        if self.t0.eq_f(0.0) && !self.n_at_t0.is_inf() {
            return fail("t0 = 0 forces the norm at t0 to be infinite");
        }
        if self.t0.is_inf() && !self.n_at_t0.is_inf() {
            return fail("t0 = inf forces the norm at t0 to be infinite");
        }
        let t0_eq_t1_finite = self.t0 == self.t1 && !self.t0.is_inf();
        if self.n_at_t0.is_zero() != t0_eq_t1_finite {
            return fail("the norm at t0 vanishes exactly when t0 = t1 < inf");
        }
        match self.n_at_t0 {
            ExtReal::Finite(v) if v > 0.0 => {
                if !self.t0.lt(&self.t1) {
                    return fail("a finite positive norm at t0 forces t0 < t1");
                }
            }
            ExtReal::Inf => {
                let both_inf = self.t0.is_inf() && self.t1.is_inf();
                if !(self.t0.lt(&self.t1) || both_inf) {
                    return fail("an infinite norm at t0 forces t0 < t1 or t0 = t1 = inf");
                }
            }
            _ => {}
        }
        if !self.t1.is_inf() && !self.n_at_t1.is_zero() {
            return fail("a finite t1 forces the norm at t1 to vanish");
        }
        if !self.t0.is_inf() && self.n_at_t1.is_inf() {
            return fail("a finite t0 forces the norm at t1 to be finite");
        }
        if self.t0 == self.t1 && self.n_at_t0 != self.n_at_t1 {
            return fail("t0 = t1 forces equal norms at both times");
        }
        if self.t0.is_inf() && !self.n_at_t1.is_inf() {
            return fail("t0 = inf forces the norm at t1 to be infinite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    W,
    V,
}

/// Decomposition cell; W-cells partition horizon instances, V-cells
/// partition bound instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[allow(clippy::upper_case_acronyms)]
pub enum Cell {
    W11,
    W12,
    W21,
    W22,
    W23,
    W24,
    W31,
    W32,
    W33,
    W34,
    V1,
    V21,
    V22,
    V23,
    V24,
    V31,
    V32,
    V33,
}

/// Predicted structure of the optimal-control problem on a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Prediction {
    BangBang,
    BangBangNullOptimal,
    BangBangNullNotOptimal,
    NoAdmissibleControl,
    ExistsOnly,
    InfinitelyManyNoBB,
}

impl Cell {
    pub fn family(&self) -> Family {
        match self {
            Cell::W11
            | Cell::W12
            | Cell::W21
            | Cell::W22
            | Cell::W23
            | Cell::W24
            | Cell::W31
            | Cell::W32
            | Cell::W33
            | Cell::W34 => Family::W,
            _ => Family::V,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Cell::W11 => "W11",
            Cell::W12 => "W12",
            Cell::W21 => "W21",
            Cell::W22 => "W22",
            Cell::W23 => "W23",
            Cell::W24 => "W24",
            Cell::W31 => "W31",
            Cell::W32 => "W32",
            Cell::W33 => "W33",
            Cell::W34 => "W34",
            Cell::V1 => "V1",
            Cell::V21 => "V21",
            Cell::V22 => "V22",
            Cell::V23 => "V23",
            Cell::V24 => "V24",
            Cell::V31 => "V31",
            Cell::V32 => "V32",
            Cell::V33 => "V33",
        }
    }

    pub fn prediction(&self) -> Prediction {
        match self {
            Cell::W12 | Cell::W24 | Cell::W33 => Prediction::BangBangNullOptimal,
            Cell::W23 | Cell::W32 => Prediction::BangBangNullNotOptimal,
            Cell::W11 | Cell::W21 | Cell::W31 | Cell::W34 => Prediction::NoAdmissibleControl,
            Cell::W22 => Prediction::ExistsOnly,
            Cell::V22 | Cell::V32 => Prediction::BangBang,
            Cell::V24 | Cell::V1 => Prediction::InfinitelyManyNoBB,
            Cell::V21 | Cell::V31 | Cell::V33 => Prediction::NoAdmissibleControl,
            Cell::V23 => Prediction::ExistsOnly,
        }
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Cell with its family and prediction, as emitted by the classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellLabel {
    pub family: Family,
    pub cell: Cell,
    pub prediction: Prediction,
}

impl CellLabel {
    pub fn from_cell(cell: Cell) -> Self {
        CellLabel {
            family: cell.family(),
            cell,
            prediction: cell.prediction(),
        }
    }
}

/// Classifies a horizon instance (T, y0) into its W-cell.
pub fn classify_norm_pair(bd: &BoundaryData, t: f64) -> Result<CellLabel> {
    bd.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Invalid("horizon must be positive and finite".into()));
    }
    let cell = if bd.n_at_t0.is_zero() {
        // t0 = t1 < inf here
        if bd.t0.gt_f(t) {
            Cell::W11
        } else {
            Cell::W12
        }
    } else if !bd.n_at_t0.is_inf() {
        if bd.t0.gt_f(t) {
            Cell::W21
        } else if bd.t0.eq_f(t) {
            Cell::W22
        } else if bd.t1.gt_f(t) {
            Cell::W23
        } else {
            Cell::W24
        }
    } else if bd.t0.is_inf() {
        Cell::W34
    } else if bd.t0.ge_f(t) {
        Cell::W31
    } else if bd.t1.gt_f(t) {
        Cell::W32
    } else {
        Cell::W33
    };
    Ok(CellLabel::from_cell(cell))
}

/// Classifies a bound instance (M, y0) into its V-cell.
pub fn classify_time_pair(bd: &BoundaryData, m: f64) -> Result<CellLabel> {
    bd.validate()?;
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::Invalid("control bound must be positive and finite".into()));
    }
    let cell = if bd.n_at_t0.is_zero() {
        Cell::V1
    } else if !bd.n_at_t0.is_inf() {
        if bd.n_at_t1.ge_f(m) {
            Cell::V21
        } else if bd.n_at_t0.gt_f(m) {
            Cell::V22
        } else if bd.n_at_t0.eq_f(m) {
            Cell::V23
        } else {
            Cell::V24
        }
    } else if bd.t0.is_inf() {
        Cell::V33
    } else if bd.n_at_t1.ge_f(m) {
        Cell::V31
    } else {
        Cell::V32
    };
    Ok(CellLabel::from_cell(cell))
}

/// Boundary data computed numerically for a finite-dimensional system,
/// together with the convergence diagnostics of the horizon ladder.
#[derive(Debug, Clone)]
pub struct FiniteDimBoundary {
    pub data: BoundaryData,
    /// Whether the n_at_t1 ladder met its convergence rule.
    pub converged: bool,
    /// Absolute change over the ladder's final step.
    pub last_change: f64,
}

/// Computes boundary data for (sys, y0): t0 is 0 or ∞ by reachability,
/// t1 = ∞ by backward uniqueness of the matrix exponential, the norm at t0
/// is always ∞, and the norm at t1 is the horizon-ladder limit N(∞, y0).
pub fn finite_dim_boundary_data(
    sys: &LtiSystem,
    y0: &[f64],
    opts: &LimitOptions,
) -> Result<FiniteDimBoundary> {
    if matrix::norm2(y0) == 0.0 {
        return Err(Error::Invalid("y0 must be nonzero".into()));
    }
    match norm_at_infinity(sys, y0, opts)? {
        NormAtInfinity::Unreachable => Ok(FiniteDimBoundary {
            data: BoundaryData::new(ExtReal::Inf, ExtReal::Inf, ExtReal::Inf, ExtReal::Inf)?,
            converged: true,
            last_change: 0.0,
        }),
        NormAtInfinity::Estimate {
            value,
            converged,
            last_change,
            ..
        } => Ok(FiniteDimBoundary {
            data: BoundaryData::new(
                ExtReal::Finite(0.0),
                ExtReal::Inf,
                ExtReal::Inf,
                ExtReal::Finite(value),
            )?,
            converged,
            last_change,
        }),
    }
}

/// Query selecting the family: a horizon gives a W-cell, a bound a V-cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Query {
    Horizon(f64),
    Bound(f64),
}

/// Classification outcome for a finite-dimensional instance. `label` is
/// None exactly when the bound sits inside the uncertainty band of an
/// unconverged n_at_t1 estimate (the Boundary-Uncertain marker).
#[derive(Debug, Clone)]
pub struct FiniteDimClassification {
    pub label: Option<CellLabel>,
    pub boundary: FiniteDimBoundary,
    pub uncertain: bool,
}

/// Composes `finite_dim_boundary_data` with the generic classifiers. For
/// bound queries near an unconverged n_at_t1 estimate the result is the
/// explicit Boundary-Uncertain marker instead of a cell.
pub fn classify_finite_dim(
    sys: &LtiSystem,
    y0: &[f64],
    query: Query,
    opts: &LimitOptions,
) -> Result<FiniteDimClassification> {
    let boundary = finite_dim_boundary_data(sys, y0, opts)?;
    if let Query::Bound(m) = query {
        if !boundary.converged {
            if let ExtReal::Finite(n1) = boundary.data.n_at_t1 {
                let band = 10.0 * boundary.last_change + 1e-9;
                if (m - n1).abs() <= band {
                    return Ok(FiniteDimClassification {
                        label: None,
                        boundary,
                        uncertain: true,
                    });
                }
            }
        }
    }
    let label = match query {
        Query::Horizon(t) => classify_norm_pair(&boundary.data, t)?,
        Query::Bound(m) => classify_time_pair(&boundary.data, m)?,
    };
    Ok(FiniteDimClassification {
        label: Some(label),
        boundary,
        uncertain: false,
    })
}

/// JSON-facing classification record.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub cell: Option<String>,
    pub prediction: Option<Prediction>,
    pub inputs: ReportInputs,
    pub boundary_data: BoundaryData,
    pub uncertain: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportInputs {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    pub y0: Vec<f64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

/// Runs the finite-dimensional classifier and packages the JSON report.
pub fn classify_report(
    sys: &LtiSystem,
    y0: &[f64],
    query: Query,
    opts: &LimitOptions,
    note: Option<String>,
) -> Result<ClassifyReport> {
    let c = classify_finite_dim(sys, y0, query, opts)?;
    Ok(ClassifyReport {
        cell: c.label.map(|l| l.cell.name().to_string()),
        prediction: c.label.map(|l| l.prediction),
        inputs: ReportInputs {
            n: sys.n(),
            m: sys.m(),
            a: sys.a().entries().to_vec(),
            b: sys.b().entries().to_vec(),
            y0: y0.to_vec(),
            horizon: match query {
                Query::Horizon(t) => Some(t),
                Query::Bound(_) => None,
            },
            bound: match query {
                Query::Bound(m) => Some(m),
                Query::Horizon(_) => None,
            },
        },
        boundary_data: c.boundary.data,
        uncertain: c.uncertain,
        note,
    })
}

/// Solver output to check a cell prediction against.
pub enum SolutionRef<'a> {
    Norm(&'a NormSolution),
    Time(&'a TimeSolution),
}

/// Thresholds for cross-validation checks.
#[derive(Debug, Clone)]
pub struct ValidateThresholds {
    pub bb_fraction_min: f64,
    pub bb_tol: f64,
    pub feas_tol: f64,
    /// ‖y0‖ of the instance, used to scale the residual check; None skips it.
    pub y0_norm: Option<f64>,
    /// A norm value at or below this counts as "null control optimal".
    pub zero_value_tol: f64,
}

impl Default for ValidateThresholds {
    fn default() -> Self {
        ValidateThresholds {
            bb_fraction_min: 0.99,
            bb_tol: 1e-3,
            feas_tol: 1e-6,
            y0_norm: None,
            zero_value_tol: 1e-6,
        }
    }
}

/// Agreement/violation listing from checking a solver outcome against a
/// cell prediction.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: Vec<String>,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a solver outcome against a cell prediction. W-labels pair with
/// norm solutions and V-labels with time solutions; mixing them is an error.
pub fn cross_validate(
    label: &CellLabel,
    sol: &SolutionRef,
    thresholds: &ValidateThresholds,
) -> Result<ValidationReport> {
    let mut passed = Vec::new();
    let mut violations = Vec::new();
    let record = |ok: bool, msg: String, passed: &mut Vec<String>, viol: &mut Vec<String>| {
        if ok {
            passed.push(msg);
        } else {
            viol.push(msg);
        }
    };
    match (label.family, sol) {
        (Family::W, SolutionRef::Norm(ns)) => match label.prediction {
            Prediction::NoAdmissibleControl => {
                record(
                    ns.status == NormStatus::Infeasible,
                    format!(
                        "predicted NoAdmissibleControl, solver status {}",
                        ns.status.as_str()
                    ),
                    &mut passed,
                    &mut violations,
                );
            }
            Prediction::BangBangNullOptimal => {
                let near_zero =
                    ns.status == NormStatus::ZeroNorm || ns.value <= thresholds.zero_value_tol;
                record(
                    near_zero,
                    format!("predicted null-optimal, solver value {}", ns.value),
                    &mut passed,
                    &mut violations,
                );
            }
            Prediction::BangBangNullNotOptimal => {
                record(
                    ns.status == NormStatus::Solved,
                    format!("predicted Solved, solver status {}", ns.status.as_str()),
                    &mut passed,
                    &mut violations,
                );
                if ns.status == NormStatus::Solved {
                    if let Some(control) = &ns.control {
                        let bb = check_bangbang(control, ns.value, thresholds.bb_tol);
                        record(
                            bb.fraction_on_boundary >= thresholds.bb_fraction_min,
                            format!(
                                "predicted bang-bang, fraction {:.4}",
                                bb.fraction_on_boundary
                            ),
                            &mut passed,
                            &mut violations,
                        );
                    }
                    if let Some(y0n) = thresholds.y0_norm {
                        record(
                            ns.residual <= thresholds.feas_tol * y0n,
                            format!("endpoint residual {} vs bound", ns.residual),
                            &mut passed,
                            &mut violations,
                        );
                    }
                }
            }
            Prediction::ExistsOnly => {
                passed.push("cell makes no checkable claim".into());
            }
            _ => {
                return Err(Error::Invalid(format!(
                    "prediction {:?} cannot arise for a W-cell",
                    label.prediction
                )))
            }
        },
        (Family::V, SolutionRef::Time(ts)) => match label.prediction {
            Prediction::NoAdmissibleControl => {
                record(
                    ts.status == TimeStatus::NoAdmissibleControl,
                    format!(
                        "predicted NoAdmissibleControl, solver status {}",
                        ts.status.as_str()
                    ),
                    &mut passed,
                    &mut violations,
                );
            }
            Prediction::BangBang => {
                record(
                    ts.status == TimeStatus::Solved,
                    format!("predicted Solved, solver status {}", ts.status.as_str()),
                    &mut passed,
                    &mut violations,
                );
                if ts.status == TimeStatus::Solved {
                    if let Some(control) = &ts.control {
                        let bb = check_bangbang(control, ts.bound, thresholds.bb_tol);
                        record(
                            bb.fraction_on_boundary >= thresholds.bb_fraction_min,
                            format!(
                                "predicted bang-bang, fraction {:.4}",
                                bb.fraction_on_boundary
                            ),
                            &mut passed,
                            &mut violations,
                        );
                        record(
                            control.sup_norm() <= ts.bound * (1.0 + thresholds.bb_tol),
                            format!(
                                "control sup-norm {} within bound {}",
                                control.sup_norm(),
                                ts.bound
                            ),
                            &mut passed,
                            &mut violations,
                        );
                    }
                    if let Some(y0n) = thresholds.y0_norm {
                        record(
                            ts.residual <= thresholds.feas_tol * y0n,
                            format!("endpoint residual {} vs bound", ts.residual),
                            &mut passed,
                            &mut violations,
                        );
                    }
                }
            }
            Prediction::InfinitelyManyNoBB | Prediction::ExistsOnly => {
                record(
                    ts.status == TimeStatus::Solved,
                    format!(
                        "predicted control existence, solver status {}",
                        ts.status.as_str()
                    ),
                    &mut passed,
                    &mut violations,
                );
            }
            _ => {
                return Err(Error::Invalid(format!(
                    "prediction {:?} cannot arise for a V-cell",
                    label.prediction
                )))
            }
        },
        _ => {
            return Err(Error::Invalid(
                "family/solution mismatch: W-cells pair with norm solutions, \
                 V-cells with time solutions"
                    .into(),
            ))
        }
    }
    Ok(ValidationReport { passed, violations })
}

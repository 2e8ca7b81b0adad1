//! Minimal-time solver: computes T(M, y0), the smallest horizon at which a
//! control bounded by M steers y0 to the origin, as the unique root of the
//! strictly decreasing map T ↦ N(T, y0) = M, and recovers the minimal-time
//! control from the minimal-norm control at that horizon.

use crate::error::{Error, Result};
use crate::matrix;
use crate::norm::{
    check_bangbang, minimal_norm, norm_at_infinity, solve_value, CoreOutcome, LimitOptions,
    NormAtInfinity, NormProblem, NormStatus, SolveOptions,
};
use crate::system::{reachable_subspace, ControlSignal, LtiSystem};
use std::io::Write as IoWrite;

/// Minimal-time problem instance for a fixed control bound.
#[derive(Debug, Clone)]
pub struct TimeProblem {
    sys: LtiSystem,
    y0: Vec<f64>,
    bound: f64,
}

impl TimeProblem {
    pub fn new(sys: LtiSystem, y0: Vec<f64>, bound: f64) -> Result<Self> {
        if y0.len() != sys.n() {
            return Err(Error::Dimension("y0 length must equal n".into()));
        }
        if y0.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("y0 must be finite".into()));
        }
        if matrix::norm2(&y0) == 0.0 {
            return Err(Error::Invalid("y0 must be nonzero".into()));
        }
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::Invalid("control bound must be positive and finite".into()));
        }
        Ok(TimeProblem { sys, y0, bound })
    }

    pub fn sys(&self) -> &LtiSystem {
        &self.sys
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeStatus {
    Solved,
    NoAdmissibleControl,
}

impl TimeStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TimeStatus::Solved => "Solved",
            TimeStatus::NoAdmissibleControl => "NoAdmissibleControl",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TimeSolution {
    /// T(M, y0); `f64::INFINITY` exactly when status is NoAdmissibleControl,
    /// and the infinity is only ever branched on via the status.
    pub value: f64,
    pub status: TimeStatus,
    /// Control bound of the instance, kept for self-contained validation.
    pub bound: f64,
    /// Minimal-norm control at the final horizon; its zero extension beyond
    /// `value` is the minimal-time control.
    pub control: Option<ControlSignal>,
    pub flagged_panels: Vec<usize>,
    /// Endpoint residual of the returned control (0 when not Solved).
    pub residual: f64,
    /// N(value, y0); agrees with the bound to bisection accuracy.
    pub norm_at_value: Option<f64>,
    /// Final bisection bracket (T_lo, T_hi) with N(T_lo) > M > N(T_hi).
    pub bracket: Option<(f64, f64)>,
    /// Number of minimal-norm evaluations spent.
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct TimeOptions {
    /// Bisection stops when the bracket width drops below rtol·T_hi.
    pub rtol: f64,
    /// Cap on bracket doublings/halvings in each direction.
    pub max_doublings: usize,
    /// Options for the N(∞, y0) feasibility gate.
    pub limit: LimitOptions,
    /// Options for the per-horizon minimal-norm solves.
    pub solve: SolveOptions,
}

impl Default for TimeOptions {
    fn default() -> Self {
        TimeOptions {
            rtol: 1e-5,
            max_doublings: 60,
            limit: LimitOptions::default(),
            solve: SolveOptions::default(),
        }
    }
}

fn no_admissible(prob: &TimeProblem, residual: f64, evaluations: usize) -> TimeSolution {
    TimeSolution {
        value: f64::INFINITY,
        status: TimeStatus::NoAdmissibleControl,
        bound: prob.bound(),
        control: None,
        flagged_panels: Vec::new(),
        residual,
        norm_at_value: None,
        bracket: None,
        evaluations,
    }
}

/// Warm-started N(T, y0) evaluation used inside bracketing and bisection.
struct NormEvaluator<'a> {
    sys: &'a LtiSystem,
    y0: &'a [f64],
    opts: &'a SolveOptions,
    warm: Option<Vec<f64>>,
    evaluations: usize,
}

impl<'a> NormEvaluator<'a> {
    fn eval(&mut self, t: f64) -> Result<f64> {
        let prob = NormProblem::new(self.sys.clone(), self.y0.to_vec(), t)?;
        self.evaluations += 1;
        match solve_value(&prob, self.opts, self.warm.as_deref(), true)? {
            CoreOutcome::Infeasible { .. } => Err(Error::Internal(
                "reachable state reported infeasible during bracketing".into(),
            )),
            CoreOutcome::ZeroNorm { .. } => Ok(0.0),
            CoreOutcome::Solved(core) => {
                self.warm = Some(core.z);
                Ok(core.value)
            }
        }
    }
}

/// Computes T(M, y0) by bisection on N(T, y0) = M after the feasibility
/// gate M > N(∞, y0); the returned control is the minimal-norm control at
/// the computed horizon, whose zero extension is minimal-time optimal.
pub fn minimal_time(prob: &TimeProblem, opts: &TimeOptions) -> Result<TimeSolution> {
    let sys = prob.sys();
    let m_bound = prob.bound();
    let reach = reachable_subspace(sys, matrix::default_rank_tol(sys.n()));
    let y_norm = matrix::norm2(prob.y0());
    let orth = reach.orth_residual(prob.y0());
    if orth > opts.solve.reach_tol * y_norm {
        return Ok(no_admissible(prob, orth, 0));
    }

    let mut limit_opts = opts.limit.clone();
    limit_opts.solve = opts.solve.clone();
    let (ninf, ninf_converged) = match norm_at_infinity(sys, prob.y0(), &limit_opts)? {
        NormAtInfinity::Unreachable => return Ok(no_admissible(prob, orth, 0)),
        NormAtInfinity::Estimate {
            value, converged, ..
        } => (value, converged),
    };

    let mut ev = NormEvaluator {
        sys,
        y0: prob.y0(),
        opts: &opts.solve,
        warm: None,
        evaluations: 0,
    };

    let mut t_hi: Option<f64> = None;
    if m_bound <= ninf {
        if ninf_converged {
            return Ok(no_admissible(prob, 0.0, 0));
        }
        // The ladder stopped before settling; keep doubling the horizon in
        // search of N(T) < M before giving up.
        let mut t = 2.0 * opts.limit.base_horizon * (1u64 << opts.limit.max_doublings) as f64;
        let mut found = None;
        for _ in 0..opts.max_doublings {
            match ev.eval(t) {
                Ok(v) if v < m_bound => {
                    found = Some(t);
                    break;
                }
                Ok(_) => t *= 2.0,
                Err(Error::Invalid(msg)) if msg.contains("overflowed") => break,
                Err(e) => return Err(e),
            }
        }
        match found {
            Some(t) => t_hi = Some(t),
            None => return Ok(no_admissible(prob, 0.0, ev.evaluations)),
        }
    }

    // bracket: N(T_lo) > M > N(T_hi), T_hi doubled and T_lo halved from 1
    let mut t_hi = match t_hi {
        Some(t) => t,
        None => {
            let mut t = 1.0;
            let mut found = None;
            for _ in 0..=opts.max_doublings {
                if ev.eval(t)? < m_bound {
                    found = Some(t);
                    break;
                }
                t *= 2.0;
            }
            found.ok_or_else(|| {
                Error::BracketNotFound(format!(
                    "no horizon with N(T) < {m_bound} after {} doublings (last T = {t}); \
                     N(∞) was estimated at {ninf}",
                    opts.max_doublings
                ))
            })?
        }
    };
    let mut t_lo = {
        let mut t = t_hi / 2.0;
        let mut found = None;
        for _ in 0..=opts.max_doublings {
            if ev.eval(t)? > m_bound {
                found = Some(t);
                break;
            }
            t_hi = t;
            t /= 2.0;
        }
        found.ok_or_else(|| {
            Error::BracketNotFound(format!(
                "no horizon with N(T) > {m_bound} after {} halvings; \
                 N(T) must blow up as T → 0, so the instance is badly scaled",
                opts.max_doublings
            ))
        })?
    };

    while t_hi - t_lo > opts.rtol * t_hi {
        let mid = 0.5 * (t_lo + t_hi);
        if ev.eval(mid)? > m_bound {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
    }
    let t_star = 0.5 * (t_lo + t_hi);

    let final_prob = NormProblem::new(sys.clone(), prob.y0().to_vec(), t_star)?;
    let sol = minimal_norm(&final_prob, &opts.solve)?;
    if sol.status != NormStatus::Solved {
        return Err(Error::Internal(format!(
            "minimal-norm solve at the bisection root returned {}",
            sol.status.as_str()
        )));
    }
    Ok(TimeSolution {
        value: t_star,
        status: TimeStatus::Solved,
        bound: m_bound,
        control: sol.control,
        flagged_panels: sol.flagged_panels,
        residual: sol.residual,
        norm_at_value: Some(sol.value),
        bracket: Some((t_lo, t_hi)),
        evaluations: ev.evaluations + 1,
    })
}

/// Relative error of the inversion identity T = T(N(T, y0), y0).
pub fn roundtrip_check(sys: &LtiSystem, y0: &[f64], t_final: f64, opts: &TimeOptions) -> Result<f64> {
    let nprob = NormProblem::new(sys.clone(), y0.to_vec(), t_final)?;
    let nsol = minimal_norm(&nprob, &opts.solve)?;
    if nsol.status != NormStatus::Solved {
        return Err(Error::Invalid(format!(
            "roundtrip needs a Solved norm instance, got {}",
            nsol.status.as_str()
        )));
    }
    let tprob = TimeProblem::new(sys.clone(), y0.to_vec(), nsol.value)?;
    let tsol = minimal_time(&tprob, opts)?;
    if tsol.status != TimeStatus::Solved {
        return Err(Error::Invalid(
            "roundtrip minimal-time solve reported no admissible control".into(),
        ));
    }
    Ok((tsol.value - t_final).abs() / t_final)
}

/// One row of the bound-sweep CSV export.
#[derive(Debug, Clone)]
pub struct TimeSweepRow {
    pub m: f64,
    pub t: Option<f64>, // None renders as "inf" (NoAdmissibleControl)
    pub status: TimeStatus,
    pub bb_fraction: Option<f64>,
}

impl TimeSweepRow {
    pub fn from_solution(m: f64, sol: &TimeSolution, bb_tol: f64) -> Self {
        let bb = match (&sol.control, sol.status) {
            (Some(c), TimeStatus::Solved) => {
                Some(check_bangbang(c, sol.bound, bb_tol).fraction_on_boundary)
            }
            _ => None,
        };
        TimeSweepRow {
            m,
            t: match sol.status {
                TimeStatus::NoAdmissibleControl => None,
                TimeStatus::Solved => Some(sol.value),
            },
            status: sol.status,
            bb_fraction: bb,
        }
    }
}

/// Writes the fixed-schema sweep CSV: M,T,status,bb_fraction.
pub fn write_time_sweep_csv<W: IoWrite>(out: W, rows: &[TimeSweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["M", "T", "status", "bb_fraction"])?;
    for row in rows {
        w.write_record([
            crate::fmt::sig9(row.m),
            row.t.map_or_else(|| "inf".to_string(), crate::fmt::sig9),
            row.status.as_str().to_string(),
            row.bb_fraction.map_or_else(String::new, crate::fmt::sig9),
        ])?;
    }
    w.flush()?;
    Ok(())
}

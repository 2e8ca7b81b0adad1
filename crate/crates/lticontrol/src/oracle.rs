//! Independent brute-force validators: closed-form scalar minimal norms, a
//! direction-grid search over the dual sphere (n ≤ 3), and a projected
//! p-norm descent producing feasible controls. Together they bracket the
//! minimal norm from below and above without touching the main solver's
//! ascent machinery; kernels here are evaluated by fresh matrix
//! exponentials at every quadrature node.

use crate::error::{Error, Result};
use crate::matrix::{self, Matrix};
use crate::norm::NormProblem;
use crate::system::{panel_step, ControlSignal, TimeGrid};
use std::io::Write as IoWrite;

/// Exact minimal norm of the scalar system y' = a·y + b·u:
/// N = a|y0| / (|b|(1 − e^{−aT})) for a ≠ 0 and |y0|/(|b|T) for a = 0.
pub fn scalar_closed_form(a: f64, y0: f64, t: f64, b: f64) -> f64 {
    assert!(b != 0.0, "control coefficient must be nonzero");
    assert!(t > 0.0 && t.is_finite(), "horizon must be positive");
    if a == 0.0 {
        y0.abs() / (b.abs() * t)
    } else {
        a * y0.abs() / (b.abs() * (1.0 - (-a * t).exp()))
    }
}

/// Exact minimal time of the scalar system under the bound M, if any:
/// the inverse of the closed-form norm along the horizon.
pub fn scalar_minimal_time(a: f64, y0: f64, m: f64, b: f64) -> Option<f64> {
    assert!(b != 0.0, "control coefficient must be nonzero");
    assert!(m > 0.0 && m.is_finite(), "bound must be positive");
    if y0 == 0.0 {
        return Some(0.0);
    }
    if a == 0.0 {
        return Some(y0.abs() / (b.abs() * m));
    }
    let q = 1.0 - a * y0.abs() / (b.abs() * m);
    if q <= 0.0 {
        // a > 0 with M at or below the infinite-horizon threshold a|y0|/|b|
        return None;
    }
    Some(-q.ln() / a)
}

/// Deterministic quasi-uniform unit directions: {±1} on the line, uniform
/// angles on the circle, a Fibonacci lattice on the sphere.
pub fn unit_directions(n: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::Invalid("direction count must be positive".into()));
    }
    match n {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => Ok((0..count)
            .map(|i| {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect()),
        3 => {
            let golden_angle = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
            Ok((0..count)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let theta = golden_angle * i as f64;
                    vec![r * theta.cos(), r * theta.sin(), z]
                })
                .collect())
        }
        _ => Err(Error::Invalid(
            "direction grids are limited to dimensions 1 through 3".into(),
        )),
    }
}

/// Best dual ratio over a direction grid: a certified lower bound for
/// N(T, y0). Directions with vanishing gauge but nonvanishing pairing
/// witness an unbounded dual, reported as infeasibility evidence.
pub fn dual_grid_search(prob: &NormProblem, directions: usize, quad: &TimeGrid) -> Result<f64> {
    let sys = prob.sys();
    let n = sys.n();
    if n > 3 {
        return Err(Error::Invalid(
            "the dual grid oracle is limited to n <= 3".into(),
        ));
    }
    if directions < 100 {
        return Err(Error::Invalid("at least 100 directions are required".into()));
    }
    if (quad.t_final() - prob.t_final()).abs() > 1e-12 * prob.t_final() {
        return Err(Error::Invalid(
            "quadrature grid horizon must match the problem horizon".into(),
        ));
    }
    let t_final = prob.t_final();
    let dt = quad.dt();
    let at = sys.a().transpose();
    let bt = sys.b().transpose();
    // kernel matrices Bᵀ e^{Aᵀ(T − t_k)} at panel midpoints, each from a
    // fresh exponential
    let mut kernels = Vec::with_capacity(quad.panels());
    for k in 0..quad.panels() {
        let s = t_final - quad.midpoint(k);
        kernels.push(bt.mul(&matrix::expm(&at, s)?));
    }
    let c = matrix::expm(sys.a(), t_final)?.mul_vec(prob.y0());
    let c_norm = matrix::norm2(&c);

    let dirs = unit_directions(n, directions)?;
    let gauges: Vec<f64> = dirs
        .iter()
        .map(|z| dt * kernels.iter().map(|mk| matrix::norm2(&mk.mul_vec(z))).sum::<f64>())
        .collect();
    let g_max = gauges.iter().cloned().fold(0.0, f64::max);
    if !(g_max > 0.0) {
        return Err(Error::Degenerate(
            "every direction has zero gauge; the control operator is numerically null".into(),
        ));
    }
    let tiny = 1e-12 * g_max;
    let mut best = f64::NEG_INFINITY;
    for (z, &g) in dirs.iter().zip(&gauges) {
        let num = matrix::dot(&c, z).abs();
        if g <= tiny {
            if num > 1e-12 * (1.0 + c_norm) {
                return Err(Error::InfeasibilityEvidence(format!(
                    "direction {z:?} has gauge {g:.3e} but pairing {num:.3e}; \
                     the dual ratio is unbounded, so y0 is not steerable to 0"
                )));
            }
            continue;
        }
        best = best.max(num / g);
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::Degenerate(
            "no direction had a usable gauge".into(),
        ));
    }
    Ok(best)
}

/// Cached thin SVD of the wide endpoint map, for repeated least-squares
/// solves and null-space projections.
struct CachedPinv {
    u: nalgebra::DMatrix<f64>,
    singular: Vec<f64>,
    v_t: nalgebra::DMatrix<f64>,
    cut: f64,
}

impl CachedPinv {
    fn new(g: &Matrix) -> Result<Self> {
        let svd = g.to_na().svd(true, true);
        let u = svd.u.ok_or_else(|| Error::Internal("SVD failed to produce U".into()))?;
        let v_t = svd
            .v_t
            .ok_or_else(|| Error::Internal("SVD failed to produce Vᵀ".into()))?;
        let singular: Vec<f64> = svd.singular_values.iter().cloned().collect();
        let smax = singular.iter().cloned().fold(0.0, f64::max);
        Ok(CachedPinv {
            u,
            singular,
            v_t,
            cut: 1e-12 * smax,
        })
    }

    /// Minimum-norm least-squares solution of G x = rhs.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let r = self.singular.len();
        let mut coeffs = vec![0.0; r];
        for i in 0..r {
            if self.singular[i] > self.cut {
                let mut dot = 0.0;
                for (j, v) in rhs.iter().enumerate() {
                    dot += self.u[(j, i)] * v;
                }
                coeffs[i] = dot / self.singular[i];
            }
        }
        let cols = self.v_t.ncols();
        let mut x = vec![0.0; cols];
        for i in 0..r {
            if coeffs[i] != 0.0 {
                for j in 0..cols {
                    x[j] += self.v_t[(i, j)] * coeffs[i];
                }
            }
        }
        x
    }
}

/// Feasible-control upper bound by projected descent on smoothed max norms:
/// minimizes Σ_k (‖u_k‖/M)^p over the affine set of panel controls hitting
/// the origin exactly, for p doubling from 2 to 4096, and returns the best
/// feasible control's sup-norm. Any output is a certified upper bound.
pub fn primal_grid_upper_bound(
    prob: &NormProblem,
    grid: &TimeGrid,
    iters: usize,
) -> Result<(f64, ControlSignal)> {
    let sys = prob.sys();
    let n = sys.n();
    let m = sys.m();
    let k_panels = grid.panels();
    if (grid.t_final() - prob.t_final()).abs() > 1e-12 * prob.t_final() {
        return Err(Error::Invalid(
            "control grid horizon must match the problem horizon".into(),
        ));
    }
    let feas_tol = 1e-6;
    let y_norm = matrix::norm2(prob.y0());

    let (e_step, h) = panel_step(sys, grid.dt())?;
    let mut g_blocks = vec![Matrix::zeros(n, m); k_panels];
    g_blocks[k_panels - 1] = h;
    for k in (0..k_panels - 1).rev() {
        g_blocks[k] = e_step.mul(&g_blocks[k + 1]);
    }
    let mut wide = Matrix::zeros(n, k_panels * m);
    for k in 0..k_panels {
        for i in 0..n {
            for j in 0..m {
                wide.set(i, k * m + j, g_blocks[k].get(i, j));
            }
        }
    }
    let mut y_free = prob.y0().to_vec();
    for _ in 0..k_panels {
        y_free = e_step.mul_vec(&y_free);
    }
    let r0 = matrix::scale_vec(&y_free, -1.0);

    let pinv = CachedPinv::new(&wide)?;
    let apply_g = |u: &[f64]| wide.mul_vec(u);
    let residual_of = |u: &[f64]| {
        let gu = apply_g(u);
        let mut r = r0.clone();
        matrix::axpy(-1.0, &gu, &mut r);
        matrix::norm2(&r)
    };
    let reproject = |u: &mut Vec<f64>| {
        let gu = apply_g(u);
        let mut gap = r0.clone();
        matrix::axpy(-1.0, &gu, &mut gap);
        let fix = pinv.solve(&gap);
        matrix::axpy(1.0, &fix, u);
    };

    let mut u = pinv.solve(&r0);
    if residual_of(&u) > feas_tol * y_norm {
        return Err(Error::InfeasibilityEvidence(format!(
            "least-squares endpoint residual {:.3e} exceeds {:.3e}; \
             no feasible panel control exists on this grid",
            residual_of(&u),
            feas_tol * y_norm
        )));
    }

    let sup_of = |u: &[f64]| {
        (0..k_panels)
            .map(|k| matrix::norm2(&u[k * m..(k + 1) * m]))
            .fold(0.0, f64::max)
    };
    let mut best_u = u.clone();
    let mut best_sup = sup_of(&u);
    if best_sup == 0.0 {
        return Ok((0.0, ControlSignal::new(*grid, m, best_u)?));
    }

    let stages: Vec<f64> = (1..=12).map(|s| 2.0_f64.powi(s)).collect();
    let per_stage = (iters / stages.len()).max(10);
    let psi = |u: &[f64], p: f64, scale: f64| {
        (0..k_panels)
            .map(|k| (matrix::norm2(&u[k * m..(k + 1) * m]) / scale).powf(p))
            .sum::<f64>()
    };
    for &p in &stages {
        let mut step_scale = 0.2_f64;
        for it in 0..per_stage {
            let scale = sup_of(&u).max(1e-300);
            // gradient of Σ (‖u_k‖/scale)^p up to a positive constant
            let mut grad = vec![0.0; k_panels * m];
            for k in 0..k_panels {
                let uk = &u[k * m..(k + 1) * m];
                let nu = matrix::norm2(uk);
                if nu > 0.0 {
                    let w = (nu / scale).powf(p - 1.0) / nu;
                    for j in 0..m {
                        grad[k * m + j] = w * uk[j];
                    }
                }
            }
            // project onto the null space of the endpoint map
            let g_of_grad = apply_g(&grad);
            let back = pinv.solve(&g_of_grad);
            matrix::axpy(-1.0, &back, &mut grad);
            let gn = matrix::norm2(&grad);
            if gn <= 1e-15 {
                break;
            }
            let step = step_scale * scale / gn * (k_panels as f64).sqrt();
            let mut cand = u.clone();
            matrix::axpy(-step, &grad, &mut cand);
            if psi(&cand, p, scale) < psi(&u, p, scale) {
                u = cand;
                step_scale = (step_scale * 1.3).min(2.0);
            } else {
                step_scale *= 0.4;
                if step_scale < 1e-12 {
                    break;
                }
            }
            if it % 16 == 15 {
                reproject(&mut u);
            }
        }
        reproject(&mut u);
        if residual_of(&u) <= feas_tol * y_norm {
            let s = sup_of(&u);
            if s < best_sup {
                best_sup = s;
                best_u = u.clone();
            }
        }
    }
    Ok((best_sup, ControlSignal::new(*grid, m, best_u)?))
}

/// Two-sided bracket of the minimal norm.
#[derive(Debug, Clone, Copy)]
pub struct OracleBracket {
    /// Best dual ratio found: lower ≤ N(T, y0).
    pub lower: f64,
    /// Best feasible sup-norm found: N(T, y0) ≤ upper.
    pub upper: f64,
    pub gap: f64,
}

/// Runs both oracle directions and packages the bracket.
pub fn bracket(
    prob: &NormProblem,
    directions: usize,
    quad: &TimeGrid,
    grid: &TimeGrid,
    iters: usize,
) -> Result<OracleBracket> {
    let lower = dual_grid_search(prob, directions, quad)?;
    let (upper, _) = primal_grid_upper_bound(prob, grid, iters)?;
    Ok(OracleBracket {
        lower,
        upper,
        gap: upper - lower,
    })
}

/// Writes bracket rows as CSV: T,lower,upper,gap.
pub fn write_bracket_csv<W: IoWrite>(out: W, rows: &[(f64, OracleBracket)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["T", "lower", "upper", "gap"])?;
    for (t, b) in rows {
        w.write_record([
            crate::fmt::sig9(*t),
            crate::fmt::sig9(b.lower),
            crate::fmt::sig9(b.upper),
            crate::fmt::sig9(b.gap),
        ])?;
    }
    w.flush()?;
    Ok(())
}

//! The controlled pair (A, B): state propagation under piecewise-constant
//! controls, the adjoint observation kernel, the Kalman reachable subspace,
//! and the controllability block decomposition.

use crate::error::{Error, Result};
use crate::matrix::{self, Matrix};
use serde::{Deserialize, Serialize};

/// Linear time-invariant system y' = Ay + Bu with A n×n and B n×m, B ≠ 0.
#[derive(Debug, Clone)]
pub struct LtiSystem {
    a: Matrix,
    b: Matrix,
}

impl LtiSystem {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension("A must be square".into()));
        }
        if b.rows() != a.rows() {
            return Err(Error::Dimension("B must have as many rows as A".into()));
        }
        if a.rows() == 0 || b.cols() == 0 {
            return Err(Error::Invalid("state and control dimensions must be ≥ 1".into()));
        }
        if b.entries().iter().all(|&x| x == 0.0) {
            return Err(Error::Invalid("B must be nonzero".into()));
        }
        Ok(LtiSystem { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }
}

/// Uniform partition of [0, T] into K panels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    panels: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, panels: usize) -> Result<Self> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::Invalid("horizon must be positive and finite".into()));
        }
        if panels < 1 {
            return Err(Error::Invalid("at least one panel required".into()));
        }
        Ok(TimeGrid { t_final, panels })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.panels as f64
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt()
    }
}

/// Piecewise-constant control: one vector in R^m per panel.
#[derive(Debug, Clone)]
pub struct ControlSignal {
    grid: TimeGrid,
    m: usize,
    values: Vec<f64>, // panel-major, K × m
}

impl ControlSignal {
    pub fn new(grid: TimeGrid, m: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.panels() * m {
            return Err(Error::Dimension(format!(
                "expected {} control values, got {}",
                grid.panels() * m,
                values.len()
            )));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("control values must be finite".into()));
        }
        Ok(ControlSignal { grid, m, values })
    }

    pub fn zero(grid: TimeGrid, m: usize) -> Self {
        ControlSignal {
            grid,
            m,
            values: vec![0.0; grid.panels() * m],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn panel(&self, k: usize) -> &[f64] {
        &self.values[k * self.m..(k + 1) * self.m]
    }

    pub fn panel_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.m..(k + 1) * self.m]
    }

    /// Sup over panels of the Euclidean norm of the panel value; realizes the
    /// L∞(0,T;R^m) norm of the piecewise-constant control.
    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.panels())
            .map(|k| matrix::norm2(self.panel(k)))
            .fold(0.0, f64::max)
    }
}

/// Orthonormal basis of the reachable subspace R = span[B, AB, …, AⁿB].
#[derive(Debug, Clone)]
pub struct ReachableSubspace {
    basis: Matrix, // n × dim, orthonormal columns
}

impl ReachableSubspace {
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    /// Orthogonal projection of y onto R.
    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        let coeffs = self.basis.mul_vec_transposed(y);
        self.basis.mul_vec(&coeffs)
    }

    /// Norm of the component of y orthogonal to R.
    pub fn orth_residual(&self, y: &[f64]) -> f64 {
        let p = self.project(y);
        let mut r = y.to_vec();
        matrix::axpy(-1.0, &p, &mut r);
        matrix::norm2(&r)
    }

    /// Whether y lies in R up to `tol · ‖y‖`.
    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        let ny = matrix::norm2(y);
        if ny == 0.0 {
            return true;
        }
        self.orth_residual(y) <= tol * ny
    }
}

/// One-panel transition pair (e^{AΔ}, ∫₀^Δ e^{A(Δ−s)}B ds) computed from the
/// augmented exponential exp([[A, B], [0, 0]]·Δ), so propagation of
/// piecewise-constant controls carries no quadrature error.
pub fn panel_step(sys: &LtiSystem, dt: f64) -> Result<(Matrix, Matrix)> {
    let n = sys.n();
    let m = sys.m();
    let mut aug = Matrix::zeros(n + m, n + m);
    for i in 0..n {
        for j in 0..n {
            aug.set(i, j, sys.a().get(i, j));
        }
        for j in 0..m {
            aug.set(i, n + j, sys.b().get(i, j));
        }
    }
    let e = matrix::expm(&aug, dt)?;
    Ok((e.block(0, 0, n, n), e.block(0, n, n, m)))
}

/// Endpoint y(T; y0, u) for a piecewise-constant control, evaluated
/// panel-exactly: y_{k+1} = e^{AΔ} y_k + H u_k.
pub fn propagate(sys: &LtiSystem, y0: &[f64], u: &ControlSignal) -> Result<Vec<f64>> {
    if y0.len() != sys.n() {
        return Err(Error::Dimension("initial state length must equal n".into()));
    }
    if u.m() != sys.m() {
        return Err(Error::Dimension("control dimension must equal m".into()));
    }
    let (e, h) = panel_step(sys, u.grid().dt())?;
    let mut y = y0.to_vec();
    for k in 0..u.grid().panels() {
        let mut next = e.mul_vec(&y);
        let push = h.mul_vec(u.panel(k));
        matrix::axpy(1.0, &push, &mut next);
        y = next;
    }
    Ok(y)
}

/// Observation kernel f_z(t) = Bᵀ e^{Aᵀ(T−t)} z of the adjoint system.
pub fn observation_kernel(sys: &LtiSystem, t_final: f64, z: &[f64], t: f64) -> Result<Vec<f64>> {
    if z.len() != sys.n() {
        return Err(Error::Dimension("dual vector length must equal n".into()));
    }
    if !(0.0..=t_final).contains(&t) {
        return Err(Error::Invalid(format!(
            "kernel time {t} outside [0, {t_final}]"
        )));
    }
    let e = matrix::expm(&sys.a().transpose(), t_final - t)?;
    Ok(sys.b().mul_vec_transposed(&e.mul_vec(z)))
}

/// Controllability matrix [B, AB, …, AⁿB] (n+1 powers, matching the
/// definition of R literally; Cayley-Hamilton makes the last power redundant
/// but harmless).
pub fn controllability_matrix(sys: &LtiSystem) -> Matrix {
    let n = sys.n();
    let mut block = sys.b().clone();
    let mut stacked = block.clone();
    for _ in 0..n {
        block = sys.a().mul(&block);
        stacked = stacked.hstack(&block);
    }
    stacked
}

/// Orthonormal basis of the reachable subspace at tolerance `tol`.
pub fn reachable_subspace(sys: &LtiSystem, tol: f64) -> ReachableSubspace {
    let c = controllability_matrix(sys);
    ReachableSubspace {
        basis: matrix::range_basis(&c, tol),
    }
}

/// Controllability decomposition: an orthogonal K whose first p columns span
/// R, so KᵀAK is block upper-triangular and KᵀB has zero lower block.
#[derive(Debug, Clone)]
pub struct KalmanDecomposition {
    pub k: Matrix,
    pub p: usize,
}

pub fn kalman_decomposition(sys: &LtiSystem, tol: f64) -> KalmanDecomposition {
    let c = controllability_matrix(sys);
    let (k, p) = matrix::full_orthogonal_basis(&c, tol);
    KalmanDecomposition { k, p }
}

/// On-disk system definition; field names are part of the format.
#[derive(Debug, Serialize, Deserialize)]
pub struct SystemFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
}

impl SystemFile {
    pub fn to_system(&self) -> Result<LtiSystem> {
        let a = Matrix::new(self.n, self.n, self.a.clone())?;
        let b = Matrix::new(self.n, self.m, self.b.clone())?;
        LtiSystem::new(a, b)
    }

    pub fn from_system(sys: &LtiSystem) -> Self {
        SystemFile {
            n: sys.n(),
            m: sys.m(),
            a: sys.a().entries().to_vec(),
            b: sys.b().entries().to_vec(),
        }
    }
}

pub fn system_from_json(text: &str) -> Result<LtiSystem> {
    let file: SystemFile = serde_json::from_str(text)?;
    file.to_system()
}

pub fn system_to_json(sys: &LtiSystem) -> String {
    serde_json::to_string_pretty(&SystemFile::from_system(sys)).expect("serializable")
}

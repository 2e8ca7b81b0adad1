//! Model builders: scalar systems, the double integrator, diagonal spectral
//! models with summable reciprocal decay rates, and spectral truncations of
//! the 1-D heat equation with pointwise control. Truncations are honest
//! finite sections: reports about them never claim anything about the
//! untruncated model.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::norm::{solve_value, CoreOutcome, NormProblem, NormStatus, SolveOptions};
use crate::system::{system_from_json, LtiSystem, SystemFile};
use serde::Deserialize;

/// Diagonal spectral model: decay rates λ₁ < λ₂ < ⋯ and control
/// coefficients b_j, truncated at order J for finite computations.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    lambdas: Vec<f64>,
    control_coeffs: Vec<f64>,
    truncation_order: usize,
    analytic_reciprocal_sum: Option<f64>,
}

impl SpectralModel {
    pub fn new(lambdas: Vec<f64>, control_coeffs: Vec<f64>, truncation_order: usize) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::Invalid("at least one mode is required".into()));
        }
        if lambdas.len() != control_coeffs.len() {
            return Err(Error::Dimension(
                "lambdas and coefficients must have equal length".into(),
            ));
        }
        if !lambdas.iter().all(|l| l.is_finite() && *l > 0.0) {
            return Err(Error::Invalid("decay rates must be positive and finite".into()));
        }
        if !lambdas.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Invalid("decay rates must be strictly increasing".into()));
        }
        if !control_coeffs.iter().all(|b| b.is_finite()) {
            return Err(Error::Invalid("control coefficients must be finite".into()));
        }
        if control_coeffs.iter().all(|b| *b == 0.0) {
            return Err(Error::Invalid("at least one control coefficient must be nonzero".into()));
        }
        if truncation_order == 0 || truncation_order > lambdas.len() {
            return Err(Error::Invalid(format!(
                "truncation order must lie in 1..={}",
                lambdas.len()
            )));
        }
        Ok(SpectralModel {
            lambdas,
            control_coeffs,
            truncation_order,
            analytic_reciprocal_sum: None,
        })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn control_coeffs(&self) -> &[f64] {
        &self.control_coeffs
    }

    pub fn truncation_order(&self) -> usize {
        self.truncation_order
    }

    pub fn with_truncation_order(mut self, j: usize) -> Result<Self> {
        if j == 0 || j > self.lambdas.len() {
            return Err(Error::Invalid(format!(
                "truncation order must lie in 1..={}",
                self.lambdas.len()
            )));
        }
        self.truncation_order = j;
        Ok(self)
    }

    /// Partial sum Σ_{j≤J} 1/λ_j, the computable part of the summability
    /// requirement on the decay rates.
    pub fn reciprocal_sum(&self) -> f64 {
        self.lambdas[..self.truncation_order]
            .iter()
            .map(|l| 1.0 / l)
            .sum()
    }

    /// Known closed form of Σ_{j≥1} 1/λ_j for builders that have one
    /// (π²/6 for the heat family); None for user-supplied sequences.
    pub fn analytic_reciprocal_sum(&self) -> Option<f64> {
        self.analytic_reciprocal_sum
    }
}

/// 1-D system y' = a·y + b·u.
pub fn scalar_system(a: f64, b: f64) -> Result<LtiSystem> {
    LtiSystem::new(Matrix::new(1, 1, vec![a])?, Matrix::new(1, 1, vec![b])?)
}

/// The classical bang-bang testbed: A = [[0,1],[0,0]], B = [0,1]ᵀ.
pub fn double_integrator() -> LtiSystem {
    let a = Matrix::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]).expect("static entries");
    let b = Matrix::new(2, 1, vec![0.0, 1.0]).expect("static entries");
    LtiSystem::new(a, b).expect("valid system")
}

/// Galerkin truncation onto the first J modes: A = diag(−λ₁,…,−λ_J),
/// B = (b₁,…,b_J)ᵀ.
pub fn truncate(model: &SpectralModel) -> Result<LtiSystem> {
    let j = model.truncation_order;
    let neg: Vec<f64> = model.lambdas[..j].iter().map(|l| -l).collect();
    let a = Matrix::diagonal(&neg)?;
    let b = Matrix::column(&model.control_coeffs[..j])?;
    LtiSystem::new(a, b)
}

/// Spectral data of the 1-D heat equation on (0, π) with a point control at
/// x0: λ_j = j² and b_j = sin(j·x0) against the Dirichlet sine basis.
pub fn heat_point_control(x0: f64, j: usize) -> Result<SpectralModel> {
    if !(x0.is_finite() && x0 > 0.0 && x0 < std::f64::consts::PI) {
        return Err(Error::Invalid("control point must lie in (0, π)".into()));
    }
    if j == 0 {
        return Err(Error::Invalid("at least one mode is required".into()));
    }
    let lambdas: Vec<f64> = (1..=j).map(|k| (k * k) as f64).collect();
    let coeffs: Vec<f64> = (1..=j).map(|k| (k as f64 * x0).sin()).collect();
    let mut model = SpectralModel::new(lambdas, coeffs, j)?;
    model.analytic_reciprocal_sum = Some(std::f64::consts::PI.powi(2) / 6.0);
    Ok(model)
}

/// One point of the shrinking-horizon diagnostic sweep.
#[derive(Debug, Clone, Copy)]
pub struct ProfilePoint {
    pub t: f64,
    /// N(T, y0); `f64::INFINITY` exactly when status is Infeasible.
    pub value: f64,
    pub status: NormStatus,
}

/// Evaluates N(T, y0) on a decreasing horizon list for a truncated model.
/// Growth of the values as T shrinks is evidence (not proof) of a positive
/// minimal controllability time of the untruncated model.
pub fn t0_blowup_profile(
    model: &SpectralModel,
    y0: &[f64],
    t_list: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<ProfilePoint>> {
    if t_list.is_empty() {
        return Err(Error::Invalid("horizon list must be nonempty".into()));
    }
    if !t_list.iter().all(|t| t.is_finite() && *t > 0.0) {
        return Err(Error::Invalid("horizons must be positive and finite".into()));
    }
    if !t_list.windows(2).all(|w| w[0] > w[1]) {
        return Err(Error::Invalid("horizon list must be strictly decreasing".into()));
    }
    let sys = truncate(model)?;
    let mut out = Vec::with_capacity(t_list.len());
    let mut warm: Option<Vec<f64>> = None;
    for &t in t_list {
        let prob = NormProblem::new(sys.clone(), y0.to_vec(), t)?;
        let point = match solve_value(&prob, opts, warm.as_deref(), false)? {
            CoreOutcome::Infeasible { .. } => ProfilePoint {
                t,
                value: f64::INFINITY,
                status: NormStatus::Infeasible,
            },
            CoreOutcome::ZeroNorm { .. } => ProfilePoint {
                t,
                value: 0.0,
                status: NormStatus::ZeroNorm,
            },
            CoreOutcome::Solved(core) => {
                warm = Some(core.z.clone());
                ProfilePoint {
                    t,
                    value: core.value,
                    status: NormStatus::Solved,
                }
            }
        };
        out.push(point);
    }
    Ok(out)
}

/// Parsed model definition file.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    Spectral(SpectralModel),
    Matrix(LtiSystem),
}

impl ModelSpec {
    pub fn to_system(&self) -> Result<LtiSystem> {
        match self {
            ModelSpec::Spectral(m) => truncate(m),
            ModelSpec::Matrix(sys) => Ok(sys.clone()),
        }
    }

    /// True when the system is a finite section of a spectral model, so
    /// downstream reports can carry the truncated-model note.
    pub fn is_truncated(&self) -> bool {
        matches!(self, ModelSpec::Spectral(_))
    }
}

const DEFAULT_TRUNCATION: usize = 8;

/// Parses a model definition: {"kind":"spectral",...}, {"kind":"heat_point",...}
/// or {"kind":"matrix",...}; J defaults to 8 (clamped to the mode count).
pub fn model_from_json(text: &str) -> Result<ModelSpec> {
    #[derive(Deserialize)]
    struct Kind {
        kind: String,
    }
    #[derive(Deserialize)]
    struct SpectralFile {
        lambdas: Vec<f64>,
        coeffs: Vec<f64>,
        #[serde(rename = "J")]
        j: Option<usize>,
    }
    #[derive(Deserialize)]
    struct HeatFile {
        x0: f64,
        #[serde(rename = "J")]
        j: Option<usize>,
    }
    let kind: Kind = serde_json::from_str(text)?;
    match kind.kind.as_str() {
        "spectral" => {
            let f: SpectralFile = serde_json::from_str(text)?;
            let j = f.j.unwrap_or_else(|| DEFAULT_TRUNCATION.min(f.lambdas.len()));
            Ok(ModelSpec::Spectral(SpectralModel::new(f.lambdas, f.coeffs, j)?))
        }
        "heat_point" => {
            let f: HeatFile = serde_json::from_str(text)?;
            let j = f.j.unwrap_or(DEFAULT_TRUNCATION);
            Ok(ModelSpec::Spectral(heat_point_control(f.x0, j)?))
        }
        "matrix" => {
            let sys = system_from_json(text)?;
            Ok(ModelSpec::Matrix(sys))
        }
        other => Err(Error::Parse(format!(
            "unknown model kind \"{other}\"; expected spectral, heat_point or matrix"
        ))),
    }
}

/// Serializes a matrix model back to the system file schema.
pub fn system_spec_to_json(sys: &LtiSystem) -> Result<String> {
    let f = SystemFile::from_system(sys);
    Ok(serde_json::to_string_pretty(&f)?)
}

use std::fmt;

use serde::{Deserialize, Serialize};

use super::IrtError;
use crate::stats::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Rasch: unit discriminations, one dimension.
    OnePl,
    /// Birnbaum, optionally multidimensional.
    TwoPl,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub dims: usize,
    pub quadrature_points_per_dim: usize,
    pub max_em_iterations: usize,
    pub loglik_rel_tolerance: f64,
}

pub const DEFAULT_MAX_EM_ITERATIONS: usize = 500;
pub const DEFAULT_LOGLIK_REL_TOLERANCE: f64 = 1e-4;

impl ModelSpec {
    pub fn rasch() -> Self {
        ModelSpec {
            family: Family::OnePl,
            dims: 1,
            quadrature_points_per_dim: default_quadrature_points(1),
            max_em_iterations: DEFAULT_MAX_EM_ITERATIONS,
            loglik_rel_tolerance: DEFAULT_LOGLIK_REL_TOLERANCE,
        }
    }

    pub fn two_pl(dims: usize) -> Self {
        ModelSpec {
            family: Family::TwoPl,
            dims,
            quadrature_points_per_dim: default_quadrature_points(dims),
            max_em_iterations: DEFAULT_MAX_EM_ITERATIONS,
            loglik_rel_tolerance: DEFAULT_LOGLIK_REL_TOLERANCE,
        }
    }

    pub fn validate(&self) -> Result<(), IrtError> {
        if self.dims == 0 {
            return Err(IrtError::InvalidSpec("dims must be at least 1".into()));
        }
        if self.family == Family::OnePl && self.dims != 1 {
            return Err(IrtError::InvalidSpec("1PL models are one-dimensional".into()));
        }
        if self.quadrature_points_per_dim < 2 {
            return Err(IrtError::InvalidSpec("need at least 2 quadrature points per dimension".into()));
        }
        if !(self.loglik_rel_tolerance > 0.0) {
            return Err(IrtError::InvalidSpec("loglik tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Free item parameters: `|C|` for 1PL, `|C|(n+1) − n(n−1)/2` for
    /// 2PL-nDIM (the anchor zeros are not free).
    pub fn parameter_count(&self, n_courses: usize) -> usize {
        match self.family {
            Family::OnePl => n_courses,
            Family::TwoPl => {
                let n = self.dims;
                n_courses * (n + 1) - n * (n - 1) / 2
            }
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::OnePl => f.write_str("1PL"),
            Family::TwoPl => write!(f, "2PL-{}DIM", self.dims),
        }
    }
}

/// Grid points per dimension: 21 / 11 / 7 for one to three dimensions.
pub fn default_quadrature_points(dims: usize) -> usize {
    match dims {
        1 => 21,
        2 => 11,
        3 => 7,
        _ => 5,
    }
}

/// Probability of reaching the achievement grade,
/// `1 / (1 + exp(−⟨α, θ − δ⟩))`.
///
/// Panics if the three vectors differ in length.
pub fn irf(theta: &[f64], alpha: &[f64], delta: &[f64]) -> f64 {
    assert!(theta.len() == alpha.len() && alpha.len() == delta.len(), "irf: dimension mismatch");
    let z: f64 = alpha.iter().zip(theta.iter().zip(delta)).map(|(a, (t, d))| a * (t - d)).sum();
    sigmoid(z)
}

/// Scalar course difficulty `⟨α, δ⟩ / ‖α‖₂`.
pub fn projected_difficulty(alpha: &[f64], delta: &[f64]) -> Result<f64, IrtError> {
    assert_eq!(alpha.len(), delta.len(), "projected_difficulty: dimension mismatch");
    let norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(IrtError::UndefinedDifficulty);
    }
    Ok(alpha.iter().zip(delta).map(|(a, d)| a * d).sum::<f64>() / norm)
}

/// Item parameters of a fitted (or hand-specified) model.
///
/// `locations` are stored as the minimum-norm location on the discrimination
/// direction, `δ_c = −b_c α_c / ‖α_c‖²`, since only the intercept
/// `b_c = −⟨α_c, δ_c⟩` is identified when `n > 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub course_ids: Vec<String>,
    pub discriminations: Vec<Vec<f64>>,
    pub locations: Vec<Vec<f64>>,
    pub projected_difficulty: Vec<f64>,
    pub marginal_loglik: f64,
    pub em_iterations_used: usize,
    pub converged: bool,
    /// Marginal log-likelihood after every E-step, starting values first.
    pub loglik_trace: Vec<f64>,
}

impl FittedModel {
    /// A Rasch model with given difficulties (no fitting).
    pub fn rasch(course_ids: Vec<String>, difficulties: &[f64]) -> Self {
        assert_eq!(course_ids.len(), difficulties.len());
        FittedModel {
            spec: ModelSpec::rasch(),
            course_ids,
            discriminations: vec![vec![1.0]; difficulties.len()],
            locations: difficulties.iter().map(|d| vec![*d]).collect(),
            projected_difficulty: difficulties.to_vec(),
            marginal_loglik: f64::NAN,
            em_iterations_used: 0,
            converged: false,
            loglik_trace: Vec::new(),
        }
    }

    /// A model from explicit `α_c`, `δ_c` vectors (no fitting).
    pub fn from_parameters(
        spec: ModelSpec,
        course_ids: Vec<String>,
        discriminations: Vec<Vec<f64>>,
        locations: Vec<Vec<f64>>,
    ) -> Result<Self, IrtError> {
        spec.validate()?;
        if discriminations.len() != course_ids.len()
            || locations.len() != course_ids.len()
            || discriminations.iter().chain(&locations).any(|v| v.len() != spec.dims)
        {
            return Err(IrtError::DimensionMismatch);
        }
        let projected_difficulty = discriminations
            .iter()
            .zip(&locations)
            .map(|(a, d)| projected_difficulty(a, d))
            .collect::<Result<_, _>>()?;
        Ok(FittedModel {
            spec,
            course_ids,
            discriminations,
            locations,
            projected_difficulty,
            marginal_loglik: f64::NAN,
            em_iterations_used: 0,
            converged: false,
            loglik_trace: Vec::new(),
        })
    }

    pub fn dims(&self) -> usize {
        self.spec.dims
    }

    pub fn n_courses(&self) -> usize {
        self.course_ids.len()
    }

    /// Intercept `b_c = −⟨α_c, δ_c⟩` of the linear predictor `⟨α_c, θ⟩ + b_c`.
    pub fn intercept(&self, course: usize) -> f64 {
        -self.discriminations[course].iter().zip(&self.locations[course]).map(|(a, d)| a * d).sum::<f64>()
    }

    pub fn probability(&self, course: usize, theta: &[f64]) -> f64 {
        irf(theta, &self.discriminations[course], &self.locations[course])
    }

    pub fn course_index(&self, course_id: &str) -> Option<usize> {
        self.course_ids.iter().position(|c| c == course_id)
    }
}

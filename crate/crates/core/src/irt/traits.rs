use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::em::ItemTables;
use super::model::FittedModel;
use super::quadrature::QuadratureGrid;
use super::IrtError;
use crate::data::ResponseMatrix;
use crate::stats::log_sum_exp;

/// EAP trait estimates, one row per student with at least one response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitEstimates {
    pub student_ids: Vec<String>,
    pub traits: Vec<Vec<f64>>,
    pub posterior_sd: Vec<Vec<f64>>,
    pub trait_norm: Vec<f64>,
    /// Students without responses; no estimate is produced for them.
    pub excluded: Vec<String>,
}

impl TraitEstimates {
    pub fn len(&self) -> usize {
        self.student_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.student_ids.is_empty()
    }

    pub fn lookup(&self) -> HashMap<&str, usize> {
        self.student_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
    }

    /// Scalar trait summary: θ itself for one dimension, ‖θ‖₂ otherwise.
    pub fn summary(&self, i: usize) -> f64 {
        if self.traits[i].len() == 1 {
            self.traits[i][0]
        } else {
            self.trait_norm[i]
        }
    }
}

/// Maps each matrix course onto the model's course index by id.
fn align_courses(model: &FittedModel, matrix: &ResponseMatrix) -> Result<Vec<usize>, IrtError> {
    let index: HashMap<&str, usize> = model.course_ids.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    matrix
        .courses()
        .iter()
        .map(|c| index.get(c.as_str()).copied().ok_or_else(|| IrtError::CourseMismatch { course: c.clone() }))
        .collect()
}

/// Fills `out` with the unnormalised log posterior of one student on the grid.
fn log_posterior(
    matrix: &ResponseMatrix,
    student: usize,
    course_map: &[usize],
    tables: &ItemTables,
    grid: &QuadratureGrid,
    out: &mut [f64],
) {
    out.copy_from_slice(grid.log_weights());
    for e in matrix.student_entries(student) {
        for (o, l) in out.iter_mut().zip(tables.row(course_map[e.course], e.value)) {
            *o += l;
        }
    }
}

/// Posterior mean (EAP) and posterior SD of every student's trait.
pub fn estimate_traits(model: &FittedModel, matrix: &ResponseMatrix) -> Result<TraitEstimates, IrtError> {
    let course_map = align_courses(model, matrix)?;
    let grid = QuadratureGrid::new(model.dims(), model.spec.quadrature_points_per_dim);
    let tables = ItemTables::from_model(model, &grid);
    let dims = model.dims();
    let mut buf = vec![0.0; grid.len()];
    let mut out = TraitEstimates {
        student_ids: Vec::new(),
        traits: Vec::new(),
        posterior_sd: Vec::new(),
        trait_norm: Vec::new(),
        excluded: Vec::new(),
    };
    for s in 0..matrix.n_students() {
        if matrix.student_entries(s).is_empty() {
            log::warn!("student '{}' has no responses; excluded from trait estimation", matrix.students()[s]);
            out.excluded.push(matrix.students()[s].clone());
            continue;
        }
        log_posterior(matrix, s, &course_map, &tables, &grid, &mut buf);
        let lse = log_sum_exp(&buf);
        let mut mean = vec![0.0; dims];
        let mut second = vec![0.0; dims];
        for (q, l) in buf.iter().enumerate() {
            let w = (l - lse).exp();
            for (k, x) in grid.node(q).iter().enumerate() {
                mean[k] += w * x;
                second[k] += w * x * x;
            }
        }
        let sd = mean.iter().zip(&second).map(|(m, s2)| (s2 - m * m).max(0.0).sqrt()).collect();
        out.trait_norm.push(mean.iter().map(|m| m * m).sum::<f64>().sqrt());
        out.student_ids.push(matrix.students()[s].clone());
        out.traits.push(mean);
        out.posterior_sd.push(sd);
    }
    Ok(out)
}

/// `Σ_s ln ∫ Π_c P(x_sc | θ) dΦ(θ)` on the model's quadrature grid.
pub fn marginal_log_likelihood(model: &FittedModel, matrix: &ResponseMatrix) -> Result<f64, IrtError> {
    let course_map = align_courses(model, matrix)?;
    let grid = QuadratureGrid::new(model.dims(), model.spec.quadrature_points_per_dim);
    let tables = ItemTables::from_model(model, &grid);
    let mut buf = vec![0.0; grid.len()];
    let mut total = 0.0;
    for s in 0..matrix.n_students() {
        if matrix.student_entries(s).is_empty() {
            continue;
        }
        log_posterior(matrix, s, &course_map, &tables, &grid, &mut buf);
        total += log_sum_exp(&buf);
    }
    Ok(total)
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::q3::q3_statistics;
use super::DiagnosticsError;
use crate::data::ResponseMatrix;
use crate::irt::{estimate_traits, fit, Family, FittedModel, ModelSpec};

/// `k·ln(N) − 2·lnL`.
pub fn bic(loglik: f64, parameter_count: usize, n_students: usize) -> f64 {
    assert!(n_students >= 1, "BIC needs at least one student");
    parameter_count as f64 * (n_students as f64).ln() - 2.0 * loglik
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub spec: ModelSpec,
    pub label: String,
    pub parameter_count: usize,
    /// `None` when the fit failed.
    pub marginal_loglik: Option<f64>,
    pub bic: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub candidates: Vec<Candidate>,
    /// Index of the candidate with minimal BIC.
    pub best: usize,
    /// Best model is 1PL, or 2PL-1DIM on data that also passes Q3 under the
    /// 1PL fit.
    pub rasch_admissible: bool,
    /// Q3 outcome of the 1PL fit, computed only when the admissibility rule
    /// needs it.
    pub rasch_q3_pass: Option<bool>,
    /// Fitted models in candidate order.
    #[serde(skip)]
    pub models: Vec<Option<FittedModel>>,
}

impl SelectionReport {
    pub fn best_candidate(&self) -> &Candidate {
        &self.candidates[self.best]
    }

    pub fn best_model(&self) -> Option<&FittedModel> {
        self.models[self.best].as_ref()
    }

    pub fn model_for(&self, spec: &ModelSpec) -> Option<&FittedModel> {
        self.candidates.iter().position(|c| c.spec == *spec).and_then(|i| self.models[i].as_ref())
    }
}

/// 1PL and 2PL with one to three dimensions.
pub fn default_candidates() -> Vec<ModelSpec> {
    vec![ModelSpec::rasch(), ModelSpec::two_pl(1), ModelSpec::two_pl(2), ModelSpec::two_pl(3)]
}

pub fn select_model(matrix: &ResponseMatrix) -> Result<SelectionReport, DiagnosticsError> {
    select_model_with(matrix, &default_candidates())
}

/// Fits every candidate and picks the minimal BIC, breaking ties toward
/// fewer parameters. Failed fits are recorded and skipped.
pub fn select_model_with(matrix: &ResponseMatrix, specs: &[ModelSpec]) -> Result<SelectionReport, DiagnosticsError> {
    let n_students = matrix.n_students();
    if n_students == 0 || specs.is_empty() {
        return Err(DiagnosticsError::NoCandidates);
    }
    let fits: Vec<_> = specs.par_iter().map(|spec| fit(matrix, spec)).collect();
    let mut candidates = Vec::with_capacity(specs.len());
    let mut models = Vec::with_capacity(specs.len());
    for (spec, result) in specs.iter().zip(fits) {
        let parameter_count = spec.parameter_count(matrix.n_courses());
        match result {
            Ok(model) => {
                candidates.push(Candidate {
                    spec: *spec,
                    label: spec.label(),
                    parameter_count,
                    marginal_loglik: Some(model.marginal_loglik),
                    bic: Some(bic(model.marginal_loglik, parameter_count, n_students)),
                    converged: model.converged,
                    error: None,
                });
                models.push(Some(model));
            }
            Err(e) => {
                log::warn!("candidate {spec} failed: {e}");
                candidates.push(Candidate {
                    spec: *spec,
                    label: spec.label(),
                    parameter_count,
                    marginal_loglik: None,
                    bic: None,
                    converged: false,
                    error: Some(e.to_string()),
                });
                models.push(None);
            }
        }
    }
    let best = candidates
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.bic.map(|b| (i, b, c.parameter_count)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)))
        .map(|(i, _, _)| i)
        .ok_or(DiagnosticsError::AllCandidatesFailed)?;

    let best_spec = candidates[best].spec;
    let (rasch_admissible, rasch_q3_pass) = match (best_spec.family, best_spec.dims) {
        (Family::OnePl, _) => (true, None),
        (Family::TwoPl, 1) => {
            let q3 = rasch_q3(matrix, specs, &models);
            (q3 == Some(true), q3)
        }
        _ => (false, None),
    };
    Ok(SelectionReport { candidates, best, rasch_admissible, rasch_q3_pass, models })
}

/// Q3 pass flag under the 1PL fit, refitting if 1PL was not a candidate.
fn rasch_q3(matrix: &ResponseMatrix, specs: &[ModelSpec], models: &[Option<FittedModel>]) -> Option<bool> {
    let refit;
    let model = match specs.iter().position(|s| s.family == Family::OnePl).and_then(|i| models[i].as_ref()) {
        Some(m) => m,
        None => {
            refit = fit(matrix, &ModelSpec::rasch()).ok()?;
            &refit
        }
    };
    let traits = estimate_traits(model, matrix).ok()?;
    q3_statistics(model, &traits, matrix).ok().map(|r| r.pass)
}

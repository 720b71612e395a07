//! Model diagnostics: BIC selection across dimensionalities, Yen's Q3
//! local-independence check, split-half reliability and concurrent
//! validity.

mod q3;
mod reliability;
mod selection;
mod validity;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use q3::{q3_statistics, q3_statistics_with, Q3Pair, Q3Report, Q3_FLAG_DISTANCE, Q3_MIN_OVERLAP};
pub use reliability::{
    reliability_from_halves, split_half_reliability, split_halves, ReliabilityReport, SplitScheme, MIN_PER_HALF,
};
pub use selection::{bic, default_candidates, select_model, select_model_with, Candidate, SelectionReport};
pub use validity::{concurrent_validity, ValidityReport};

use crate::data::{achievement_rates, ResponseMatrix};
use crate::irt::{estimate_traits, ModelSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("no candidate models or no students")]
    NoCandidates,
    #[error("every candidate model failed to fit")]
    AllCandidatesFailed,
    #[error("Q3 needs at least two courses, got {n}")]
    TooFewCourses { n: usize },
    #[error("course '{course}' is not part of the fitted model")]
    CourseMismatch { course: String },
    #[error("half {half} of the split has no fittable course")]
    HalfUnfittable { half: usize },
    #[error("{what} is undefined (too few points or zero variance)")]
    Degenerate { what: &'static str },
    #[error("model fit failed: {0}")]
    Irt(String),
}

/// One row of the model-selection table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub dataset: String,
    pub n_students: usize,
    pub n_courses: usize,
    pub best_bic_model: String,
    pub q3_pass: bool,
    pub reliability_random: Option<f64>,
    pub reliability_time: Option<f64>,
    pub validity_student: Option<f64>,
    pub validity_course: Option<f64>,
    pub rasch_admissible: bool,
}

/// Every diagnostic for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub row: DiagnosticsRow,
    pub selection: SelectionReport,
    /// Q3 under the best-BIC model.
    pub q3: Q3Report,
    pub reliability_random: Option<ReliabilityReport>,
    pub reliability_time: Option<ReliabilityReport>,
    pub validity: ValidityReport,
}

/// Runs selection, Q3 on the selected model, both split-half schemes and
/// concurrent validity. Reliability failures are logged and reported as
/// missing rather than aborting the run.
pub fn run_diagnostics(
    dataset: &str,
    matrix: &ResponseMatrix,
    gpa: &BTreeMap<String, f64>,
    seed: u64,
) -> Result<DiagnosticsReport, DiagnosticsError> {
    run_diagnostics_with(dataset, matrix, gpa, seed, &default_candidates())
}

/// [`run_diagnostics`] over a custom candidate list.
pub fn run_diagnostics_with(
    dataset: &str,
    matrix: &ResponseMatrix,
    gpa: &BTreeMap<String, f64>,
    seed: u64,
    candidates: &[ModelSpec],
) -> Result<DiagnosticsReport, DiagnosticsError> {
    let selection = select_model_with(matrix, candidates)?;
    let best = selection.best_model().expect("best candidate has a model");
    let traits = estimate_traits(best, matrix).map_err(|e| DiagnosticsError::Irt(e.to_string()))?;
    let q3 = q3_statistics(best, &traits, matrix)?;
    let reliability = |scheme| match split_half_reliability(matrix, scheme, seed) {
        Ok(r) => Some(r),
        Err(e) => {
            log::warn!("{scheme:?} split-half reliability unavailable: {e}");
            None
        }
    };
    let reliability_random = reliability(SplitScheme::Random);
    let reliability_time = reliability(SplitScheme::Time);
    let rates = achievement_rates(matrix, None);
    let validity = concurrent_validity(&traits, gpa, best, &rates);

    let row = DiagnosticsRow {
        dataset: dataset.to_string(),
        n_students: matrix.n_students(),
        n_courses: matrix.n_courses(),
        best_bic_model: selection.best_candidate().label.clone(),
        q3_pass: q3.pass,
        reliability_random: reliability_random.as_ref().map(|r| r.pearson_r),
        reliability_time: reliability_time.as_ref().map(|r| r.pearson_r),
        validity_student: validity.student.map(|c| c.r),
        validity_course: validity.course.map(|c| c.r),
        rasch_admissible: selection.rasch_admissible,
    };
    Ok(DiagnosticsReport { row, selection, q3, reliability_random, reliability_time, validity })
}

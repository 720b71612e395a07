use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::CourseRates;
use crate::irt::{FittedModel, TraitEstimates};
use crate::stats::{pearson_test, CorrelationTest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    /// Trait summary against GPA; `None` when undefined (fewer than three
    /// points or zero variance).
    pub student: Option<CorrelationTest>,
    /// Projected difficulty Δ_c against course AR; signed, so expected to be
    /// negative.
    pub course: Option<CorrelationTest>,
    /// Students with a trait but no GPA.
    pub students_without_gpa: usize,
}

impl ValidityReport {
    pub fn course_abs_r(&self) -> Option<f64> {
        self.course.map(|c| c.r.abs())
    }
}

/// Concurrent validity: trait summary vs GPA across students, and projected
/// difficulty vs AR across courses.
///
/// The trait summary is θ for one dimension and ‖θ‖₂ otherwise.
pub fn concurrent_validity(
    traits: &TraitEstimates,
    gpa: &BTreeMap<String, f64>,
    model: &FittedModel,
    rates: &[CourseRates],
) -> ValidityReport {
    let mut missing = 0;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, id) in traits.student_ids.iter().enumerate() {
        match gpa.get(id) {
            Some(g) => {
                xs.push(traits.summary(i));
                ys.push(*g);
            }
            None => missing += 1,
        }
    }
    if missing > 0 {
        log::warn!("{missing} students have a trait estimate but no GPA; left out of the validity correlation");
    }
    let student = pearson_test(&xs, &ys);

    let (mut ds, mut ars) = (Vec::new(), Vec::new());
    for r in rates {
        if let (Some(c), Some(ar)) = (model.course_index(&r.course_id), r.ar()) {
            ds.push(model.projected_difficulty[c]);
            ars.push(ar);
        }
    }
    let course = pearson_test(&ds, &ars);
    ValidityReport { student, course, students_without_gpa: missing }
}

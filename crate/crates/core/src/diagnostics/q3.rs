use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::data::ResponseMatrix;
use crate::irt::{FittedModel, TraitEstimates};
use crate::stats::pearson;

/// Pairs with fewer common students than this are not correlated.
pub const Q3_MIN_OVERLAP: usize = 30;
/// A pair is flagged when its Q3 is this far from the mean Q3.
pub const Q3_FLAG_DISTANCE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q3Pair {
    pub course_a: String,
    pub course_b: String,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q3Report {
    pub course_ids: Vec<String>,
    /// Symmetric; `None` on the diagonal and for skipped pairs.
    pub pair_q3: Vec<Vec<Option<f64>>>,
    pub mean_q3: f64,
    pub flagged_pairs: Vec<Q3Pair>,
    pub pairs_evaluated: usize,
    pub pairs_skipped: usize,
    pub pass: bool,
}

/// Yen's Q3: Pearson correlation of residuals `x − P(θ̂)` for every course
/// pair over the students who took both.
pub fn q3_statistics(
    model: &FittedModel,
    traits: &TraitEstimates,
    matrix: &ResponseMatrix,
) -> Result<Q3Report, DiagnosticsError> {
    q3_statistics_with(model, traits, matrix, Q3_MIN_OVERLAP)
}

pub fn q3_statistics_with(
    model: &FittedModel,
    traits: &TraitEstimates,
    matrix: &ResponseMatrix,
    min_overlap: usize,
) -> Result<Q3Report, DiagnosticsError> {
    let n_courses = matrix.n_courses();
    if n_courses < 2 {
        return Err(DiagnosticsError::TooFewCourses { n: n_courses });
    }
    let model_index: Vec<usize> = matrix
        .courses()
        .iter()
        .map(|c| model.course_index(c).ok_or_else(|| DiagnosticsError::CourseMismatch { course: c.clone() }))
        .collect::<Result<_, _>>()?;
    let trait_index = traits.lookup();

    // residual[c][s], NaN where the student did not take the course
    let n_students = matrix.n_students();
    let mut residual = vec![vec![f64::NAN; n_students]; n_courses];
    for (s, id) in matrix.students().iter().enumerate() {
        let Some(&t) = trait_index.get(id.as_str()) else { continue };
        let theta = &traits.traits[t];
        for e in matrix.student_entries(s) {
            let p = model.probability(model_index[e.course], theta);
            residual[e.course][s] = e.value as u8 as f64 - p;
        }
    }

    let mut pair_q3 = vec![vec![None; n_courses]; n_courses];
    let mut values = Vec::new();
    let mut skipped = 0;
    let (mut xa, mut xb) = (Vec::new(), Vec::new());
    for a in 0..n_courses {
        for b in a + 1..n_courses {
            xa.clear();
            xb.clear();
            for (ra, rb) in residual[a].iter().zip(&residual[b]) {
                if !ra.is_nan() && !rb.is_nan() {
                    xa.push(*ra);
                    xb.push(*rb);
                }
            }
            match (xa.len() >= min_overlap).then(|| pearson(&xa, &xb)).flatten() {
                Some(q) => {
                    pair_q3[a][b] = Some(q);
                    pair_q3[b][a] = Some(q);
                    values.push((a, b, q));
                }
                None => skipped += 1,
            }
        }
    }
    let mean_q3 = if values.is_empty() { 0.0 } else { values.iter().map(|v| v.2).sum::<f64>() / values.len() as f64 };
    let flagged_pairs: Vec<Q3Pair> = values
        .iter()
        .filter(|(_, _, q)| (q - mean_q3).abs() > Q3_FLAG_DISTANCE)
        .map(|&(a, b, q3)| Q3Pair { course_a: matrix.courses()[a].clone(), course_b: matrix.courses()[b].clone(), q3 })
        .collect();
    Ok(Q3Report {
        course_ids: matrix.courses().to_vec(),
        pair_q3,
        mean_q3,
        pass: flagged_pairs.is_empty(),
        flagged_pairs,
        pairs_evaluated: values.len(),
        pairs_skipped: skipped,
    })
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::IrtError;
use crate::data::{GroupAssignment, Response, ResponseMatrix};
use crate::stats::sigmoid;

/// Student id used for row `i` of simulated data (zero-padded, so sorted
/// order equals index order).
pub fn simulated_student_id(i: usize) -> String {
    format!("s{i:06}")
}

pub fn simulated_course_id(i: usize) -> String {
    format!("c{i:03}")
}

/// A group-dependent shift of one course's response function:
/// `p = σ(θ − δ + β1·g)`.
#[derive(Debug, Clone, Copy)]
pub struct DcfInjection<'a> {
    pub course: usize,
    pub beta1: f64,
    pub groups: &'a GroupAssignment,
}

/// Draws a complete Rasch response matrix, `x ~ Bernoulli(σ(θ_s − δ_c))`,
/// with optional DCF shifts on selected courses.
///
/// Students are `simulated_student_id(0..)`, courses
/// `simulated_course_id(0..)`; the term index of a response is its course
/// index. Identical inputs and seed give an identical matrix.
pub fn simulate_responses(
    difficulties: &[f64],
    traits: &[f64],
    injections: &[DcfInjection<'_>],
    seed: u64,
) -> Result<ResponseMatrix, IrtError> {
    let n_courses = difficulties.len();
    let students: Vec<String> = (0..traits.len()).map(simulated_student_id).collect();
    // shift[c][s] = β1·g_s for injected courses
    let mut shift: Vec<Option<Vec<f64>>> = vec![None; n_courses];
    for inj in injections {
        if inj.course >= n_courses {
            return Err(IrtError::InjectionOutOfRange { course: inj.course, n_courses });
        }
        let signs = students
            .iter()
            .map(|s| inj.groups.get(s).map(|g| inj.beta1 * g.sign()).ok_or_else(|| IrtError::MissingGroup { student: s.clone() }))
            .collect::<Result<Vec<f64>, _>>()?;
        match &mut shift[inj.course] {
            Some(existing) => existing.iter_mut().zip(signs).for_each(|(e, s)| *e += s),
            slot => *slot = Some(signs),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(traits.len() * n_courses);
    for (s, theta) in traits.iter().enumerate() {
        for (c, delta) in difficulties.iter().enumerate() {
            let extra = shift[c].as_ref().map_or(0.0, |v| v[s]);
            let p = sigmoid(theta - delta + extra);
            values.push(rng.random::<f64>() < p);
        }
    }
    let courses = (0..n_courses).map(simulated_course_id).collect();
    Ok(ResponseMatrix::from_dense(students, courses, &values).expect("dense simulated matrix is valid"))
}

/// Draws a complete response matrix from arbitrary (multidimensional)
/// parameters, `x ~ Bernoulli(σ(⟨α_c, θ_s − δ_c⟩))`.
pub fn simulate_from_parameters(
    discriminations: &[Vec<f64>],
    locations: &[Vec<f64>],
    traits: &[Vec<f64>],
    seed: u64,
) -> Result<ResponseMatrix, IrtError> {
    if discriminations.len() != locations.len() {
        return Err(IrtError::DimensionMismatch);
    }
    let dims = discriminations.first().map_or(0, Vec::len);
    if discriminations.iter().chain(locations).chain(traits).any(|v| v.len() != dims) {
        return Err(IrtError::DimensionMismatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(traits.len() * locations.len());
    for (s, theta) in traits.iter().enumerate() {
        for (c, (alpha, delta)) in discriminations.iter().zip(locations).enumerate() {
            let p = super::model::irf(theta, alpha, delta);
            entries.push(Response { student: s, course: c, value: rng.random::<f64>() < p, term: c as i64 });
        }
    }
    ResponseMatrix::new(
        (0..traits.len()).map(simulated_student_id).collect(),
        (0..locations.len()).map(simulated_course_id).collect(),
        entries,
    )
    .map_err(|_| IrtError::DimensionMismatch)
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::data::{Response, ResponseMatrix};
use crate::irt::{estimate_traits, fit, ModelSpec};
use crate::stats::pearson_test;

/// A student needs this many responses in each half to be correlated.
pub const MIN_PER_HALF: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitScheme {
    /// Seeded uniform split of each student's responses.
    Random,
    /// Earlier versus later responses by term index.
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub scheme: SplitScheme,
    pub pearson_r: f64,
    pub p_value: f64,
    pub n_students_correlated: usize,
    /// Courses fitted in the first and second half.
    pub courses_per_half: [usize; 2],
}

/// Splits every student's responses into two halves. Odd counts give the
/// extra response to the first (earlier) half.
pub fn split_halves(matrix: &ResponseMatrix, scheme: SplitScheme, seed: u64) -> (ResponseMatrix, ResponseMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut first, mut second) = (Vec::new(), Vec::new());
    for s in 0..matrix.n_students() {
        let mut row: Vec<Response> = matrix.student_entries(s).to_vec();
        match scheme {
            SplitScheme::Random => row.shuffle(&mut rng),
            SplitScheme::Time => row.sort_by_key(|e| (e.term, e.course)),
        }
        let cut = row.len().div_ceil(2);
        first.extend_from_slice(&row[..cut]);
        second.extend_from_slice(&row[cut..]);
    }
    (
        matrix.with_entries(first).expect("subset of a valid matrix"),
        matrix.with_entries(second).expect("subset of a valid matrix"),
    )
}

/// Split-half reliability: one Rasch fit per half, then Pearson r of the
/// two trait estimates over students with enough responses in both halves.
pub fn split_half_reliability(
    matrix: &ResponseMatrix,
    scheme: SplitScheme,
    seed: u64,
) -> Result<ReliabilityReport, DiagnosticsError> {
    let (a, b) = split_halves(matrix, scheme, seed);
    reliability_from_halves(&a, &b, scheme)
}

/// Correlates Rasch traits fitted separately on two halves of the data.
///
/// Both halves must share the student list of the original matrix. Each
/// half keeps only courses that show both responses within that half.
pub fn reliability_from_halves(
    first: &ResponseMatrix,
    second: &ResponseMatrix,
    scheme: SplitScheme,
) -> Result<ReliabilityReport, DiagnosticsError> {
    assert_eq!(first.students(), second.students(), "halves must share the student list");
    let mut thetas: [Vec<Option<f64>>; 2] = [Vec::new(), Vec::new()];
    let mut courses_per_half = [0; 2];
    for (h, half) in [first, second].into_iter().enumerate() {
        let fittable = half.drop_constant_courses();
        if fittable.n_courses() == 0 || fittable.is_empty() {
            return Err(DiagnosticsError::HalfUnfittable { half: h + 1 });
        }
        courses_per_half[h] = fittable.n_courses();
        let model = fit(&fittable, &ModelSpec::rasch()).map_err(|e| DiagnosticsError::Irt(e.to_string()))?;
        let traits = estimate_traits(&model, &fittable).map_err(|e| DiagnosticsError::Irt(e.to_string()))?;
        let lookup = traits.lookup();
        thetas[h] = (0..fittable.n_students())
            .map(|s| {
                if fittable.student_entries(s).len() < MIN_PER_HALF {
                    return None;
                }
                lookup.get(fittable.students()[s].as_str()).map(|&i| traits.traits[i][0])
            })
            .collect();
    }
    let (x, y): (Vec<f64>, Vec<f64>) = thetas[0].iter().zip(&thetas[1]).filter_map(|(a, b)| Some(((*a)?, (*b)?))).unzip();
    let test = pearson_test(&x, &y).ok_or(DiagnosticsError::Degenerate { what: "split-half correlation" })?;
    Ok(ReliabilityReport {
        scheme,
        pearson_r: test.r,
        p_value: test.p_value,
        n_students_correlated: test.n,
        courses_per_half,
    })
}

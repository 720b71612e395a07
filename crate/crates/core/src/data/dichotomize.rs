use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::enrollment::EnrollmentRecord;
use super::grade::Letter;
use super::matrix::{Response, ResponseMatrix};
use super::DataError;

/// How the achievement grade (AG) threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgPolicy {
    /// Median base letter over all records.
    Median,
    Explicit(Letter),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dichotomized {
    pub matrix: ResponseMatrix,
    pub achievement_grade: Letter,
    /// Repeat enrollments dropped by the first-attempt rule.
    pub repeats_dropped: usize,
}

/// Median of the base-letter points; a median between two letters rounds up.
pub fn median_letter(records: &[EnrollmentRecord]) -> Option<Letter> {
    if records.is_empty() {
        return None;
    }
    let mut points: Vec<f64> = records.iter().map(|r| r.grade.letter.points()).collect();
    points.sort_by(f64::total_cmp);
    let n = points.len();
    let median = if n % 2 == 1 { points[n / 2] } else { 0.5 * (points[n / 2 - 1] + points[n / 2]) };
    Some(Letter::ceil_from_points(median))
}

/// Converts letter grades to 0/1 responses against the AG.
///
/// A record scores 1 iff its base letter is at or above the AG. Students and
/// courses are indexed in sorted id order; for repeated enrollments in the
/// same course only the earliest term is kept.
pub fn dichotomize(records: &[EnrollmentRecord], policy: AgPolicy) -> Result<Dichotomized, DataError> {
    let achievement_grade = match policy {
        AgPolicy::Median => median_letter(records).ok_or(DataError::NoRecords)?,
        AgPolicy::Explicit(letter) => {
            if records.is_empty() {
                return Err(DataError::NoRecords);
            }
            letter
        }
    };
    let students: BTreeSet<&str> = records.iter().map(|r| r.student_id.as_str()).collect();
    let courses: BTreeSet<&str> = records.iter().map(|r| r.course_id.as_str()).collect();
    let s_index: BTreeMap<&str, usize> = students.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let c_index: BTreeMap<&str, usize> = courses.iter().enumerate().map(|(i, c)| (*c, i)).collect();

    let mut first: BTreeMap<(usize, usize), Response> = BTreeMap::new();
    let mut repeats_dropped = 0;
    for r in records {
        let key = (s_index[r.student_id.as_str()], c_index[r.course_id.as_str()]);
        let response = Response {
            student: key.0,
            course: key.1,
            value: r.grade.letter >= achievement_grade,
            term: r.term_index,
        };
        match first.get_mut(&key) {
            None => {
                first.insert(key, response);
            }
            Some(existing) => {
                repeats_dropped += 1;
                if response.term < existing.term {
                    *existing = response;
                }
            }
        }
    }
    let matrix = ResponseMatrix::new(
        students.into_iter().map(String::from).collect(),
        courses.into_iter().map(String::from).collect(),
        first.into_values().collect(),
    )?;
    Ok(Dichotomized { matrix, achievement_grade, repeats_dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::grade::LetterGrade;

    fn one_course(grades: &[&str]) -> Vec<EnrollmentRecord> {
        grades
            .iter()
            .enumerate()
            .map(|(i, g)| EnrollmentRecord::new(&format!("s{i}"), "c", 1, g.parse::<LetterGrade>().unwrap()))
            .collect()
    }

    fn responses(d: &Dichotomized) -> Vec<u8> {
        (0..d.matrix.n_students()).map(|s| d.matrix.get(s, 0).unwrap() as u8).collect()
    }

    #[test]
    fn median_a_encodes_only_a() {
        let d = dichotomize(&one_course(&["A", "A", "A", "B", "C"]), AgPolicy::Median).unwrap();
        assert_eq!(d.achievement_grade, Letter::A);
        assert_eq!(responses(&d), vec![1, 1, 1, 0, 0]);
    }

    #[test]
    fn even_count_median_rounds_up() {
        // points {3,3,2,1}: middle pair (2,3) → 2.5 → B
        let d = dichotomize(&one_course(&["B", "B", "C", "D"]), AgPolicy::Median).unwrap();
        assert_eq!(d.achievement_grade, Letter::B);
        assert_eq!(responses(&d), vec![1, 1, 0, 0]);
    }

    #[test]
    fn constant_grades_all_one() {
        let d = dichotomize(&one_course(&["A", "A", "A"]), AgPolicy::Median).unwrap();
        assert_eq!(responses(&d), vec![1, 1, 1]);
    }

    #[test]
    fn modifiers_are_stripped() {
        let d = dichotomize(&one_course(&["A-", "A", "B+"]), AgPolicy::Median).unwrap();
        assert_eq!(d.achievement_grade, Letter::A);
        assert_eq!(responses(&d), vec![1, 1, 0]);
    }

    #[test]
    fn explicit_policy_and_empty_input() {
        let d = dichotomize(&one_course(&["A", "C", "B"]), AgPolicy::Explicit(Letter::B)).unwrap();
        assert_eq!(responses(&d), vec![1, 0, 1]);
        assert!(matches!(dichotomize(&[], AgPolicy::Median), Err(DataError::NoRecords)));
    }

    #[test]
    fn first_attempt_wins() {
        let recs = vec![
            EnrollmentRecord::new("s", "c", 5, Letter::A.into()),
            EnrollmentRecord::new("s", "c", 2, Letter::C.into()),
            EnrollmentRecord::new("t", "c", 1, Letter::A.into()),
        ];
        let d = dichotomize(&recs, AgPolicy::Explicit(Letter::A)).unwrap();
        assert_eq!(d.repeats_dropped, 1);
        assert_eq!(d.matrix.get(0, 0), Some(false));
        assert_eq!(d.matrix.student_entries(0)[0].term, 2);
    }
}

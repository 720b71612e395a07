use serde::{Deserialize, Serialize};

use super::matrix::ResponseMatrix;
use super::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_grades_per_student: usize,
    pub min_students_per_course: usize,
    /// Also drop courses whose responses are all 0 or all 1.
    pub require_variance: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { min_grades_per_student: 5, min_students_per_course: 20, require_variance: true }
    }
}

/// One pass of the alternating removal loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStep {
    pub round: usize,
    pub students_removed: usize,
    pub courses_removed: usize,
    pub students_remaining: usize,
    pub courses_remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filtered {
    pub matrix: ResponseMatrix,
    pub trace: Vec<FilterStep>,
}

/// Alternately drops under-sized students and under-sized (or constant)
/// courses until nothing changes.
pub fn iterative_filter(matrix: &ResponseMatrix, config: &FilterConfig) -> Result<Filtered, DataError> {
    if config.min_grades_per_student == 0 || config.min_students_per_course == 0 {
        return Err(DataError::InvalidThreshold);
    }
    let mut current = matrix.clone();
    let mut trace = Vec::new();
    for round in 1.. {
        let keep_students: Vec<bool> = (0..current.n_students())
            .map(|s| current.student_entries(s).len() >= config.min_grades_per_student)
            .collect();
        let students_removed = keep_students.iter().filter(|k| !**k).count();
        if students_removed > 0 {
            current = current.retain(&keep_students, &vec![true; current.n_courses()]);
        }

        let keep_courses: Vec<bool> = current
            .course_counts()
            .iter()
            .map(|&(n, ones)| {
                n >= config.min_students_per_course && (!config.require_variance || (ones > 0 && ones < n))
            })
            .collect();
        let courses_removed = keep_courses.iter().filter(|k| !**k).count();
        if courses_removed > 0 {
            current = current.retain(&vec![true; current.n_students()], &keep_courses);
        }

        trace.push(FilterStep {
            round,
            students_removed,
            courses_removed,
            students_remaining: current.n_students(),
            courses_remaining: current.n_courses(),
        });
        if current.n_students() == 0 || current.n_courses() == 0 || current.is_empty() {
            return Err(DataError::Eliminated { trace });
        }
        if students_removed == 0 && courses_removed == 0 {
            break;
        }
    }
    Ok(Filtered { matrix: current, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::matrix::Response;

    fn labels(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn satisfied_matrix_is_unchanged() {
        let values: Vec<bool> = (0..30 * 6).map(|i| (i * 7 + i / 6) % 3 == 0).collect();
        let m = ResponseMatrix::from_dense(labels("s", 30), labels("c", 6), &values).unwrap();
        let out = iterative_filter(&m, &FilterConfig::default()).unwrap();
        assert_eq!(out.matrix, m);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn single_course_student_is_dropped_and_course_survives() {
        // 21 students in course 0, students 0..20 also in course 1.
        // With a 2-grade student minimum the lone student goes, both
        // courses keep exactly 20 students.
        let mut entries = Vec::new();
        for s in 0..21 {
            entries.push(Response { student: s, course: 0, value: s % 2 == 0, term: 0 });
            if s < 20 {
                entries.push(Response { student: s, course: 1, value: s % 3 == 0, term: 1 });
            }
        }
        let m = ResponseMatrix::new(labels("s", 21), labels("c", 2), entries).unwrap();
        let cfg = FilterConfig { min_grades_per_student: 2, ..Default::default() };
        let out = iterative_filter(&m, &cfg).unwrap();
        assert_eq!(out.matrix.n_students(), 20);
        assert_eq!(out.matrix.n_courses(), 2);
        assert!(!out.matrix.students().contains(&"s20".to_string()));
        assert_eq!(out.matrix.course_counts()[1].0, 20);
    }

    #[test]
    fn constant_course_is_dropped() {
        let values: Vec<bool> = (0..25 * 6).map(|i| i % 6 == 5 || (i * 5 + i / 6) % 4 == 0).collect();
        let m = ResponseMatrix::from_dense(labels("s", 25), labels("c", 6), &values).unwrap();
        assert_eq!(m.course_counts()[5], (25, 25));
        let out = iterative_filter(&m, &FilterConfig::default()).unwrap();
        assert!(!out.matrix.courses().contains(&"c5".to_string()));
        let cfg = FilterConfig { require_variance: false, ..Default::default() };
        assert_eq!(iterative_filter(&m, &cfg).unwrap().matrix.n_courses(), 6);
    }

    #[test]
    fn elimination_reports_trace() {
        let m = ResponseMatrix::from_dense(labels("s", 3), labels("c", 2), &[true, false, false, true, true, false]).unwrap();
        match iterative_filter(&m, &FilterConfig::default()) {
            Err(DataError::Eliminated { trace }) => assert_eq!(trace[0].students_removed, 3),
            other => panic!("expected elimination, got {other:?}"),
        }
    }
}

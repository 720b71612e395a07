use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::DataError;

/// One dichotomous observation `X[s, c]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub student: usize,
    pub course: usize,
    pub value: bool,
    pub term: i64,
}

/// Sparse student × course matrix of dichotomous responses.
///
/// Entries are kept sorted by `(student, course)` with a row-offset table, so
/// a student's responses form one contiguous slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMatrix {
    students: Vec<String>,
    courses: Vec<String>,
    entries: Vec<Response>,
    offsets: Vec<usize>,
}

impl ResponseMatrix {
    /// Builds a matrix, rejecting out-of-range indices and repeated
    /// `(student, course)` pairs.
    pub fn new(students: Vec<String>, courses: Vec<String>, mut entries: Vec<Response>) -> Result<Self, DataError> {
        for e in &entries {
            if e.student >= students.len() || e.course >= courses.len() {
                return Err(DataError::IndexOutOfRange { student: e.student, course: e.course });
            }
        }
        entries.sort_by_key(|e| (e.student, e.course));
        for pair in entries.windows(2) {
            if pair[0].student == pair[1].student && pair[0].course == pair[1].course {
                return Err(DataError::DuplicateEntry {
                    student: students[pair[0].student].clone(),
                    course: courses[pair[0].course].clone(),
                });
            }
        }
        let mut offsets = vec![0usize; students.len() + 1];
        for e in &entries {
            offsets[e.student + 1] += 1;
        }
        for i in 0..students.len() {
            offsets[i + 1] += offsets[i];
        }
        Ok(ResponseMatrix { students, courses, entries, offsets })
    }

    /// Fully observed matrix from row-major values; term index = course index.
    pub fn from_dense(students: Vec<String>, courses: Vec<String>, values: &[bool]) -> Result<Self, DataError> {
        let n_courses = courses.len();
        assert_eq!(values.len(), students.len() * n_courses, "dense value count");
        let entries = values
            .iter()
            .enumerate()
            .map(|(i, &value)| Response {
                student: i / n_courses,
                course: i % n_courses,
                value,
                term: (i % n_courses) as i64,
            })
            .collect();
        ResponseMatrix::new(students, courses, entries)
    }

    pub fn n_students(&self) -> usize {
        self.students.len()
    }

    pub fn n_courses(&self) -> usize {
        self.courses.len()
    }

    pub fn n_responses(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn students(&self) -> &[String] {
        &self.students
    }

    pub fn courses(&self) -> &[String] {
        &self.courses
    }

    pub fn entries(&self) -> &[Response] {
        &self.entries
    }

    pub fn student_entries(&self, student: usize) -> &[Response] {
        &self.entries[self.offsets[student]..self.offsets[student + 1]]
    }

    pub fn get(&self, student: usize, course: usize) -> Option<bool> {
        let row = self.student_entries(student);
        row.binary_search_by_key(&course, |e| e.course).ok().map(|i| row[i].value)
    }

    /// Per-course `(responses, ones)` counts.
    pub fn course_counts(&self) -> Vec<(usize, usize)> {
        let mut counts = vec![(0usize, 0usize); self.courses.len()];
        for e in &self.entries {
            counts[e.course].0 += 1;
            counts[e.course].1 += e.value as usize;
        }
        counts
    }

    /// Per-course column view: `(student, value)` in student order.
    pub fn course_columns(&self) -> Vec<Vec<(usize, bool)>> {
        let mut cols = vec![Vec::new(); self.courses.len()];
        for e in &self.entries {
            cols[e.course].push((e.student, e.value));
        }
        cols
    }

    pub fn student_lookup(&self) -> HashMap<&str, usize> {
        self.students.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
    }

    pub fn course_lookup(&self) -> HashMap<&str, usize> {
        self.courses.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
    }

    /// Keeps the flagged students and courses, re-indexing in original order.
    pub fn retain(&self, keep_students: &[bool], keep_courses: &[bool]) -> ResponseMatrix {
        let remap = |keep: &[bool]| {
            let mut next = 0usize;
            keep.iter()
                .map(|&k| {
                    k.then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect::<Vec<Option<usize>>>()
        };
        let s_map = remap(keep_students);
        let c_map = remap(keep_courses);
        let students = self.students.iter().zip(keep_students).filter(|(_, &k)| k).map(|(s, _)| s.clone()).collect();
        let courses = self.courses.iter().zip(keep_courses).filter(|(_, &k)| k).map(|(c, _)| c.clone()).collect();
        let entries = self
            .entries
            .iter()
            .filter_map(|e| match (s_map[e.student], c_map[e.course]) {
                (Some(student), Some(course)) => Some(Response { student, course, ..*e }),
                _ => None,
            })
            .collect();
        ResponseMatrix::new(students, courses, entries).expect("subset of a valid matrix is valid")
    }

    /// Same student and course labels, different entries.
    pub fn with_entries(&self, entries: Vec<Response>) -> Result<ResponseMatrix, DataError> {
        ResponseMatrix::new(self.students.clone(), self.courses.clone(), entries)
    }

    /// Drops courses that have no responses or a constant response.
    pub fn drop_constant_courses(&self) -> ResponseMatrix {
        let keep_courses: Vec<bool> = self.course_counts().iter().map(|&(n, ones)| n > 0 && ones > 0 && ones < n).collect();
        let keep_students = vec![true; self.students.len()];
        self.retain(&keep_students, &keep_courses)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn rejects_duplicate_pairs() {
        let e = Response { student: 0, course: 0, value: true, term: 1 };
        let err = ResponseMatrix::new(labels("s", 1), labels("c", 1), vec![e, e]).unwrap_err();
        assert!(matches!(err, DataError::DuplicateEntry { .. }));
    }

    #[test]
    fn rows_are_contiguous() {
        let m = ResponseMatrix::from_dense(labels("s", 2), labels("c", 3), &[true, false, true, false, false, true]).unwrap();
        assert_eq!(m.student_entries(1).len(), 3);
        assert_eq!(m.get(1, 2), Some(true));
        assert_eq!(m.get(0, 1), Some(false));
        assert_eq!(m.course_counts(), vec![(2, 1), (2, 0), (2, 2)]);
    }

    #[test]
    fn retain_reindexes() {
        let m = ResponseMatrix::from_dense(labels("s", 3), labels("c", 2), &[true, false, false, true, true, true]).unwrap();
        let sub = m.retain(&[true, false, true], &[false, true]);
        assert_eq!(sub.students(), &["s0".to_string(), "s2".to_string()]);
        assert_eq!(sub.courses(), &["c1".to_string()]);
        assert_eq!(sub.get(1, 0), Some(true));
        assert_eq!(sub.n_responses(), 2);
    }
}

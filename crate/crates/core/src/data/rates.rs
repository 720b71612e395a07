use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::enrollment::EnrollmentRecord;
use super::groups::{Group, GroupAssignment};
use super::matrix::ResponseMatrix;

/// Mean grade points per student on the 4.0 scale, modifiers included.
pub fn compute_gpa(records: &[EnrollmentRecord]) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = sums.entry(r.student_id.clone()).or_default();
        e.0 += r.grade.points();
        e.1 += 1;
    }
    sums.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect()
}

/// Responses and successes of one group in one course.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupCount {
    pub n: usize,
    pub ones: usize,
}

impl GroupCount {
    /// `None` when the group has no responses in the course.
    pub fn rate(&self) -> Option<f64> {
        (self.n > 0).then(|| self.ones as f64 / self.n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseRates {
    pub course_id: String,
    pub all: GroupCount,
    /// G1 (g = −1) and G2 (g = +1); present only when groups were supplied.
    pub g1: Option<GroupCount>,
    pub g2: Option<GroupCount>,
}

impl CourseRates {
    pub fn ar(&self) -> Option<f64> {
        self.all.rate()
    }

    /// `AR_G1 − AR_G2`, undefined if either group is absent from the course.
    pub fn ar_delta(&self) -> Option<f64> {
        Some(self.g1?.rate()? - self.g2?.rate()?)
    }
}

/// Per-course achievement rates, optionally split by group.
pub fn achievement_rates(matrix: &ResponseMatrix, groups: Option<&GroupAssignment>) -> Vec<CourseRates> {
    let student_group: Vec<Option<Group>> = match groups {
        Some(g) => matrix.students().iter().map(|s| g.get(s)).collect(),
        None => vec![None; matrix.n_students()],
    };
    let mut rates: Vec<CourseRates> = matrix
        .courses()
        .iter()
        .map(|c| CourseRates {
            course_id: c.clone(),
            all: GroupCount::default(),
            g1: groups.map(|_| GroupCount::default()),
            g2: groups.map(|_| GroupCount::default()),
        })
        .collect();
    for e in matrix.entries() {
        let r = &mut rates[e.course];
        r.all.n += 1;
        r.all.ones += e.value as usize;
        let slot = match student_group[e.student] {
            Some(Group::Neg) => r.g1.as_mut(),
            Some(Group::Pos) => r.g2.as_mut(),
            None => None,
        };
        if let Some(count) = slot {
            count.n += 1;
            count.ones += e.value as usize;
        }
    }
    rates
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::grade::LetterGrade;
    use crate::data::matrix::Response;

    fn grades(student: &str, gs: &[&str]) -> Vec<EnrollmentRecord> {
        gs.iter()
            .enumerate()
            .map(|(i, g)| EnrollmentRecord::new(student, &format!("c{i}"), 1, g.parse::<LetterGrade>().unwrap()))
            .collect()
    }

    #[test]
    fn gpa_hand_means() {
        let mut recs = grades("a", &["A", "A"]);
        recs.extend(grades("b", &["A", "B", "C"]));
        recs.extend(grades("c", &["A-", "B+"]));
        let gpa = compute_gpa(&recs);
        assert_eq!(gpa["a"], 4.0);
        assert!((gpa["b"] - 3.0).abs() < 1e-12);
        assert!((gpa["c"] - 3.5).abs() < 1e-12);
    }

    fn four_students(values: [bool; 4]) -> ResponseMatrix {
        let entries = values.iter().enumerate().map(|(s, &value)| Response { student: s, course: 0, value, term: 0 }).collect();
        let students = (0..4).map(|i| format!("s{i}")).collect();
        ResponseMatrix::new(students, vec!["c".into()], entries).unwrap()
    }

    #[test]
    fn plain_rate() {
        let rates = achievement_rates(&four_students([true, true, false, false]), None);
        assert_eq!(rates[0].ar(), Some(0.5));
        assert_eq!(rates[0].ar_delta(), None);
    }

    #[test]
    fn group_gap_and_antisymmetry() {
        let m = four_students([true, true, false, false]);
        let mut g = GroupAssignment::new("G1", "G2");
        g.insert("s0", Group::Neg);
        g.insert("s1", Group::Neg);
        g.insert("s2", Group::Pos);
        g.insert("s3", Group::Pos);
        let rates = achievement_rates(&m, Some(&g));
        assert_eq!(rates[0].ar_delta(), Some(1.0));
        let swapped = achievement_rates(&m, Some(&g.flipped()));
        assert_eq!(swapped[0].ar_delta(), Some(-1.0));
    }

    #[test]
    fn identical_groups_have_zero_gap() {
        let m = four_students([true, false, true, false]);
        let mut g = GroupAssignment::new("G1", "G2");
        for (s, grp) in [("s0", Group::Neg), ("s1", Group::Neg), ("s2", Group::Pos), ("s3", Group::Pos)] {
            g.insert(s, grp);
        }
        assert_eq!(achievement_rates(&m, Some(&g))[0].ar_delta(), Some(0.0));
    }

    #[test]
    fn empty_group_is_undefined() {
        let m = four_students([true, false, true, false]);
        let mut g = GroupAssignment::new("G1", "G2");
        g.insert("s0", Group::Neg);
        let r = &achievement_rates(&m, Some(&g))[0];
        assert_eq!(r.g2.unwrap().rate(), None);
        assert_eq!(r.ar_delta(), None);
    }
}

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::enrollment::EnrollmentRecord;
use super::DataError;

/// DCF group encoding: `Neg` is G1 (g = −1), `Pos` is G2 (g = +1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    Neg,
    Pos,
}

impl Group {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Group::Neg => -1.0,
            Group::Pos => 1.0,
        }
    }

    pub fn flipped(self) -> Group {
        match self {
            Group::Neg => Group::Pos,
            Group::Pos => Group::Neg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub encoding: BTreeMap<String, Group>,
    /// Display name of the g = −1 group (G1).
    pub label_neg: String,
    /// Display name of the g = +1 group (G2).
    pub label_pos: String,
}

impl GroupAssignment {
    pub fn new(label_neg: &str, label_pos: &str) -> Self {
        GroupAssignment { encoding: BTreeMap::new(), label_neg: label_neg.to_string(), label_pos: label_pos.to_string() }
    }

    pub fn get(&self, student: &str) -> Option<Group> {
        self.encoding.get(student).copied()
    }

    pub fn insert(&mut self, student: &str, group: Group) {
        self.encoding.insert(student.to_string(), group);
    }

    pub fn count(&self, group: Group) -> usize {
        self.encoding.values().filter(|g| **g == group).count()
    }

    /// Swaps the two encodings (and their labels).
    pub fn flipped(&self) -> GroupAssignment {
        GroupAssignment {
            encoding: self.encoding.iter().map(|(k, g)| (k.clone(), g.flipped())).collect(),
            label_neg: self.label_pos.clone(),
            label_pos: self.label_neg.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupOutcome {
    pub assignment: GroupAssignment,
    /// Students carrying neither value (or no value at all).
    pub excluded: Vec<String>,
}

/// Encodes students by one attribute: `neg_value` → −1, `pos_value` → +1.
pub fn build_groups(
    records: &[EnrollmentRecord],
    attribute: &str,
    neg_value: &str,
    pos_value: &str,
) -> Result<GroupOutcome, DataError> {
    let mut seen: BTreeMap<&str, (bool, bool)> = BTreeMap::new();
    for r in records {
        let entry = seen.entry(r.student_id.as_str()).or_default();
        match r.attributes.get(attribute).map(String::as_str) {
            Some(v) if v == neg_value => entry.0 = true,
            Some(v) if v == pos_value => entry.1 = true,
            _ => {}
        }
    }
    let mut assignment = GroupAssignment::new(neg_value, pos_value);
    let mut excluded = BTreeSet::new();
    for (student, flags) in seen {
        match flags {
            (true, true) => return Err(DataError::AmbiguousGroup { student: student.to_string() }),
            (true, false) => assignment.insert(student, Group::Neg),
            (false, true) => assignment.insert(student, Group::Pos),
            (false, false) => {
                excluded.insert(student.to_string());
            }
        }
    }
    Ok(GroupOutcome { assignment, excluded: excluded.into_iter().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::grade::Letter;

    fn rec(s: &str, attr: &str, v: &str) -> EnrollmentRecord {
        EnrollmentRecord::new(s, "c", 1, Letter::A.into()).with_attribute(attr, v)
    }

    #[test]
    fn majors_map_to_signs() {
        let recs = vec![rec("a", "major", "Eco"), rec("b", "major", "CompSci"), rec("c", "major", "Math")];
        let out = build_groups(&recs, "major", "Eco", "CompSci").unwrap();
        assert_eq!(out.assignment.get("a"), Some(Group::Neg));
        assert_eq!(out.assignment.get("b"), Some(Group::Pos));
        assert_eq!(out.excluded, vec!["c".to_string()]);
        assert_eq!(out.assignment.label_neg, "Eco");
    }

    #[test]
    fn transfer_flag() {
        let recs = vec![rec("t", "transfer", "true"), rec("n", "transfer", "false")];
        let out = build_groups(&recs, "transfer", "true", "false").unwrap();
        assert_eq!(out.assignment.get("t").unwrap().sign(), -1.0);
        assert_eq!(out.assignment.get("n").unwrap().sign(), 1.0);
    }

    #[test]
    fn both_values_is_ambiguous() {
        let recs = vec![rec("a", "major", "Eco"), rec("a", "major", "CompSci")];
        assert!(matches!(build_groups(&recs, "major", "Eco", "CompSci"), Err(DataError::AmbiguousGroup { .. })));
    }

    #[test]
    fn single_valued_population_is_valid() {
        let recs = vec![rec("a", "major", "Eco"), rec("b", "major", "Eco")];
        let out = build_groups(&recs, "major", "Eco", "CompSci").unwrap();
        assert_eq!(out.assignment.count(Group::Neg), 2);
        assert_eq!(out.assignment.count(Group::Pos), 0);
    }
}

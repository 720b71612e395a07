use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::grade::LetterGrade;
use super::DataError;

pub const REQUIRED_COLUMNS: [&str; 4] = ["student_id", "course_id", "term_index", "letter_grade"];

/// One completed student-course enrollment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrollmentRecord {
    pub student_id: String,
    pub course_id: String,
    pub term_index: i64,
    pub grade: LetterGrade,
    pub attributes: BTreeMap<String, String>,
}

impl EnrollmentRecord {
    pub fn new(student_id: &str, course_id: &str, term_index: i64, grade: LetterGrade) -> Self {
        EnrollmentRecord {
            student_id: student_id.to_string(),
            course_id: course_id.to_string(),
            term_index,
            grade,
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_attribute(mut self, key: &str, value: &str) -> Self {
        self.attributes.insert(key.to_string(), value.to_string());
        self
    }
}

/// A row that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    /// 1-based line number in the input (the header is line 1).
    pub row: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParsedEnrollments {
    pub records: Vec<EnrollmentRecord>,
    pub rejects: Vec<Reject>,
    /// Header names of the attribute columns that were read.
    pub attribute_columns: Vec<String>,
}

/// Parses the enrollment CSV.
///
/// `attribute_columns` names the extra columns to read as attributes; an
/// empty slice reads every column after `letter_grade`. A cell written as
/// `key=value` stores `value` under `key` instead of the column name.
pub fn parse_enrollments<R: Read>(input: R, attribute_columns: &[String]) -> Result<ParsedEnrollments, DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
    let header = reader.byte_headers().map_err(|e| DataError::Csv(e.to_string()))?.clone();
    if header.is_empty() {
        return Ok(ParsedEnrollments::default());
    }
    let names: Vec<String> = header.iter().map(|h| String::from_utf8_lossy(h).trim().to_string()).collect();
    let position = |name: &str| names.iter().position(|n| n == name);

    let mut required = [0usize; 4];
    for (slot, name) in required.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = position(name).ok_or_else(|| DataError::MissingColumn(name.to_string()))?;
    }
    let attrs: Vec<(usize, String)> = if attribute_columns.is_empty() {
        names.iter().enumerate().filter(|(i, _)| !required.contains(i)).map(|(i, n)| (i, n.clone())).collect()
    } else {
        attribute_columns
            .iter()
            .map(|name| position(name).map(|i| (i, name.clone())).ok_or_else(|| DataError::MissingColumn(name.clone())))
            .collect::<Result<_, _>>()?
    };

    let mut out = ParsedEnrollments {
        attribute_columns: attrs.iter().map(|(_, n)| n.clone()).collect(),
        ..Default::default()
    };
    let mut record = csv::ByteRecord::new();
    loop {
        match reader.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let row = e.position().map(|p| p.line()).unwrap_or(0);
                out.rejects.push(Reject { row, reason: format!("malformed row: {e}") });
                continue;
            }
        }
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&record, &required, &attrs) {
            Ok(r) => out.records.push(r),
            Err(reason) => out.rejects.push(Reject { row, reason }),
        }
    }
    Ok(out)
}

fn parse_row(record: &csv::ByteRecord, required: &[usize; 4], attrs: &[(usize, String)]) -> Result<EnrollmentRecord, String> {
    let field = |i: usize| -> Result<&str, String> {
        let raw = record.get(i).ok_or_else(|| "missing field".to_string())?;
        std::str::from_utf8(raw).map(str::trim).map_err(|_| "invalid UTF-8".to_string())
    };
    let student_id = field(required[0])?;
    let course_id = field(required[1])?;
    if student_id.is_empty() || course_id.is_empty() {
        return Err("empty student or course id".to_string());
    }
    let term_index: i64 = field(required[2])?.parse().map_err(|_| "invalid term_index".to_string())?;
    let grade: LetterGrade = field(required[3])?.parse().map_err(|e: super::grade::GradeParseError| match e {
        super::grade::GradeParseError::NonLetter(_) => "non-letter grade".to_string(),
        other => other.to_string(),
    })?;
    let mut attributes = BTreeMap::new();
    for (i, name) in attrs {
        let Some(raw) = record.get(*i) else { continue };
        let cell = std::str::from_utf8(raw).map_err(|_| "invalid UTF-8".to_string())?.trim();
        if cell.is_empty() {
            continue;
        }
        match cell.split_once('=') {
            Some((k, v)) => attributes.insert(k.trim().to_string(), v.trim().to_string()),
            None => attributes.insert(name.clone(), cell.to_string()),
        };
    }
    Ok(EnrollmentRecord {
        student_id: student_id.to_string(),
        course_id: course_id.to_string(),
        term_index,
        grade,
        attributes,
    })
}

/// Writes the rejects report as `row,reason`.
pub fn write_rejects<W: std::io::Write>(rejects: &[Reject], out: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "reason"]).map_err(|e| DataError::Csv(e.to_string()))?;
    for r in rejects {
        w.write_record([r.row.to_string(), r.reason.clone()]).map_err(|e| DataError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| DataError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::grade::{Letter, LetterGrade};

    #[test]
    fn maps_fields_directly() {
        let input = "student_id,course_id,term_index,letter_grade,major\ns1,Math54,3,A,major=Eco\n";
        let parsed = parse_enrollments(input.as_bytes(), &[]).unwrap();
        assert!(parsed.rejects.is_empty());
        let r = &parsed.records[0];
        assert_eq!(r.student_id, "s1");
        assert_eq!(r.course_id, "Math54");
        assert_eq!(r.term_index, 3);
        assert_eq!(r.grade, LetterGrade::from(Letter::A));
        assert_eq!(r.attributes.get("major").map(String::as_str), Some("Eco"));
    }

    #[test]
    fn pass_fail_is_rejected_with_row_number() {
        let input = "student_id,course_id,term_index,letter_grade\ns1,Math54,3,B\ns1,Math54,3,P\n";
        let parsed = parse_enrollments(input.as_bytes(), &[]).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.rejects, vec![Reject { row: 3, reason: "non-letter grade".into() }]);
    }

    #[test]
    fn empty_stream_is_empty() {
        let parsed = parse_enrollments("".as_bytes(), &[]).unwrap();
        assert!(parsed.records.is_empty());
        assert!(parsed.rejects.is_empty());
    }

    #[test]
    fn missing_required_column_is_fatal() {
        let input = "student_id,course_id,letter_grade\ns1,M,A\n";
        let err = parse_enrollments(input.as_bytes(), &[]).unwrap_err();
        assert!(matches!(err, DataError::MissingColumn(c) if c == "term_index"));
    }

    #[test]
    fn missing_attribute_column_is_fatal() {
        let input = "student_id,course_id,term_index,letter_grade\ns1,M,1,A\n";
        let err = parse_enrollments(input.as_bytes(), &["major".to_string()]).unwrap_err();
        assert!(matches!(err, DataError::MissingColumn(c) if c == "major"));
    }

    #[test]
    fn bad_term_and_short_rows_are_rejected() {
        let input = "student_id,course_id,term_index,letter_grade\ns1,M,x,A\ns2,M\ns3,M,2,C+\n";
        let parsed = parse_enrollments(input.as_bytes(), &[]).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.rejects.len(), 2);
        assert_eq!(parsed.rejects[0].reason, "invalid term_index");
        assert_eq!(parsed.rejects[1].row, 3);
    }

    #[test]
    fn rejects_report_format() {
        let mut buf = Vec::new();
        write_rejects(&[Reject { row: 4, reason: "non-letter grade".into() }], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "row,reason\n4,non-letter grade\n");
    }
}

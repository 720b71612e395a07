//! Enrollment ingestion: parsing, dichotomization against an achievement
//! grade, iterative filtering and group construction.

mod dichotomize;
mod enrollment;
mod filter;
mod grade;
mod groups;
mod matrix;
mod rates;

pub use dichotomize::{dichotomize, median_letter, AgPolicy, Dichotomized};
pub use enrollment::{parse_enrollments, write_rejects, EnrollmentRecord, ParsedEnrollments, Reject, REQUIRED_COLUMNS};
pub use filter::{iterative_filter, FilterConfig, FilterStep, Filtered};
pub use grade::{GradeParseError, Letter, LetterGrade, Modifier};
pub use groups::{build_groups, Group, GroupAssignment, GroupOutcome};
pub use matrix::{Response, ResponseMatrix};
pub use rates::{achievement_rates, compute_gpa, CourseRates, GroupCount};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("missing required column '{0}'")]
    MissingColumn(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("no records")]
    NoRecords,
    #[error("dataset eliminated by filtering after {} rounds", trace.len())]
    Eliminated { trace: Vec<FilterStep> },
    #[error("ambiguous group membership for student '{student}'")]
    AmbiguousGroup { student: String },
    #[error("duplicate response for student '{student}' in course '{course}'")]
    DuplicateEntry { student: String, course: String },
    #[error("response index out of range (student {student}, course {course})")]
    IndexOutOfRange { student: usize, course: usize },
    #[error("filter thresholds must be at least 1")]
    InvalidThreshold,
}

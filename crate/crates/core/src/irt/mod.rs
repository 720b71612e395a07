//! IRT models: response functions, MML-EM fitting, EAP traits, simulation.

mod em;
mod model;
mod quadrature;
mod simulate;
mod traits;

pub use em::fit;
pub use model::{
    default_quadrature_points, irf, projected_difficulty, Family, FittedModel, ModelSpec, DEFAULT_LOGLIK_REL_TOLERANCE,
    DEFAULT_MAX_EM_ITERATIONS,
};
pub use quadrature::{QuadratureGrid, GRID_HALF_WIDTH};
pub use simulate::{simulate_from_parameters, simulate_responses, simulated_course_id, simulated_student_id, DcfInjection};
pub use traits::{estimate_traits, marginal_log_likelihood, TraitEstimates};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IrtError {
    #[error("empty response matrix")]
    EmptyMatrix,
    #[error("course '{course}' has constant responses; filter before fitting")]
    ConstantCourse { course: String },
    #[error("non-finite likelihood or parameters at course '{course}'")]
    NonFinite { course: String },
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("undefined difficulty: zero discrimination vector")]
    UndefinedDifficulty,
    #[error("course '{course}' is not part of the fitted model")]
    CourseMismatch { course: String },
    #[error("injection course index {course} out of range for {n_courses} courses")]
    InjectionOutOfRange { course: usize, n_courses: usize },
    #[error("student '{student}' has no group encoding")]
    MissingGroup { student: String },
}

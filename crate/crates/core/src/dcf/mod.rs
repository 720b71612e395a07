//! Differential course functioning.
//!
//! Each course gets an offset logistic regression on top of a fitted Rasch
//! model, `logit P(x_sc = 1) = β0 + β1·g_s + (θ_s − δ_c)`, tested against
//! its nested reduction by a likelihood-ratio test. p-values are controlled
//! across courses with Benjamini-Hochberg. The achievement-rate (AR) gap is
//! computed alongside as a baseline, and each course gets a case label from
//! the AR gap and the trait gap between the groups.

mod ar;
mod multiple;
mod regression;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ar::{ar_delta_test, case_from_flags, ArDeltaResult, ArTest, CaseLabel};
pub use multiple::{bh_adjust, BhOutcome};
pub use regression::{
    effect_size_from_logits, effect_size_probability, fit_dcf, lrt_pvalue, DcfFit, DcfObservation, LrtMode, LrtResult,
    MIN_GROUP_SIZE,
};

use crate::data::{Group, GroupAssignment, ResponseMatrix};
use crate::irt::{Family, FittedModel, TraitEstimates};
use crate::stats::{mean, welch_t_test};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DcfError {
    #[error("course '{course}': group sizes {n_neg}/{n_pos} below minimum {min}")]
    GroupTooSmall { course: String, n_neg: usize, n_pos: usize, min: usize },
    #[error("course '{course}': DCF fit did not converge")]
    NotConverged { course: String },
    #[error("course '{course}': negative likelihood-ratio statistic {statistic}")]
    NestingViolated { course: String, statistic: f64 },
    #[error("course '{course}': a group has no responders")]
    EmptyGroup { course: String },
    #[error("DCF analysis requires a one-dimensional Rasch (1PL) model, got {model}")]
    NotRasch { model: String },
    #[error("model selection did not support the Rasch model; refusing DCF analysis without override")]
    NotAdmissible,
    #[error("student '{student}' has no trait estimate")]
    MissingTrait { student: String },
    #[error("course '{course}' is not part of the fitted model")]
    CourseMismatch { course: String },
}

/// Where the trait used for the probability-scale effect size comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ThetaBar {
    /// Mean trait of the course's responders, both groups pooled.
    #[default]
    CourseLocal,
    /// Mean trait over every student with an estimate.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcfOptions {
    /// Benjamini-Hochberg level for both the DCF and the AR tests.
    pub q: f64,
    pub lrt_mode: LrtMode,
    pub min_group_size: usize,
    pub theta_bar: ThetaBar,
    /// Significance level of the per-course trait-gap test.
    pub trait_gap_alpha: f64,
    /// Outcome of model selection.
    pub rasch_admissible: bool,
    /// Run even when `rasch_admissible` is false.
    pub override_rasch_guard: bool,
}

impl Default for DcfOptions {
    fn default() -> Self {
        DcfOptions {
            q: 0.05,
            lrt_mode: LrtMode::default(),
            min_group_size: MIN_GROUP_SIZE,
            theta_bar: ThetaBar::default(),
            trait_gap_alpha: 0.05,
            rasch_admissible: true,
            override_rasch_guard: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcfResult {
    pub fit: DcfFit,
    /// Rasch difficulty of the course.
    pub delta: f64,
    pub lrt_statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub significant_fdr: bool,
    /// `P_G1 − P_G2` at `theta_bar`.
    pub effect_size_prob: f64,
    pub theta_bar: f64,
    /// Welch p-value for the trait gap between the groups in this course.
    pub trait_gap_p: Option<f64>,
    pub case_label: Option<CaseLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCourse {
    pub course_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcfAnalysis {
    /// Tested courses, sorted by course id.
    pub results: Vec<DcfResult>,
    /// AR comparisons, sorted by course id.
    pub ar_results: Vec<ArDeltaResult>,
    pub skipped: Vec<SkippedCourse>,
    pub bh_threshold: f64,
    pub ar_bh_threshold: f64,
    pub options: DcfOptions,
}

impl DcfAnalysis {
    /// `(G1 finds easier, G2 finds easier)` counts among significant courses.
    pub fn significant_by_direction(&self) -> (usize, usize) {
        let sig = self.results.iter().filter(|r| r.significant_fdr);
        sig.fold((0, 0), |(a, b), r| if r.fit.beta1 < 0.0 { (a + 1, b) } else { (a, b + 1) })
    }

    pub fn significant_ar_count(&self) -> usize {
        self.ar_results.iter().filter(|r| r.significant_fdr).count()
    }
}

/// Case label for one course from its DCF and AR results.
///
/// # Panics
/// When the two results refer to different courses.
pub fn classify_case(dcf: &DcfResult, ar: &ArDeltaResult, trait_gap_significant: bool) -> CaseLabel {
    assert_eq!(dcf.fit.course_id, ar.course_id, "DCF and AR results refer to different courses");
    case_from_flags(ar.significant_fdr, trait_gap_significant)
}

/// Per-course inputs gathered from the matrix.
struct CourseData {
    course_id: String,
    delta: f64,
    observations: Vec<DcfObservation>,
}

fn gather(
    matrix: &ResponseMatrix,
    groups: &GroupAssignment,
    model: &FittedModel,
    traits: &TraitEstimates,
) -> Result<Vec<CourseData>, DcfError> {
    let trait_index = traits.lookup();
    let student_theta: Vec<Option<(f64, Group)>> = matrix
        .students()
        .iter()
        .map(|s| match groups.get(s) {
            None => Ok(None),
            Some(g) => trait_index
                .get(s.as_str())
                .map(|&i| Some((traits.traits[i][0], g)))
                .ok_or_else(|| DcfError::MissingTrait { student: s.clone() }),
        })
        .collect::<Result<_, _>>()?;
    let mut courses: Vec<CourseData> = matrix
        .courses()
        .iter()
        .map(|c| {
            let idx = model.course_index(c).ok_or_else(|| DcfError::CourseMismatch { course: c.clone() })?;
            Ok(CourseData { course_id: c.clone(), delta: model.locations[idx][0], observations: Vec::new() })
        })
        .collect::<Result<_, DcfError>>()?;
    for e in matrix.entries() {
        if let Some((theta, group)) = student_theta[e.student] {
            courses[e.course].observations.push(DcfObservation { response: e.value, theta, group });
        }
    }
    courses.sort_by(|a, b| a.course_id.cmp(&b.course_id));
    Ok(courses)
}

enum CourseOutcome {
    Tested { fit: DcfFit, lrt: LrtResult },
    Skipped(String),
}

/// End-to-end DCF analysis over every course of `matrix`.
///
/// Students without a group encoding are left out of the per-course data.
/// Courses failing the group-size minimum or not converging are listed in
/// `skipped` and excluded from the BH adjustment.
pub fn run_dcf_analysis(
    matrix: &ResponseMatrix,
    groups: &GroupAssignment,
    model: &FittedModel,
    traits: &TraitEstimates,
    options: &DcfOptions,
) -> Result<DcfAnalysis, DcfError> {
    if model.spec.family != Family::OnePl || model.dims() != 1 {
        return Err(DcfError::NotRasch { model: model.spec.label() });
    }
    if !options.rasch_admissible {
        if !options.override_rasch_guard {
            return Err(DcfError::NotAdmissible);
        }
        log::warn!("Rasch guard overridden: running DCF analysis on data that did not select the Rasch model");
    }
    let courses = gather(matrix, groups, model, traits)?;
    let global_theta = mean(&traits.traits.iter().map(|t| t[0]).collect::<Vec<_>>()).unwrap_or(0.0);

    let outcomes: Vec<(CourseOutcome, Option<ArDeltaResult>, Option<f64>, f64)> = courses
        .par_iter()
        .map(|cd| {
            let outcome = match fit_dcf(&cd.course_id, &cd.observations, cd.delta, options.min_group_size) {
                Err(e) => CourseOutcome::Skipped(e.to_string()),
                Ok(fit) => match lrt_pvalue(&fit, options.lrt_mode) {
                    Ok(lrt) => CourseOutcome::Tested { fit, lrt },
                    Err(e) => CourseOutcome::Skipped(e.to_string()),
                },
            };
            let pairs: Vec<(bool, Group)> = cd.observations.iter().map(|o| (o.response, o.group)).collect();
            let ar = ar_delta_test(&cd.course_id, &pairs).ok();
            let split = |g: Group| cd.observations.iter().filter(|o| o.group == g).map(|o| o.theta).collect::<Vec<_>>();
            let gap = welch_t_test(&split(Group::Neg), &split(Group::Pos)).map(|t| t.p_value);
            let thetas: Vec<f64> = cd.observations.iter().map(|o| o.theta).collect();
            let theta_bar = match options.theta_bar {
                ThetaBar::CourseLocal => mean(&thetas).unwrap_or(global_theta),
                ThetaBar::Global => global_theta,
            };
            (outcome, ar, gap, theta_bar)
        })
        .collect();

    let mut results = Vec::new();
    let mut ar_results = Vec::new();
    let mut skipped = Vec::new();
    let mut gaps: HashMap<String, Option<f64>> = HashMap::new();
    for (cd, (outcome, ar, gap, theta_bar)) in courses.iter().zip(outcomes) {
        gaps.insert(cd.course_id.clone(), gap);
        if let Some(ar) = ar {
            ar_results.push(ar);
        }
        match outcome {
            CourseOutcome::Skipped(reason) => {
                log::info!("course '{}' skipped: {reason}", cd.course_id);
                skipped.push(SkippedCourse { course_id: cd.course_id.clone(), reason });
            }
            CourseOutcome::Tested { fit, lrt } => results.push(DcfResult {
                effect_size_prob: effect_size_probability(&fit, theta_bar, cd.delta),
                fit,
                delta: cd.delta,
                lrt_statistic: lrt.statistic,
                df: lrt.df,
                p_value: lrt.p_value,
                significant_fdr: false,
                theta_bar,
                trait_gap_p: gap,
                case_label: None,
            }),
        }
    }

    let dcf_bh = bh_adjust(&results.iter().map(|r| r.p_value).collect::<Vec<_>>(), options.q);
    for (r, flag) in results.iter_mut().zip(&dcf_bh.flags) {
        r.significant_fdr = *flag;
    }
    let ar_bh = bh_adjust(&ar_results.iter().map(|r| r.p_value).collect::<Vec<_>>(), options.q);
    for (r, flag) in ar_results.iter_mut().zip(&ar_bh.flags) {
        r.significant_fdr = *flag;
    }
    let ar_by_course: HashMap<&str, &ArDeltaResult> = ar_results.iter().map(|a| (a.course_id.as_str(), a)).collect();
    for r in results.iter_mut() {
        if let Some(ar) = ar_by_course.get(r.fit.course_id.as_str()) {
            let gap_sig = gaps[&r.fit.course_id].is_some_and(|p| p < options.trait_gap_alpha);
            r.case_label = Some(classify_case(r, ar, gap_sig));
        }
    }

    Ok(DcfAnalysis {
        results,
        ar_results,
        skipped,
        bh_threshold: dcf_bh.threshold,
        ar_bh_threshold: ar_bh.threshold,
        options: options.clone(),
    })
}

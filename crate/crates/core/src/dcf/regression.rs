use serde::{Deserialize, Serialize};

use super::DcfError;
use crate::data::Group;
use crate::stats::{chi2_sf, log_sigmoid, sigmoid};

/// Smallest number of responders per group for a course to be tested.
pub const MIN_GROUP_SIZE: usize = 10;

const RIDGE: f64 = 1e-6;
const FALLBACK_RIDGE: f64 = 1e-2;
const DIVERGENCE_BOUND: f64 = 10.0;
const MAX_NEWTON_ITERATIONS: usize = 100;

/// One response in a course together with the responder's trait and group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcfObservation {
    pub response: bool,
    pub theta: f64,
    pub group: Group,
}

/// Which nested pair of models the likelihood-ratio test compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LrtMode {
    /// Full model against the pure Rasch prediction (β0 = β1 = 0), 2 df.
    Joint,
    /// Full model against the intercept-only model (β1 = 0), 1 df.
    #[default]
    EffectOnly,
}

impl LrtMode {
    pub fn df(self) -> usize {
        match self {
            LrtMode::Joint => 2,
            LrtMode::EffectOnly => 1,
        }
    }

    pub fn from_df(df: usize) -> Option<LrtMode> {
        match df {
            1 => Some(LrtMode::EffectOnly),
            2 => Some(LrtMode::Joint),
            _ => None,
        }
    }
}

/// Offset logistic regression of one course:
/// `logit P(x = 1) = β0 + β1·g + (θ − δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcfFit {
    pub course_id: String,
    pub beta0: f64,
    pub beta1: f64,
    pub loglik_full: f64,
    /// Log-likelihood at β0 = β1 = 0.
    pub loglik_null: f64,
    /// Log-likelihood maximised over β0 with β1 = 0.
    pub loglik_intercept: f64,
    pub n_neg: usize,
    pub n_pos: usize,
    pub converged: bool,
    /// Set when the fit needed the stronger ridge to stay bounded.
    pub ridge_fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrtResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

fn loglik(obs: &[DcfObservation], offsets: &[f64], beta0: f64, beta1: f64) -> f64 {
    obs.iter()
        .zip(offsets)
        .map(|(o, off)| {
            let eta = beta0 + beta1 * o.group.sign() + off;
            if o.response {
                log_sigmoid(eta)
            } else {
                log_sigmoid(-eta)
            }
        })
        .sum()
}

struct Newton {
    beta: [f64; 2],
    converged: bool,
}

/// Maximises the ridge-penalised likelihood. With `with_group = false` only
/// β0 is free.
fn newton(obs: &[DcfObservation], offsets: &[f64], start: [f64; 2], with_group: bool, ridge: f64) -> Newton {
    let objective = |b: [f64; 2]| loglik(obs, offsets, b[0], b[1]) - 0.5 * ridge * (b[0] * b[0] + b[1] * b[1]);
    let mut beta = start;
    let mut current = objective(beta);
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let (mut g0, mut g1, mut h00, mut h01) = (0.0, 0.0, 0.0, 0.0);
        for (o, off) in obs.iter().zip(offsets) {
            let s = o.group.sign();
            let p = sigmoid(beta[0] + beta[1] * s + off);
            let r = o.response as u8 as f64 - p;
            let w = p * (1.0 - p);
            g0 += r;
            g1 += s * r;
            h00 += w;
            h01 += w * s;
        }
        g0 -= ridge * beta[0];
        g1 -= ridge * beta[1];
        // g² = 1, so the β1 curvature equals the β0 curvature
        let (a, b, d) = (h00 + ridge, h01, h00 + ridge);
        let step = if with_group {
            let det = a * d - b * b;
            if det <= 0.0 || !det.is_finite() {
                return Newton { beta, converged: false };
            }
            [(d * g0 - b * g1) / det, (a * g1 - b * g0) / det]
        } else {
            [g0 / a, 0.0]
        };
        if step[0].abs().max(step[1].abs()) < 1e-10 {
            return Newton { beta, converged: true };
        }
        let mut scale = 1.0;
        loop {
            let trial = [beta[0] + scale * step[0], beta[1] + scale * step[1]];
            let value = objective(trial);
            if value >= current - 1e-12 {
                beta = trial;
                current = value;
                break;
            }
            scale *= 0.5;
            if scale < 1e-8 {
                return Newton { beta, converged: step[0].abs().max(step[1].abs()) < 1e-6 };
            }
        }
    }
    Newton { beta, converged: false }
}

/// Fits the DCF regression for one course with the Rasch term `θ − δ` as a
/// fixed offset.
///
/// Courses where either group has fewer than `min_group_size` responders
/// are refused with [`DcfError::GroupTooSmall`]. A fit whose coefficients
/// exceed ±10 is redone with a stronger ridge; if that is still unbounded or
/// fails to converge the returned fit has `converged = false`.
pub fn fit_dcf(
    course_id: &str,
    observations: &[DcfObservation],
    delta: f64,
    min_group_size: usize,
) -> Result<DcfFit, DcfError> {
    let n_neg = observations.iter().filter(|o| o.group == Group::Neg).count();
    let n_pos = observations.len() - n_neg;
    if n_neg < min_group_size || n_pos < min_group_size {
        return Err(DcfError::GroupTooSmall { course: course_id.to_string(), n_neg, n_pos, min: min_group_size });
    }
    let offsets: Vec<f64> = observations.iter().map(|o| o.theta - delta).collect();

    let run = |ridge: f64| {
        let intercept = newton(observations, &offsets, [0.0, 0.0], false, ridge);
        let full = newton(observations, &offsets, [intercept.beta[0], 0.0], true, ridge);
        (intercept, full)
    };
    let bounded = |n: &Newton| n.beta.iter().all(|b| b.abs() <= DIVERGENCE_BOUND);

    let (mut intercept, mut full) = run(RIDGE);
    let mut ridge_fallback = false;
    if !(bounded(&full) && bounded(&intercept)) {
        log::warn!("course '{course_id}': DCF coefficients diverged; refitting with ridge {FALLBACK_RIDGE}");
        ridge_fallback = true;
        (intercept, full) = run(FALLBACK_RIDGE);
    }
    let converged = full.converged && intercept.converged && bounded(&full) && bounded(&intercept);

    let loglik_null = loglik(observations, &offsets, 0.0, 0.0);
    let loglik_intercept = loglik(observations, &offsets, intercept.beta[0], 0.0).max(loglik_null);
    let loglik_full = loglik(observations, &offsets, full.beta[0], full.beta[1]).max(loglik_intercept);
    Ok(DcfFit {
        course_id: course_id.to_string(),
        beta0: full.beta[0],
        beta1: full.beta[1],
        loglik_full,
        loglik_null,
        loglik_intercept,
        n_neg,
        n_pos,
        converged,
        ridge_fallback,
    })
}

/// Likelihood-ratio statistic and chi-square p-value for a converged fit.
pub fn lrt_pvalue(fit: &DcfFit, mode: LrtMode) -> Result<LrtResult, DcfError> {
    if !fit.converged {
        return Err(DcfError::NotConverged { course: fit.course_id.clone() });
    }
    let reduced = match mode {
        LrtMode::Joint => fit.loglik_null,
        LrtMode::EffectOnly => fit.loglik_intercept,
    };
    let raw = 2.0 * (fit.loglik_full - reduced);
    if raw < -1e-9 {
        return Err(DcfError::NestingViolated { course: fit.course_id.clone(), statistic: raw });
    }
    let statistic = raw.max(0.0);
    let df = mode.df();
    Ok(LrtResult { statistic, df, p_value: chi2_sf(statistic, df as f64) })
}

/// `P_G1 − P_G2` at trait `theta_bar`:
/// `σ(β0 − β1 + θ̄ − δ) − σ(β0 + β1 + θ̄ − δ)`.
///
/// Positive values mean the course is easier for G1 (g = −1).
pub fn effect_size_from_logits(beta0: f64, beta1: f64, theta_bar: f64, delta: f64) -> f64 {
    let base = beta0 + theta_bar - delta;
    sigmoid(base - beta1) - sigmoid(base + beta1)
}

pub fn effect_size_probability(fit: &DcfFit, theta_bar: f64, delta: f64) -> f64 {
    effect_size_from_logits(fit.beta0, fit.beta1, theta_bar, delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(response: bool, theta: f64, group: Group) -> DcfObservation {
        DcfObservation { response, theta, group }
    }

    #[test]
    fn small_group_is_refused() {
        let data: Vec<_> = (0..30).map(|i| obs(i % 2 == 0, 0.0, if i < 25 { Group::Neg } else { Group::Pos })).collect();
        match fit_dcf("c", &data, 0.0, MIN_GROUP_SIZE) {
            Err(DcfError::GroupTooSmall { n_neg: 25, n_pos: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identical_models_give_p_one() {
        let fit = DcfFit {
            course_id: "c".into(),
            beta0: 0.0,
            beta1: 0.0,
            loglik_full: -10.0,
            loglik_null: -10.0,
            loglik_intercept: -10.0,
            n_neg: 10,
            n_pos: 10,
            converged: true,
            ridge_fallback: false,
        };
        for mode in [LrtMode::Joint, LrtMode::EffectOnly] {
            let r = lrt_pvalue(&fit, mode).unwrap();
            assert_eq!(r.statistic, 0.0);
            assert_eq!(r.p_value, 1.0);
        }
    }

    #[test]
    fn nesting_violation_is_an_error() {
        let fit = DcfFit {
            course_id: "c".into(),
            beta0: 0.0,
            beta1: 0.0,
            loglik_full: -10.0,
            loglik_null: -9.0,
            loglik_intercept: -9.5,
            n_neg: 10,
            n_pos: 10,
            converged: true,
            ridge_fallback: false,
        };
        assert!(matches!(lrt_pvalue(&fit, LrtMode::Joint), Err(DcfError::NestingViolated { .. })));
    }

    #[test]
    fn separated_groups_use_fallback_ridge() {
        // every G2 responder achieves, every G1 responder fails
        let data: Vec<_> = (0..40)
            .map(|i| {
                let g = if i % 2 == 0 { Group::Neg } else { Group::Pos };
                obs(g == Group::Pos, 0.0, g)
            })
            .collect();
        let fit = fit_dcf("c", &data, 0.0, MIN_GROUP_SIZE).unwrap();
        assert!(fit.ridge_fallback);
        assert!(fit.beta1 > 0.0);
    }

    #[test]
    fn effect_size_zero_without_group_effect() {
        for (b0, tb, d) in [(0.3, 1.0, -0.2), (-1.0, 0.0, 2.0)] {
            assert_eq!(effect_size_from_logits(b0, 0.0, tb, d), 0.0);
        }
    }
}

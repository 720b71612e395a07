//! Monte Carlo power and false-discovery studies for DCF detection.
//!
//! Every replication draws course difficulties and student traits from a
//! standard normal, simulates Rasch responses with a group shift on the
//! designated DCF courses, refits the Rasch model, estimates EAP traits and
//! runs the DCF test. Random streams are derived from one master seed by
//! hashing the cell and replication indices, so any cell can be reproduced
//! on its own and results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Group, GroupAssignment, ResponseMatrix};
use crate::dcf::{fit_dcf, lrt_pvalue, run_dcf_analysis, DcfObservation, DcfOptions, LrtMode, MIN_GROUP_SIZE};
use crate::irt::{estimate_traits, fit, simulate_responses, simulated_course_id, simulated_student_id, DcfInjection, ModelSpec};
use crate::stats::wilson_interval;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PowerError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_courses: usize,
    pub n_dcf_courses: usize,
    pub beta1_grid: Vec<f64>,
    /// Students per group at ratio 0.5; a replication has twice this many
    /// students in total.
    pub group_size_grid: Vec<usize>,
    /// Share of students in G2 (g = +1).
    pub group_ratio: f64,
    pub replications: usize,
    /// Per-course significance level inside power cells.
    pub alpha: f64,
    pub master_seed: u64,
    pub lrt_mode: LrtMode,
    /// BH level of the FDR study.
    pub fdr_q: f64,
    /// Effect and group size of the injected courses in the mixed FDR
    /// scenario.
    pub fdr_beta1: f64,
    pub fdr_group_size: usize,
    pub fdr_replications: usize,
    /// Confidence level of the reported Wilson intervals.
    pub confidence: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_courses: 50,
            n_dcf_courses: 1,
            beta1_grid: vec![0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4],
            group_size_grid: (1..=11).map(|i| 50 * i).collect(),
            group_ratio: 0.5,
            replications: 1000,
            alpha: 0.05,
            master_seed: 20240501,
            lrt_mode: LrtMode::default(),
            fdr_q: 0.05,
            fdr_beta1: 0.4,
            fdr_group_size: 500,
            fdr_replications: 200,
            confidence: 0.95,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), PowerError> {
        let bad = |m: &str| Err(PowerError::InvalidConfig(m.to_string()));
        if self.n_courses == 0 {
            return bad("n_courses must be positive");
        }
        if self.n_dcf_courses > self.n_courses {
            return bad("n_dcf_courses exceeds n_courses");
        }
        if !(self.group_ratio > 0.0 && self.group_ratio < 1.0) {
            return bad("group_ratio must lie in (0, 1)");
        }
        if self.beta1_grid.is_empty() || self.group_size_grid.is_empty() {
            return bad("beta1 and group-size grids must be non-empty");
        }
        if self.group_size_grid.contains(&0) {
            return bad("group sizes must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) || !(0.0..1.0).contains(&self.fdr_q) {
            return bad("alpha must lie in (0, 1) and q in [0, 1)");
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad("confidence must lie in (0, 1)");
        }
        Ok(())
    }
}

/// splitmix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a parent seed and a path of
/// indices.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(parent), |acc, &i| mix(acc ^ mix(i.wrapping_add(0x5851_f42d_4c95_7f2d))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub beta1: f64,
    pub group_size: usize,
    pub detections: usize,
    pub replications: usize,
    /// `detections / replications`.
    pub power: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Replications where fitting failed; counted as non-detections.
    pub fit_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub cells: Vec<PowerCell>,
    pub lrt_df: usize,
    pub master_seed: u64,
    pub fdr: Option<FdrReport>,
}

/// One simulated dataset ready for DCF testing.
struct Replicate {
    matrix: ResponseMatrix,
    groups: GroupAssignment,
}

fn group_counts(group_size: usize, ratio: f64) -> (usize, usize) {
    let total = 2 * group_size;
    let n_pos = ((total as f64) * ratio).round() as usize;
    (total - n_pos, n_pos)
}

fn simulate_replicate(beta1: f64, group_size: usize, cfg: &SimConfig, seed: u64) -> Replicate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deltas: Vec<f64> = (0..cfg.n_courses).map(|_| StandardNormal.sample(&mut rng)).collect();
    let (n_neg, n_pos) = group_counts(group_size, cfg.group_ratio);
    let thetas: Vec<f64> = (0..n_neg + n_pos).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut groups = GroupAssignment::new("G1", "G2");
    for i in 0..n_neg + n_pos {
        groups.insert(&simulated_student_id(i), if i < n_neg { Group::Neg } else { Group::Pos });
    }
    let injections: Vec<DcfInjection<'_>> =
        (0..cfg.n_dcf_courses).map(|course| DcfInjection { course, beta1, groups: &groups }).collect();
    let matrix = simulate_responses(&deltas, &thetas, &injections, derive_seed(seed, &[1]))
        .expect("injection indices are within n_courses")
        .drop_constant_courses();
    Replicate { matrix, groups }
}

/// Tests the injected course of one replication at raw `alpha`. `None`
/// signals a fit failure.
fn detect_injected(beta1: f64, group_size: usize, cfg: &SimConfig, seed: u64) -> Option<bool> {
    let rep = simulate_replicate(beta1, group_size, cfg, seed);
    let target = simulated_course_id(0);
    let course = rep.matrix.course_lookup().get(target.as_str()).copied()?;
    let model = fit(&rep.matrix, &ModelSpec::rasch()).ok()?;
    let traits = estimate_traits(&model, &rep.matrix).ok()?;
    let trait_index = traits.lookup();
    let delta = model.locations[model.course_index(&target)?][0];
    let mut obs = Vec::with_capacity(rep.matrix.n_students());
    for (s, id) in rep.matrix.students().iter().enumerate() {
        if let (Some(value), Some(&t), Some(group)) = (rep.matrix.get(s, course), trait_index.get(id.as_str()), rep.groups.get(id)) {
            obs.push(DcfObservation { response: value, theta: traits.traits[t][0], group });
        }
    }
    let fit = fit_dcf(&target, &obs, delta, MIN_GROUP_SIZE).ok()?;
    let lrt = lrt_pvalue(&fit, cfg.lrt_mode).ok()?;
    Some(lrt.p_value < cfg.alpha)
}

/// Power of the per-course test for one `(β1, group size)` cell.
pub fn run_power_cell(beta1: f64, group_size: usize, cfg: &SimConfig, cell_seed: u64) -> PowerCell {
    let outcomes: Vec<Option<bool>> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| detect_injected(beta1, group_size, cfg, derive_seed(cell_seed, &[r])))
        .collect();
    let detections = outcomes.iter().filter(|o| **o == Some(true)).count();
    let fit_failures = outcomes.iter().filter(|o| o.is_none()).count();
    if fit_failures > 0 {
        log::warn!("β1 = {beta1}, group size {group_size}: {fit_failures} replications failed to fit");
    }
    let (ci_low, ci_high) = wilson_interval(detections as u64, cfg.replications as u64, cfg.confidence);
    PowerCell {
        beta1,
        group_size,
        detections,
        replications: cfg.replications,
        power: if cfg.replications == 0 { 0.0 } else { detections as f64 / cfg.replications as f64 },
        ci_low,
        ci_high,
        fit_failures,
    }
}

/// Every grid cell, β1-major. Cell `(i, j)` uses the stream
/// `derive_seed(master_seed, [i, j])`.
pub fn run_power_study(cfg: &SimConfig) -> Result<PowerCurve, PowerError> {
    cfg.validate()?;
    let mut cells = Vec::with_capacity(cfg.beta1_grid.len() * cfg.group_size_grid.len());
    for (i, &beta1) in cfg.beta1_grid.iter().enumerate() {
        for (j, &size) in cfg.group_size_grid.iter().enumerate() {
            let seed = derive_seed(cfg.master_seed, &[i as u64, j as u64]);
            let cell = run_power_cell(beta1, size, cfg, seed);
            log::info!("β1 = {beta1}, group size {size}: power {:.3}", cell.power);
            cells.push(cell);
        }
    }
    Ok(PowerCurve { cells, lrt_df: cfg.lrt_mode.df(), master_seed: cfg.master_seed, fdr: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrEstimate {
    pub beta1: f64,
    pub n_dcf_courses: usize,
    pub replications: usize,
    /// Mean over replications of `false positives / max(1, discoveries)`.
    pub fdr: f64,
    pub fdr_ci: (f64, f64),
    /// Share of replications with at least one false positive.
    pub familywise: f64,
    pub familywise_ci: (f64, f64),
    /// Mean share of injected courses detected; `None` without injections.
    pub tpr: Option<f64>,
    pub mean_discoveries: f64,
    pub fit_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrReport {
    pub q: f64,
    pub lrt_df: usize,
    pub group_size: usize,
    pub mixed: FdrEstimate,
    pub pure_null: FdrEstimate,
}

struct FdrReplication {
    false_positives: usize,
    true_positives: usize,
    discoveries: usize,
}

fn fdr_replication(beta1: f64, n_dcf: usize, cfg: &SimConfig, seed: u64) -> Option<FdrReplication> {
    let local = SimConfig { n_dcf_courses: n_dcf, ..cfg.clone() };
    let rep = simulate_replicate(beta1, cfg.fdr_group_size, &local, seed);
    let model = fit(&rep.matrix, &ModelSpec::rasch()).ok()?;
    let traits = estimate_traits(&model, &rep.matrix).ok()?;
    let options = DcfOptions { q: cfg.fdr_q, lrt_mode: cfg.lrt_mode, ..DcfOptions::default() };
    let analysis = run_dcf_analysis(&rep.matrix, &rep.groups, &model, &traits, &options).ok()?;
    let injected: Vec<String> = (0..n_dcf).map(simulated_course_id).collect();
    let mut out = FdrReplication { false_positives: 0, true_positives: 0, discoveries: 0 };
    for r in analysis.results.iter().filter(|r| r.significant_fdr) {
        out.discoveries += 1;
        if injected.contains(&r.fit.course_id) {
            out.true_positives += 1;
        } else {
            out.false_positives += 1;
        }
    }
    Some(out)
}

fn mean_ci(values: &[f64], confidence: f64) -> (f64, (f64, f64)) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, (0.0, 1.0));
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
    let half = z * (var / n).sqrt();
    (mean, ((mean - half).max(0.0), (mean + half).min(1.0)))
}

fn fdr_scenario(beta1: f64, n_dcf: usize, cfg: &SimConfig, scenario_seed: u64) -> FdrEstimate {
    let reps: Vec<Option<FdrReplication>> = (0..cfg.fdr_replications as u64)
        .into_par_iter()
        .map(|r| fdr_replication(beta1, n_dcf, cfg, derive_seed(scenario_seed, &[r])))
        .collect();
    let fit_failures = reps.iter().filter(|r| r.is_none()).count();
    let done: Vec<&FdrReplication> = reps.iter().flatten().collect();
    let ratios: Vec<f64> = done.iter().map(|r| r.false_positives as f64 / r.discoveries.max(1) as f64).collect();
    let (fdr, fdr_ci) = mean_ci(&ratios, cfg.confidence);
    let any_fp = done.iter().filter(|r| r.false_positives > 0).count();
    let familywise_ci = wilson_interval(any_fp as u64, done.len() as u64, cfg.confidence);
    let tpr = (n_dcf > 0).then(|| {
        done.iter().map(|r| r.true_positives as f64 / n_dcf as f64).sum::<f64>() / done.len().max(1) as f64
    });
    FdrEstimate {
        beta1,
        n_dcf_courses: n_dcf,
        replications: cfg.fdr_replications,
        fdr,
        fdr_ci,
        familywise: any_fp as f64 / done.len().max(1) as f64,
        familywise_ci,
        tpr,
        mean_discoveries: done.iter().map(|r| r.discoveries as f64).sum::<f64>() / done.len().max(1) as f64,
        fit_failures,
    }
}

/// Runs the multi-course pipeline with BH at `cfg.fdr_q` in two scenarios:
/// `cfg.n_dcf_courses` courses injected with `cfg.fdr_beta1`, and a pure
/// null without injections.
pub fn estimate_null_fdr(cfg: &SimConfig) -> Result<FdrReport, PowerError> {
    cfg.validate()?;
    if cfg.n_dcf_courses == 0 {
        return Err(PowerError::InvalidConfig("the mixed FDR scenario needs n_dcf_courses > 0".into()));
    }
    let mixed = fdr_scenario(cfg.fdr_beta1, cfg.n_dcf_courses, cfg, derive_seed(cfg.master_seed, &[u64::MAX, 1]));
    let pure_null = fdr_scenario(0.0, 0, cfg, derive_seed(cfg.master_seed, &[u64::MAX, 0]));
    Ok(FdrReport { q: cfg.fdr_q, lrt_df: cfg.lrt_mode.df(), group_size: cfg.fdr_group_size, mixed, pure_null })
}

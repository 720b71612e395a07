//! Marginal maximum likelihood by EM over a fixed quadrature grid.
//!
//! Item parameters are handled internally as slopes `a_c` and intercepts
//! `b_c` of the linear predictor `⟨a_c, θ⟩ + b_c`; the public
//! discrimination/location form is derived at the end.
//!
//! For the Rasch family the posterior of a student depends on the data only
//! through the set of courses taken and the raw score, so students sharing
//! both are collapsed into one pattern for the E-step.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};

use super::model::{projected_difficulty, Family, FittedModel, ModelSpec};
use super::quadrature::QuadratureGrid;
use super::IrtError;
use crate::data::ResponseMatrix;
use crate::stats::{log_sigmoid, log_sum_exp, logit, sigmoid};

const HESSIAN_RIDGE: f64 = 1e-6;
const MAX_NEWTON_STEPS: usize = 25;
const MAX_SLOPE: f64 = 12.0;

/// `ln P(x = 0 | θ_q)` and `ln P(x = 1 | θ_q)`, course-major (`c·Q + q`).
pub(crate) struct ItemTables {
    pub n_nodes: usize,
    pub lp0: Vec<f64>,
    pub lp1: Vec<f64>,
}

impl ItemTables {
    pub(crate) fn new(slopes: &[f64], intercepts: &[f64], grid: &QuadratureGrid) -> Self {
        let dims = grid.dims();
        let n_nodes = grid.len();
        let n_courses = intercepts.len();
        let mut lp0 = Vec::with_capacity(n_courses * n_nodes);
        let mut lp1 = Vec::with_capacity(n_courses * n_nodes);
        for c in 0..n_courses {
            let a = &slopes[c * dims..(c + 1) * dims];
            for q in 0..n_nodes {
                let eta = dot(a, grid.node(q)) + intercepts[c];
                lp1.push(log_sigmoid(eta));
                lp0.push(log_sigmoid(-eta));
            }
        }
        ItemTables { n_nodes, lp0, lp1 }
    }

    pub(crate) fn from_model(model: &FittedModel, grid: &QuadratureGrid) -> Self {
        let slopes: Vec<f64> = model.discriminations.iter().flatten().copied().collect();
        let intercepts: Vec<f64> = (0..model.n_courses()).map(|c| model.intercept(c)).collect();
        ItemTables::new(&slopes, &intercepts, grid)
    }

    #[inline]
    pub(crate) fn row(&self, course: usize, value: bool) -> &[f64] {
        let table = if value { &self.lp1 } else { &self.lp0 };
        &table[course * self.n_nodes..(course + 1) * self.n_nodes]
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Students with the same course set and raw score (Rasch only).
struct Pattern {
    raw_score: f64,
    members: f64,
    /// Successes per course, aligned with the owning set's `courses`.
    successes: Vec<f64>,
}

struct CourseSet {
    courses: Vec<usize>,
    patterns: Vec<Pattern>,
}

fn rasch_patterns(matrix: &ResponseMatrix) -> Vec<CourseSet> {
    let mut set_index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut sets: Vec<CourseSet> = Vec::new();
    let mut pattern_index: Vec<HashMap<usize, usize>> = Vec::new();
    for s in 0..matrix.n_students() {
        let row = matrix.student_entries(s);
        if row.is_empty() {
            continue;
        }
        let courses: Vec<usize> = row.iter().map(|e| e.course).collect();
        let raw = row.iter().filter(|e| e.value).count();
        let si = *set_index.entry(courses.clone()).or_insert_with(|| {
            sets.push(CourseSet { courses, patterns: Vec::new() });
            pattern_index.push(HashMap::new());
            sets.len() - 1
        });
        let set = &mut sets[si];
        let pi = *pattern_index[si].entry(raw).or_insert_with(|| {
            set.patterns.push(Pattern { raw_score: raw as f64, members: 0.0, successes: vec![0.0; row.len()] });
            set.patterns.len() - 1
        });
        let p = &mut set.patterns[pi];
        p.members += 1.0;
        for (k, e) in row.iter().enumerate() {
            p.successes[k] += e.value as u8 as f64;
        }
    }
    sets
}

/// Expected counts per course and node: `n_cq` responders and `r_cq`
/// successes, both course-major.
struct ExpectedCounts {
    n: Vec<f64>,
    r: Vec<f64>,
}

enum Layout {
    Rasch(Vec<CourseSet>),
    General,
}

struct Engine<'a> {
    matrix: &'a ResponseMatrix,
    grid: QuadratureGrid,
    layout: Layout,
    n_courses: usize,
}

impl<'a> Engine<'a> {
    fn e_step(&self, slopes: &[f64], intercepts: &[f64], counts: &mut ExpectedCounts) -> f64 {
        let tables = ItemTables::new(slopes, intercepts, &self.grid);
        let nq = self.grid.len();
        counts.n.iter_mut().for_each(|v| *v = 0.0);
        counts.r.iter_mut().for_each(|v| *v = 0.0);
        let mut buf = vec![0.0; nq];
        let mut total = 0.0;
        match &self.layout {
            Layout::Rasch(sets) => {
                let theta: Vec<f64> = (0..nq).map(|q| self.grid.node(q)[0]).collect();
                let mut base = vec![0.0; nq];
                for set in sets {
                    base.copy_from_slice(self.grid.log_weights());
                    for &c in &set.courses {
                        for (b, l) in base.iter_mut().zip(tables.row(c, false)) {
                            *b += l;
                        }
                    }
                    for p in &set.patterns {
                        for q in 0..nq {
                            buf[q] = base[q] + p.raw_score * theta[q];
                        }
                        let lse = log_sum_exp(&buf);
                        let constant: f64 = set.courses.iter().zip(&p.successes).map(|(&c, s)| s * intercepts[c]).sum();
                        total += p.members * lse + constant;
                        for v in buf.iter_mut() {
                            *v = (*v - lse).exp();
                        }
                        for (&c, &succ) in set.courses.iter().zip(&p.successes) {
                            let n_row = &mut counts.n[c * nq..(c + 1) * nq];
                            for (n, w) in n_row.iter_mut().zip(&buf) {
                                *n += p.members * w;
                            }
                            if succ > 0.0 {
                                let r_row = &mut counts.r[c * nq..(c + 1) * nq];
                                for (r, w) in r_row.iter_mut().zip(&buf) {
                                    *r += succ * w;
                                }
                            }
                        }
                    }
                }
            }
            Layout::General => {
                for s in 0..self.matrix.n_students() {
                    let row = self.matrix.student_entries(s);
                    if row.is_empty() {
                        continue;
                    }
                    buf.copy_from_slice(self.grid.log_weights());
                    for e in row {
                        for (b, l) in buf.iter_mut().zip(tables.row(e.course, e.value)) {
                            *b += l;
                        }
                    }
                    let lse = log_sum_exp(&buf);
                    total += lse;
                    for v in buf.iter_mut() {
                        *v = (*v - lse).exp();
                    }
                    for e in row {
                        let c = e.course;
                        for (n, w) in counts.n[c * nq..(c + 1) * nq].iter_mut().zip(&buf) {
                            *n += w;
                        }
                        if e.value {
                            for (r, w) in counts.r[c * nq..(c + 1) * nq].iter_mut().zip(&buf) {
                                *r += w;
                            }
                        }
                    }
                }
            }
        }
        total
    }
}

/// Expected complete-data log-likelihood of one course.
fn course_objective(n: &[f64], r: &[f64], grid: &QuadratureGrid, slopes: &[f64], intercept: f64) -> f64 {
    (0..grid.len())
        .map(|q| {
            let eta = dot(slopes, grid.node(q)) + intercept;
            r[q] * log_sigmoid(eta) + (n[q] - r[q]) * log_sigmoid(-eta)
        })
        .sum()
}

/// Newton-Raphson with step halving on one course's expected log-likelihood.
/// Only slopes flagged in `free` move; the intercept always does.
fn m_step_course(n: &[f64], r: &[f64], grid: &QuadratureGrid, free: &[bool], slopes: &mut [f64], intercept: &mut f64) {
    let free_idx: Vec<usize> = (0..slopes.len()).filter(|&k| free[k]).collect();
    let m = free_idx.len() + 1;
    let mut current = course_objective(n, r, grid, slopes, *intercept);
    let mut z = vec![0.0; m];
    for _ in 0..MAX_NEWTON_STEPS {
        let mut grad = vec![0.0; m];
        let mut info = vec![0.0; m * m];
        for q in 0..grid.len() {
            if n[q] <= 0.0 {
                continue;
            }
            let node = grid.node(q);
            let p = sigmoid(dot(slopes, node) + *intercept);
            let resid = r[q] - n[q] * p;
            let w = n[q] * p * (1.0 - p);
            for (i, &k) in free_idx.iter().enumerate() {
                z[i] = node[k];
            }
            z[m - 1] = 1.0;
            for i in 0..m {
                grad[i] += resid * z[i];
                for j in 0..=i {
                    info[i * m + j] += w * z[i] * z[j];
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                info[j * m + i] = info[i * m + j];
            }
            info[i * m + i] += HESSIAN_RIDGE;
        }
        let Some(step) = solve_small(&mut info, &mut grad, m) else { break };

        let mut t = 1.0;
        let mut accepted = false;
        let mut trial = slopes.to_vec();
        for _ in 0..30 {
            for (i, &k) in free_idx.iter().enumerate() {
                trial[k] = (slopes[k] + t * step[i]).clamp(-MAX_SLOPE, MAX_SLOPE);
            }
            let trial_b = *intercept + t * step[m - 1];
            let value = course_objective(n, r, grid, &trial, trial_b);
            if value >= current {
                slopes.copy_from_slice(&trial);
                *intercept = trial_b;
                current = value;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        let size = step.iter().map(|s| (s * t).abs()).fold(0.0, f64::max);
        if !accepted || size < 1e-9 {
            break;
        }
    }
}

/// Gaussian elimination with partial pivoting for tiny dense systems.
fn solve_small(a: &mut [f64], b: &mut [f64], m: usize) -> Option<Vec<f64>> {
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))?;
        if a[pivot * m + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..m {
                a.swap(col * m + k, pivot * m + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..m {
            let f = a[row * m + col] / a[col * m + col];
            for k in col..m {
                a[row * m + k] -= f * a[col * m + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row * m + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * m + row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Slopes fixed at zero for identification: on the first `n − 1` courses,
/// `a_{c,k} = 0` for `k > c`.
fn free_mask(course: usize, dims: usize) -> Vec<bool> {
    (0..dims).map(|k| course + 1 >= dims || k <= course).collect()
}

fn starting_values(matrix: &ResponseMatrix, spec: &ModelSpec) -> (Vec<f64>, Vec<f64>) {
    let dims = spec.dims;
    let n_courses = matrix.n_courses();
    let counts = matrix.course_counts();
    let mut slopes = vec![0.0; n_courses * dims];
    if dims == 1 {
        slopes.iter_mut().for_each(|a| *a = 1.0);
    } else {
        let loadings = principal_loadings(matrix, dims);
        for c in 0..n_courses {
            let mask = free_mask(c, dims);
            let h: f64 = (0..dims).map(|k| loadings[c * dims + k].powi(2)).sum();
            let scale = if h > 0.81 { 0.9 / h.sqrt() } else { 1.0 };
            let h = h.min(0.81);
            for k in 0..dims {
                if mask[k] {
                    slopes[c * dims + k] = 1.702 * scale * loadings[c * dims + k] / (1.0 - h).sqrt();
                }
            }
        }
        for k in 0..dims {
            let total: f64 = (0..n_courses).map(|c| slopes[c * dims + k]).sum();
            if total < 0.0 {
                (0..n_courses).for_each(|c| slopes[c * dims + k] = -slopes[c * dims + k]);
            }
        }
    }
    let intercepts = (0..n_courses)
        .map(|c| {
            let (n, ones) = counts[c];
            let p = (ones as f64 + 0.5) / (n as f64 + 1.0);
            let a2: f64 = slopes[c * dims..(c + 1) * dims].iter().map(|a| a * a).sum();
            logit(p) * (1.0 + std::f64::consts::PI / 8.0 * a2).sqrt()
        })
        .collect();
    (slopes, intercepts)
}

/// Leading principal-component loadings of the pairwise-complete inter-course
/// correlation matrix, `dims` per course (course-major).
fn principal_loadings(matrix: &ResponseMatrix, dims: usize) -> Vec<f64> {
    let nc = matrix.n_courses();
    // n, Σx, Σy, Σxy per ordered pair (x²=x for binary data)
    let mut acc = vec![[0.0f64; 4]; nc * nc];
    for s in 0..matrix.n_students() {
        let row = matrix.student_entries(s);
        for e1 in row {
            let x = e1.value as u8 as f64;
            for e2 in row {
                let y = e2.value as u8 as f64;
                let a = &mut acc[e1.course * nc + e2.course];
                a[0] += 1.0;
                a[1] += x;
                a[2] += y;
                a[3] += x * y;
            }
        }
    }
    let corr = DMatrix::from_fn(nc, nc, |i, j| {
        if i == j {
            return 1.0;
        }
        let [n, sx, sy, sxy] = acc[i * nc + j];
        if n < 10.0 {
            return 0.0;
        }
        let cov = sxy / n - (sx / n) * (sy / n);
        let vx = sx / n * (1.0 - sx / n);
        let vy = sy / n * (1.0 - sy / n);
        if vx <= 0.0 || vy <= 0.0 {
            0.0
        } else {
            cov / (vx * vy).sqrt()
        }
    });
    let eig = SymmetricEigen::new(corr);
    let mut order: Vec<usize> = (0..nc).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut loadings = vec![0.0; nc * dims];
    for (k, &idx) in order.iter().take(dims).enumerate() {
        let lambda = eig.eigenvalues[idx].max(0.0).sqrt();
        for c in 0..nc {
            loadings[c * dims + k] = eig.eigenvectors[(c, idx)] * lambda;
        }
    }
    loadings
}

/// Fits item parameters by marginal maximum likelihood under a standard
/// normal trait prior.
///
/// Every course must show both responses (run `iterative_filter` first).
/// Non-convergence within `max_em_iterations` is reported through
/// `converged`, not as an error.
pub fn fit(matrix: &ResponseMatrix, spec: &ModelSpec) -> Result<FittedModel, IrtError> {
    spec.validate()?;
    if matrix.n_students() == 0 || matrix.n_courses() == 0 || matrix.is_empty() {
        return Err(IrtError::EmptyMatrix);
    }
    for (c, &(n, ones)) in matrix.course_counts().iter().enumerate() {
        if n == 0 || ones == 0 || ones == n {
            return Err(IrtError::ConstantCourse { course: matrix.courses()[c].clone() });
        }
    }
    let dims = spec.dims;
    let n_courses = matrix.n_courses();
    let engine = Engine {
        matrix,
        grid: QuadratureGrid::new(dims, spec.quadrature_points_per_dim),
        layout: match spec.family {
            Family::OnePl => Layout::Rasch(rasch_patterns(matrix)),
            Family::TwoPl => Layout::General,
        },
        n_courses,
    };
    let nq = engine.grid.len();
    let (mut slopes, mut intercepts) = starting_values(matrix, spec);
    let mut counts = ExpectedCounts { n: vec![0.0; n_courses * nq], r: vec![0.0; n_courses * nq] };

    let mut loglik = engine.e_step(&slopes, &intercepts, &mut counts);
    let mut trace = vec![loglik];
    let mut iterations = 0;
    let mut converged = false;
    let masks: Vec<Vec<bool>> = (0..engine.n_courses)
        .map(|c| match spec.family {
            Family::OnePl => vec![false],
            Family::TwoPl => free_mask(c, dims),
        })
        .collect();
    while iterations < spec.max_em_iterations {
        for c in 0..n_courses {
            let rows = c * nq..(c + 1) * nq;
            m_step_course(
                &counts.n[rows.clone()],
                &counts.r[rows],
                &engine.grid,
                &masks[c],
                &mut slopes[c * dims..(c + 1) * dims],
                &mut intercepts[c],
            );
            let finite = intercepts[c].is_finite() && slopes[c * dims..(c + 1) * dims].iter().all(|a| a.is_finite());
            if !finite {
                return Err(IrtError::NonFinite { course: matrix.courses()[c].clone() });
            }
        }
        iterations += 1;
        let next = engine.e_step(&slopes, &intercepts, &mut counts);
        if !next.is_finite() {
            return Err(IrtError::NonFinite { course: matrix.courses()[0].clone() });
        }
        trace.push(next);
        let rel = (next - loglik).abs() / loglik.abs().max(f64::MIN_POSITIVE);
        loglik = next;
        if rel < spec.loglik_rel_tolerance {
            converged = true;
            break;
        }
    }

    // Reflection is unidentified; orient every dimension to positive total slope.
    if spec.family == Family::TwoPl {
        for k in 0..dims {
            let total: f64 = (0..n_courses).map(|c| slopes[c * dims + k]).sum();
            if total < 0.0 {
                (0..n_courses).for_each(|c| slopes[c * dims + k] = -slopes[c * dims + k]);
            }
        }
    }

    let mut discriminations = Vec::with_capacity(n_courses);
    let mut locations = Vec::with_capacity(n_courses);
    let mut projected = Vec::with_capacity(n_courses);
    for c in 0..n_courses {
        let a = slopes[c * dims..(c + 1) * dims].to_vec();
        let b = intercepts[c];
        let (delta, big_delta) = match spec.family {
            Family::OnePl => (vec![-b], -b),
            Family::TwoPl => {
                let norm2: f64 = a.iter().map(|x| x * x).sum();
                if !(norm2 > 0.0) {
                    return Err(IrtError::NonFinite { course: matrix.courses()[c].clone() });
                }
                let delta: Vec<f64> = a.iter().map(|x| -b * x / norm2).collect();
                let big = projected_difficulty(&a, &delta)?;
                (delta, big)
            }
        };
        discriminations.push(a);
        locations.push(delta);
        projected.push(big_delta);
    }

    Ok(FittedModel {
        spec: *spec,
        course_ids: matrix.courses().to_vec(),
        discriminations,
        locations,
        projected_difficulty: projected,
        marginal_loglik: loglik,
        em_iterations_used: iterations,
        converged,
        loglik_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_handles_pivoting() {
        let mut a = vec![0.0, 2.0, 1.0, 1.0];
        let mut b = vec![4.0, 3.0];
        let x = solve_small(&mut a, &mut b, 2).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn anchor_mask_zeroes_upper_triangle() {
        assert_eq!(free_mask(0, 3), vec![true, false, false]);
        assert_eq!(free_mask(1, 3), vec![true, true, false]);
        assert_eq!(free_mask(2, 3), vec![true, true, true]);
        assert_eq!(free_mask(0, 1), vec![true]);
        let fixed: usize = (0..50).map(|c| free_mask(c, 3).iter().filter(|f| !**f).count()).sum();
        assert_eq!(fixed, 3);
    }

    #[test]
    fn rasch_newton_matches_closed_form_single_node() {
        // One node at θ=0 with 30/100 successes: b = logit(0.3).
        let grid = QuadratureGrid::new(1, 3);
        let n = [0.0, 100.0, 0.0];
        let r = [0.0, 30.0, 0.0];
        let mut slopes = [1.0];
        let mut b = 0.0;
        m_step_course(&n, &r, &grid, &[false], &mut slopes, &mut b);
        assert!((b - logit(0.3)).abs() < 1e-6);
        assert_eq!(slopes[0], 1.0);
    }
}

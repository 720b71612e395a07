//! Acceptance suite. Prints one PASS/FAIL line per check and exits non-zero
//! if any check fails. Tolerances are fixed below.

use std::time::{Duration, Instant};

use dcf_core::data::{iterative_filter, FilterConfig, Group, Response, ResponseMatrix};
use dcf_core::dcf::{
    bh_adjust, effect_size_from_logits, effect_size_probability, fit_dcf, lrt_pvalue, DcfObservation, LrtMode,
    MIN_GROUP_SIZE,
};
use dcf_core::diagnostics::{q3_statistics, select_model};
use dcf_core::irt::{
    estimate_traits, fit, simulate_from_parameters, simulate_responses, FittedModel, ModelSpec,
};
use dcf_core::power::{derive_seed, estimate_null_fdr, run_power_cell, run_power_study, SimConfig};
use dcf_core::report::{to_csv_string, write_power_csv};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

// criterion 1
const POWER_REPLICATIONS: usize = 1000;
const POWER_BOUNDARY: f64 = 0.8;
const POWER_MC_MARGIN: f64 = 0.03;
const POWER_FULL_BUDGET: Duration = Duration::from_secs(60 * 60);
const SMOKE_REPLICATIONS: usize = 300;
const SMOKE_BUDGET: Duration = Duration::from_secs(5 * 60);
// criterion 2
const EFFECT_ANALYTIC_TOL: f64 = 1e-6;
const EFFECT_PUBLISHED_TOL: f64 = 5e-5;
// criterion 3
const FDR_LIMIT: f64 = 0.07;
const TPR_FLOOR: f64 = 0.9;
const FDR_BUDGET: Duration = Duration::from_secs(10 * 60);
// criterion 4
const RECOVERY_R: f64 = 0.95;
const RECOVERY_RMSE: f64 = 0.15;
const EAP_TOL: f64 = 1e-3;
const RECOVERY_BUDGET: Duration = Duration::from_secs(60);
// criterion 5
const FUZZED_COURSES: usize = 1000;
const KS_COURSES: usize = 1000;
const KS_LEVEL: f64 = 0.01;
// criterion 6
const DIAG_REPLICATIONS: usize = 50;
const SELECT_1PL_RATE: f64 = 0.8;
const NOT_ADMISSIBLE_RATE: f64 = 0.5;
const Q3_RATE: f64 = 0.95;
// criterion 7
const PROPERTY_CASES: u32 = 64;
const INVARIANCE_BUDGET: Duration = Duration::from_secs(120);

struct Report {
    failures: Vec<String>,
}

impl Report {
    fn check(&mut self, criterion: u32, name: &str, pass: bool, detail: String) {
        println!("{} [{criterion}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures.push(format!("[{criterion}] {name}"));
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn normals(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn hand_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// One course from `σ(θ − δ + β1·g)` with the traits known.
fn draw_course(n_neg: usize, n_pos: usize, beta1: f64, delta: f64, rng: &mut ChaCha8Rng) -> Vec<DcfObservation> {
    (0..n_neg + n_pos)
        .map(|i| {
            let group = if i < n_neg { Group::Neg } else { Group::Pos };
            let theta: f64 = StandardNormal.sample(rng);
            let p = sigmoid(theta - delta + beta1 * group.sign());
            DcfObservation { response: rng.random::<f64>() < p, theta, group }
        })
        .collect()
}

fn criterion_power(r: &mut Report) {
    let cfg = SimConfig { replications: POWER_REPLICATIONS, ..SimConfig::default() };
    let claims: [(f64, usize, bool); 3] = [(0.25, 400, true), (0.3, 300, true), (0.1, 300, false)];
    let start = Instant::now();
    for (i, &(beta1, size, above)) in claims.iter().enumerate() {
        let cell = run_power_cell(beta1, size, &cfg, derive_seed(cfg.master_seed, &[1000, i as u64]));
        // the margin is slack for Monte Carlo error around the boundary
        let (pass, raw, rule) = if above {
            (
                cell.power > POWER_BOUNDARY - POWER_MC_MARGIN,
                cell.power > POWER_BOUNDARY,
                format!("power > {POWER_BOUNDARY} - {POWER_MC_MARGIN}"),
            )
        } else {
            (
                cell.power <= POWER_BOUNDARY + POWER_MC_MARGIN,
                cell.power <= POWER_BOUNDARY,
                format!("power <= {POWER_BOUNDARY} + {POWER_MC_MARGIN}"),
            )
        };
        r.check(
            1,
            &format!("power beta1={beta1} group size {size}"),
            pass,
            format!(
                "power {:.3} [{:.3}, {:.3}] over {} replications, df {}; needs {rule}; boundary inequality without margin holds: {raw}",
                cell.power,
                cell.ci_low,
                cell.ci_high,
                cell.replications,
                cfg.lrt_mode.df()
            ),
        );
    }
    let per_cell = start.elapsed() / claims.len() as u32;

    let smoke = SimConfig { replications: SMOKE_REPLICATIONS, ..SimConfig::default() };
    let n_cells = smoke.beta1_grid.len() * smoke.group_size_grid.len();
    let start = Instant::now();
    let curve = run_power_study(&smoke).expect("default grid is valid");
    let smoke_time = start.elapsed();
    r.check(
        1,
        "smoke grid runtime",
        smoke_time <= SMOKE_BUDGET && curve.cells.len() == n_cells,
        format!("{n_cells} cells x {SMOKE_REPLICATIONS} replications in {:.1}s (budget {}s)", smoke_time.as_secs_f64(), SMOKE_BUDGET.as_secs()),
    );
    let projected = smoke_time.mul_f64(POWER_REPLICATIONS as f64 / SMOKE_REPLICATIONS as f64);
    r.check(
        1,
        "full grid runtime",
        projected <= POWER_FULL_BUDGET,
        format!(
            "projected {:.0}s for {n_cells} cells x {POWER_REPLICATIONS} replications (measured {:.1}s per 1000-replication cell; budget {}s)",
            projected.as_secs_f64(),
            per_cell.as_secs_f64(),
            POWER_FULL_BUDGET.as_secs()
        ),
    );
}

fn criterion_effect_size(r: &mut Report) {
    for (beta1, published) in [(0.25, 0.1244), (0.3, 0.1489)] {
        let delta = 0.7;
        let e = effect_size_from_logits(0.0, beta1, delta, delta);
        // σ(−b) − σ(b) = −tanh(b/2)
        let analytic = -(beta1 / 2.0f64).tanh();
        let pass = (e - analytic).abs() <= EFFECT_ANALYTIC_TOL && (e.abs() - published).abs() <= EFFECT_PUBLISHED_TOL;
        r.check(
            2,
            &format!("effect size beta1={beta1}"),
            pass,
            format!(
                "{e:.7} (G1 minus G2); |effect| vs {published}: diff {:.1e} (tol {EFFECT_PUBLISHED_TOL:.0e}); vs -tanh(b/2): diff {:.1e} (tol {EFFECT_ANALYTIC_TOL:.0e})",
                (e.abs() - published).abs(),
                (e - analytic).abs()
            ),
        );
    }
}

fn criterion_fdr(r: &mut Report) {
    let cfg = SimConfig { fdr_q: 0.05, fdr_beta1: 0.4, fdr_group_size: 500, fdr_replications: 200, ..SimConfig::default() };
    let start = Instant::now();
    let report = estimate_null_fdr(&cfg).expect("valid FDR config");
    let elapsed = start.elapsed();
    let null = &report.pure_null;
    r.check(
        3,
        "pure-null FDR",
        null.fdr <= FDR_LIMIT,
        format!(
            "FDR {:.3} [{:.3}, {:.3}] over {} replications ({} fit failures); needs <= {FDR_LIMIT}",
            null.fdr, null.fdr_ci.0, null.fdr_ci.1, null.replications, null.fit_failures
        ),
    );
    let mixed = &report.mixed;
    let tpr = mixed.tpr.unwrap_or(0.0);
    r.check(
        3,
        "mixed FDR and TPR",
        mixed.fdr <= FDR_LIMIT && tpr >= TPR_FLOOR,
        format!("FDR {:.3}, TPR {tpr:.3}; needs FDR <= {FDR_LIMIT} and TPR >= {TPR_FLOOR}", mixed.fdr),
    );
    r.check(
        3,
        "FDR runtime",
        elapsed <= FDR_BUDGET,
        format!("{:.1}s (budget {}s)", elapsed.as_secs_f64(), FDR_BUDGET.as_secs()),
    );
}

/// Posterior mean on a 201-point trapezoid grid over [−4, 4].
fn eap_oracle(deltas: &[f64], responses: &[(usize, bool)]) -> f64 {
    let n = 201;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let x = -4.0 + 8.0 * i as f64 / (n - 1) as f64;
        let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut w = end * (-0.5 * x * x).exp();
        for &(c, v) in responses {
            let p = sigmoid(x - deltas[c]);
            w *= if v { p } else { 1.0 - p };
        }
        num += x * w;
        den += w;
    }
    num / den
}

fn criterion_recovery(r: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let truth = normals(50, &mut rng);
    let thetas = normals(1000, &mut rng);
    let m = simulate_responses(&truth, &thetas, &[], 405).unwrap();
    let model = fit(&m, &ModelSpec::rasch()).unwrap();
    let est: Vec<f64> = model.locations.iter().map(|l| l[0]).collect();
    let corr = hand_pearson(&est, &truth);
    let rmse = (est.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 50.0).sqrt();
    let elapsed = start.elapsed();
    r.check(
        4,
        "Rasch difficulty recovery 1000x50",
        corr >= RECOVERY_R && rmse <= RECOVERY_RMSE && elapsed <= RECOVERY_BUDGET,
        format!(
            "r {corr:.4} (>= {RECOVERY_R}), RMSE {rmse:.4} (<= {RECOVERY_RMSE}), {} EM iterations, {:.2}s",
            model.em_iterations_used,
            elapsed.as_secs_f64()
        ),
    );

    let deltas = [-1.0, -0.3, 0.4, 1.2];
    let courses: Vec<String> = (0..4).map(|c| format!("c{c}")).collect();
    let toy_model = FittedModel::rasch(courses.clone(), &deltas);
    let rows: [&[(usize, bool)]; 5] = [
        &[(0, true), (1, true), (2, false), (3, false)],
        &[(0, true), (1, true), (2, true), (3, true)],
        &[(0, false), (1, false), (2, false), (3, false)],
        &[(0, true), (1, false), (2, true), (3, false)],
        &[(0, false), (1, false), (2, true), (3, true)],
    ];
    let entries = rows
        .iter()
        .enumerate()
        .flat_map(|(s, row)| row.iter().map(move |&(c, v)| Response { student: s, course: c, value: v, term: 0 }))
        .collect();
    let toy = ResponseMatrix::new((0..5).map(|s| format!("s{s}")).collect(), courses, entries).unwrap();
    let traits = estimate_traits(&toy_model, &toy).unwrap();
    let worst = (0..5).map(|s| (traits.traits[s][0] - eap_oracle(&deltas, rows[s])).abs()).fold(0.0, f64::max);
    r.check(4, "EAP on 5x4 toy vs refined grid", worst <= EAP_TOL, format!("max |diff| {worst:.2e} (tol {EAP_TOL:.0e})"));
}

/// Kolmogorov-Smirnov statistic of a sample against U(0, 1), with the
/// asymptotic p-value.
fn ks_uniform(mut p: Vec<f64>) -> (f64, f64) {
    p.sort_by(f64::total_cmp);
    let n = p.len() as f64;
    let d = p
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let q: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            2.0 * (-1.0f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (d, q.clamp(0.0, 1.0))
}

fn criterion_nested_and_bh(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut evaluated, mut not_converged, mut negative, mut min_stat) = (0, 0, 0, f64::INFINITY);
    for _ in 0..FUZZED_COURSES {
        let n_neg = rng.random_range(MIN_GROUP_SIZE..200);
        let n_pos = rng.random_range(MIN_GROUP_SIZE..200);
        let beta1 = rng.random_range(-3.0..3.0);
        let delta = rng.random_range(-3.5..3.5);
        let obs = draw_course(n_neg, n_pos, beta1, delta, &mut rng);
        let Ok(f) = fit_dcf("c", &obs, delta, MIN_GROUP_SIZE) else {
            not_converged += 1;
            continue;
        };
        for mode in [LrtMode::Joint, LrtMode::EffectOnly] {
            match lrt_pvalue(&f, mode) {
                Ok(t) => {
                    evaluated += 1;
                    min_stat = min_stat.min(t.statistic);
                    if t.statistic < 0.0 {
                        negative += 1;
                    }
                }
                Err(dcf_core::dcf::DcfError::NotConverged { .. }) => not_converged += 1,
                Err(_) => negative += 1,
            }
        }
    }
    r.check(
        5,
        "LRT statistic >= 0 on fuzzed courses",
        negative == 0,
        format!(
            "{FUZZED_COURSES} courses, {evaluated} tests evaluated, {negative} negative, {not_converged} unconverged, min {min_stat:.3e}"
        ),
    );

    let bh = bh_adjust(&[0.01, 0.02, 0.04, 0.9], 0.05);
    r.check(
        5,
        "BH hand example",
        bh.flags == [true, true, false, false],
        format!("flags {:?}", bh.flags),
    );

    for mode in [LrtMode::EffectOnly, LrtMode::Joint] {
        let mut rng = ChaCha8Rng::seed_from_u64(606 + mode.df() as u64);
        let ps: Vec<f64> = (0..KS_COURSES)
            .map(|_| {
                let delta = rng.random_range(-1.5..1.5);
                let obs = draw_course(150, 150, 0.0, delta, &mut rng);
                let f = fit_dcf("c", &obs, delta, MIN_GROUP_SIZE).unwrap();
                lrt_pvalue(&f, mode).unwrap().p_value
            })
            .collect();
        let (d, p) = ks_uniform(ps);
        r.check(
            5,
            &format!("null p-values uniform, df {}", mode.df()),
            p >= KS_LEVEL,
            format!("KS D {d:.4}, p {p:.3} over {KS_COURSES} null courses; needs p >= {KS_LEVEL}"),
        );
    }
}

fn rasch_data(n_students: usize, n_courses: usize, seed: u64) -> ResponseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deltas = normals(n_courses, &mut rng);
    let thetas = normals(n_students, &mut rng);
    simulate_responses(&deltas, &thetas, &[], seed ^ 0x5eed).unwrap()
}

fn two_dim_data(n_students: usize, n_courses: usize, seed: u64) -> ResponseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphas: Vec<Vec<f64>> =
        (0..n_courses).map(|c| if c % 2 == 0 { vec![1.8, 0.0] } else { vec![0.0, 1.8] }).collect();
    let locations: Vec<Vec<f64>> = normals(n_courses, &mut rng).into_iter().map(|d| vec![d, d]).collect();
    let traits: Vec<Vec<f64>> = (0..n_students).map(|_| normals(2, &mut rng)).collect();
    simulate_from_parameters(&alphas, &locations, &traits, seed ^ 0x5eed).unwrap()
}

fn with_cloned_course(m: &ResponseMatrix) -> ResponseMatrix {
    let mut courses = m.courses().to_vec();
    courses.push("zz_clone".into());
    let idx = courses.len() - 1;
    let mut entries = m.entries().to_vec();
    entries.extend(m.entries().iter().filter(|e| e.course == 0).map(|e| Response { course: idx, ..*e }));
    ResponseMatrix::new(m.students().to_vec(), courses, entries).unwrap()
}

fn criterion_diagnostics(r: &mut Report) {
    let (n_students, n_courses) = (800, 20);
    let (mut one_pl, mut q3_pass, mut clone_flagged, mut not_admissible) = (0, 0, 0, 0);
    let start = Instant::now();
    for rep in 0..DIAG_REPLICATIONS as u64 {
        let m = rasch_data(n_students, n_courses, 1000 + rep);
        let sel = select_model(&m).unwrap();
        if sel.best_candidate().label == "1PL" {
            one_pl += 1;
        }
        let model = sel.model_for(&ModelSpec::rasch()).unwrap();
        let traits = estimate_traits(model, &m).unwrap();
        if q3_statistics(model, &traits, &m).unwrap().pass {
            q3_pass += 1;
        }
        let cloned = with_cloned_course(&m);
        let model = fit(&cloned, &ModelSpec::rasch()).unwrap();
        let traits = estimate_traits(&model, &cloned).unwrap();
        let q3 = q3_statistics(&model, &traits, &cloned).unwrap();
        if q3.flagged_pairs.iter().any(|p| p.course_a == "c000" && p.course_b == "zz_clone") {
            clone_flagged += 1;
        }

        let m2 = two_dim_data(n_students, n_courses, 2000 + rep);
        if !select_model(&m2).unwrap().rasch_admissible {
            not_admissible += 1;
        }
    }
    let n = DIAG_REPLICATIONS as f64;
    let rate = |k: usize| k as f64 / n;
    let size = format!("{DIAG_REPLICATIONS} replications of {n_students}x{n_courses}");
    r.check(
        6,
        "1PL data selects 1PL",
        rate(one_pl) >= SELECT_1PL_RATE,
        format!("{one_pl}/{DIAG_REPLICATIONS} ({size}); needs >= {SELECT_1PL_RATE}"),
    );
    r.check(
        6,
        "2-dim data not Rasch admissible",
        rate(not_admissible) > NOT_ADMISSIBLE_RATE,
        format!("{not_admissible}/{DIAG_REPLICATIONS}; needs a majority"),
    );
    r.check(
        6,
        "Q3 passes independent data",
        rate(q3_pass) >= Q3_RATE,
        format!("{q3_pass}/{DIAG_REPLICATIONS}; needs >= {Q3_RATE}"),
    );
    r.check(
        6,
        "Q3 flags a cloned course",
        rate(clone_flagged) >= Q3_RATE,
        format!("{clone_flagged}/{DIAG_REPLICATIONS}; needs >= {Q3_RATE} ({:.1}s total)", start.elapsed().as_secs_f64()),
    );
}

fn property(r: &mut Report, name: &str, result: Result<(), String>, cases: u32) {
    let detail = match &result {
        Ok(()) => format!("{cases} cases"),
        Err(e) => e.clone(),
    };
    r.check(7, name, result.is_ok(), detail);
}

fn run_prop<S, F>(cases: u32, strategy: S, test: F) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let mut runner = TestRunner::new(PropConfig { cases, failure_persistence: None, ..PropConfig::default() });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn sparse_matrix() -> impl Strategy<Value = ResponseMatrix> {
    (2usize..40, 2usize..15, any::<u64>(), 0.2f64..1.0).prop_map(|(ns, nc, seed, density)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        for s in 0..ns {
            for c in 0..nc {
                if rng.random::<f64>() < density {
                    entries.push(Response { student: s, course: c, value: rng.random(), term: c as i64 });
                }
            }
        }
        ResponseMatrix::new(
            (0..ns).map(|s| format!("s{s:02}")).collect(),
            (0..nc).map(|c| format!("c{c:02}")).collect(),
            entries,
        )
        .unwrap()
    })
}

fn criterion_invariance(r: &mut Report) {
    let start = Instant::now();
    let res = run_prop(
        PROPERTY_CASES,
        (any::<u64>(), -0.8f64..0.8, -1.5f64..1.5, 15usize..120),
        |(seed, beta1, delta, n)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let obs = draw_course(n, n, beta1, delta, &mut rng);
            let swapped: Vec<DcfObservation> =
                obs.iter().map(|o| DcfObservation { group: o.group.flipped(), ..*o }).collect();
            let a = fit_dcf("c", &obs, delta, MIN_GROUP_SIZE).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let b = fit_dcf("c", &swapped, delta, MIN_GROUP_SIZE).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert!((a.beta1 + b.beta1).abs() <= 1e-8, "beta1 {} vs {}", a.beta1, b.beta1);
            let (ea, eb) = (effect_size_probability(&a, 0.2, delta), effect_size_probability(&b, 0.2, delta));
            prop_assert!((ea + eb).abs() <= 1e-8, "effect {ea} vs {eb}");
            Ok(())
        },
    );
    property(r, "encoding antisymmetry of beta1 and effect size (1e-8)", res, PROPERTY_CASES);

    let res = run_prop(PROPERTY_CASES, (sparse_matrix(), 1usize..4, 1usize..6, any::<bool>()), |(m, g, s, v)| {
        let cfg = FilterConfig { min_grades_per_student: g, min_students_per_course: s, require_variance: v };
        if let Ok(once) = iterative_filter(&m, &cfg) {
            let twice = iterative_filter(&once.matrix, &cfg).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(&twice.matrix, &once.matrix);
        }
        Ok(())
    });
    property(r, "iterative_filter idempotence", res, PROPERTY_CASES);

    let res = run_prop(PROPERTY_CASES, (any::<u64>(), 1usize..60, 1usize..12), |(seed, ns, nc)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, t) = (normals(nc, &mut rng), normals(ns, &mut rng));
        let a = simulate_responses(&d, &t, &[], seed).unwrap();
        let b = simulate_responses(&d, &t, &[], seed).unwrap();
        prop_assert_eq!(a, b);
        Ok(())
    });
    property(r, "simulate_responses seed determinism", res, PROPERTY_CASES);

    let res = run_prop(8, any::<u64>(), |seed| {
        let cfg = SimConfig {
            n_courses: 10,
            beta1_grid: vec![0.0, 0.4],
            group_size_grid: vec![60],
            replications: 3,
            master_seed: seed,
            ..SimConfig::default()
        };
        let csv = |c: &SimConfig| to_csv_string(|w| write_power_csv(&run_power_study(c).unwrap(), w)).unwrap();
        prop_assert_eq!(csv(&cfg), csv(&cfg));
        Ok(())
    });
    property(r, "run_power_study byte-identical under a seed", res, 8);

    let res = run_prop(16, (any::<u64>(), 100usize..300, 3usize..10), |(seed, ns, nc)| {
        let m = rasch_data(ns, nc, seed);
        let Ok(model) = fit(&m, &ModelSpec::rasch()) else { return Ok(()) };
        for c in 0..nc {
            prop_assert_eq!(model.projected_difficulty[c], model.locations[c][0]);
        }
        Ok(())
    });
    property(r, "projected difficulty equals location under 1PL (exact)", res, 16);

    let res = run_prop(PROPERTY_CASES * 4, (proptest::collection::vec(0.0f64..1.0, 1..80), 0.0f64..0.5), |(ps, q)| {
        let out = bh_adjust(&ps, q);
        for (i, pi) in ps.iter().enumerate() {
            if out.flags[i] {
                for (j, pj) in ps.iter().enumerate() {
                    prop_assert!(pj > pi || out.flags[j], "p {pj} unflagged below flagged {pi}");
                }
            }
        }
        Ok(())
    });
    property(r, "BH flag monotonicity", res, PROPERTY_CASES * 4);

    let elapsed = start.elapsed();
    r.check(
        7,
        "invariance suite runtime",
        elapsed <= INVARIANCE_BUDGET,
        format!("{:.1}s (budget {}s)", elapsed.as_secs_f64(), INVARIANCE_BUDGET.as_secs()),
    );
}

fn main() {
    // `cargo test -- --list` and similar harness queries
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut r = Report { failures: Vec::new() };
    let start = Instant::now();
    criterion_effect_size(&mut r);
    criterion_nested_and_bh(&mut r);
    criterion_recovery(&mut r);
    criterion_invariance(&mut r);
    criterion_diagnostics(&mut r);
    criterion_fdr(&mut r);
    criterion_power(&mut r);
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if r.failures.is_empty() {
        println!("all acceptance checks passed");
    } else {
        println!("{} acceptance check(s) failed: {}", r.failures.len(), r.failures.join(", "));
        std::process::exit(1);
    }
}

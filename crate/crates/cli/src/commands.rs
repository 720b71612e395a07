//! Subcommand implementations.

use dcf_core::data::{achievement_rates, build_groups, compute_gpa, write_rejects};
use dcf_core::dcf::{run_dcf_analysis, DcfAnalysis, DcfError, DcfOptions};
use dcf_core::diagnostics::{run_diagnostics_with, select_model_with, DiagnosticsError, SelectionReport};
use dcf_core::irt::{estimate_traits, fit, FittedModel, ModelSpec};
use dcf_core::power::{estimate_null_fdr, run_power_study};
use dcf_core::report::{
    to_csv_string, write_ar_csv, write_ar_plot_csv, write_dcf_csv, write_dcf_plot_csv, write_model_csv,
    write_power_csv, write_traits_csv,
};

use crate::config::{Grouping, RunConfig};
use crate::error::CliError;
use crate::output::{unix_now, Artifacts, Manifest, SelectionSummary};
use crate::pipeline::{load, Loaded};

fn manifest(cfg: &RunConfig, command: &str, started: u64) -> Manifest {
    Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config: cfg.echo.clone(),
        seed: cfg.seed,
        lrt_df: cfg.lrt_mode.df(),
        override_rasch_guard: cfg.override_rasch_guard,
        resolved_ag: None,
        dataset: None,
        model_selection: None,
        guard_refusal: None,
        started_unix: started,
        finished_unix: started,
        artifacts: Vec::new(),
    }
}

fn with_dataset(mut m: Manifest, loaded: &Loaded) -> Manifest {
    m.resolved_ag = Some(loaded.dichotomized.achievement_grade.to_string());
    m.dataset = Some(loaded.sizes.clone());
    m
}

fn csv_bytes<F>(write: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), dcf_core::report::ReportError>,
{
    Ok(to_csv_string(write)?.into_bytes())
}

fn diagnostics_error(e: DiagnosticsError) -> CliError {
    match e {
        DiagnosticsError::NoCandidates | DiagnosticsError::TooFewCourses { .. } => CliError::Input(e.to_string()),
        other => CliError::Internal(other.to_string()),
    }
}

fn fit_stage(
    cfg: &RunConfig,
    loaded: &Loaded,
    selection: Option<&SelectionReport>,
    arts: &mut Artifacts,
) -> Result<(), CliError> {
    let fitted;
    let model: &FittedModel = match selection.and_then(|s| s.model_for(&cfg.model)) {
        Some(m) => m,
        None => {
            fitted = fit(&loaded.matrix, &cfg.model).map_err(|e| CliError::Internal(e.to_string()))?;
            &fitted
        }
    };
    if !model.converged {
        log::warn!("{} fit stopped at the iteration cap", model.spec);
    }
    let traits = estimate_traits(model, &loaded.matrix).map_err(|e| CliError::Internal(e.to_string()))?;
    arts.add("model.csv", csv_bytes(|b| write_model_csv(model, b))?);
    arts.add("traits.csv", csv_bytes(|b| write_traits_csv(&traits, b))?);
    let mut rejects = Vec::new();
    write_rejects(&loaded.parsed.rejects, &mut rejects).map_err(|e| CliError::Internal(e.to_string()))?;
    arts.add("rejects.csv", rejects);
    Ok(())
}

fn guard_error(e: DcfError) -> CliError {
    match e {
        DcfError::NotAdmissible | DcfError::NotRasch { .. } => CliError::Guard(e.to_string()),
        other => CliError::Internal(other.to_string()),
    }
}

fn dcf_stage(
    cfg: &RunConfig,
    grouping: &Grouping,
    loaded: &Loaded,
    selection: &SelectionReport,
    arts: &mut Artifacts,
) -> Result<DcfAnalysis, CliError> {
    let options = DcfOptions {
        q: cfg.fdr_q,
        lrt_mode: cfg.lrt_mode,
        theta_bar: cfg.theta_bar,
        rasch_admissible: selection.rasch_admissible,
        override_rasch_guard: cfg.override_rasch_guard,
        ..DcfOptions::default()
    };
    if !options.rasch_admissible && !options.override_rasch_guard {
        return Err(guard_error(DcfError::NotAdmissible));
    }
    if !options.rasch_admissible {
        log::warn!("Rasch guard overridden; best BIC model is {}", selection.best_candidate().label);
    }
    let model = selection
        .model_for(&ModelSpec::rasch())
        .ok_or_else(|| CliError::Internal("the 1PL fit failed; DCF analysis needs it".into()))?;
    let traits = estimate_traits(model, &loaded.matrix).map_err(|e| CliError::Internal(e.to_string()))?;
    let groups = build_groups(&loaded.parsed.records, &grouping.attribute, &grouping.neg_value, &grouping.pos_value)
        .map_err(|e| CliError::Input(e.to_string()))?;
    if !groups.excluded.is_empty() {
        log::info!("{} students carry neither group value and are left out", groups.excluded.len());
    }
    let analysis =
        run_dcf_analysis(&loaded.matrix, &groups.assignment, model, &traits, &options).map_err(guard_error)?;
    arts.add("dcf.csv", csv_bytes(|b| write_dcf_csv(&analysis, b))?);
    arts.add("ar.csv", csv_bytes(|b| write_ar_csv(&analysis, b))?);
    arts.add("plot_dcf_effects.csv", csv_bytes(|b| write_dcf_plot_csv(&analysis, b))?);
    arts.add("plot_ar_gaps.csv", csv_bytes(|b| write_ar_plot_csv(&analysis, b))?);
    Ok(analysis)
}

fn print_dcf_summary(cfg: &RunConfig, grouping: &Grouping, analysis: &DcfAnalysis) {
    let (neg_easier, pos_easier) = analysis.significant_by_direction();
    let sig = neg_easier + pos_easier;
    println!(
        "{}: DCF significant at q = {} in {sig}/{} tested courses ({} skipped)",
        cfg.dataset,
        cfg.fdr_q,
        analysis.results.len(),
        analysis.skipped.len()
    );
    println!(
        "  easier for {}={}: ({neg_easier}/{sig})   easier for {}={}: ({pos_easier}/{sig})",
        grouping.attribute, grouping.neg_value, grouping.attribute, grouping.pos_value
    );
    println!("  AR gap significant: {}/{}", analysis.significant_ar_count(), analysis.ar_results.len());
    for r in analysis.results.iter().filter(|r| r.significant_fdr) {
        let label = r.case_label.map_or_else(|| "-".to_string(), |c| c.to_string());
        println!(
            "  {:<16} beta1 {:+.3}  effect {:+.4}  p {:.3e}  case {label}",
            r.fit.course_id, r.fit.beta1, r.effect_size_prob, r.p_value
        );
    }
}

fn require_grouping(cfg: &RunConfig) -> Result<&Grouping, CliError> {
    cfg.grouping
        .as_ref()
        .ok_or_else(|| CliError::Config("dcf needs --group-attr, --group-neg and --group-pos".into()))
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<(), CliError> {
    let started = unix_now();
    let loaded = load(cfg)?;
    let mut arts = Artifacts::default();
    fit_stage(cfg, &loaded, None, &mut arts)?;
    println!("fitted {} on {} students x {} courses", cfg.model, loaded.matrix.n_students(), loaded.matrix.n_courses());
    arts.commit(&cfg.out, with_dataset(manifest(cfg, "fit", started), &loaded))
}

pub fn cmd_diagnose(cfg: &RunConfig) -> Result<(), CliError> {
    let started = unix_now();
    let loaded = load(cfg)?;
    let gpa = compute_gpa(&loaded.parsed.records);
    let report = run_diagnostics_with(&cfg.dataset, &loaded.matrix, &gpa, cfg.seed, &cfg.candidates())
        .map_err(diagnostics_error)?;
    let mut arts = Artifacts::default();
    arts.add_json("diagnostics.json", &report)?;
    let row = &report.row;
    println!(
        "{}: best BIC model {}, Q3 {}, Rasch admissible: {}",
        row.dataset,
        row.best_bic_model,
        if row.q3_pass { "pass" } else { "fail" },
        row.rasch_admissible
    );
    let mut m = with_dataset(manifest(cfg, "diagnose", started), &loaded);
    m.model_selection = Some(SelectionSummary::from_report(&report.selection));
    arts.commit(&cfg.out, m)
}

pub fn cmd_dcf(cfg: &RunConfig) -> Result<(), CliError> {
    let started = unix_now();
    let grouping = require_grouping(cfg)?;
    let loaded = load(cfg)?;
    let selection = select_model_with(&loaded.matrix, &cfg.candidates()).map_err(diagnostics_error)?;
    let mut m = with_dataset(manifest(cfg, "dcf", started), &loaded);
    m.model_selection = Some(SelectionSummary::from_report(&selection));
    let mut arts = Artifacts::default();
    match dcf_stage(cfg, grouping, &loaded, &selection, &mut arts) {
        Ok(analysis) => {
            print_dcf_summary(cfg, grouping, &analysis);
            arts.commit(&cfg.out, m)
        }
        Err(e @ CliError::Guard(_)) => {
            m.guard_refusal = Some(e.to_string());
            arts.commit(&cfg.out, m)?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn power_stage(cfg: &RunConfig, arts: &mut Artifacts) -> Result<(), CliError> {
    let bad = |e: dcf_core::power::PowerError| CliError::Config(e.to_string());
    cfg.sim.validate().map_err(bad)?;
    if cfg.run_fdr && cfg.sim.n_dcf_courses == 0 {
        return Err(CliError::Config("the FDR study needs n-dcf-courses > 0 (or set fdr = false)".into()));
    }
    let curve = run_power_study(&cfg.sim).map_err(bad)?;
    arts.add("power_curve.csv", csv_bytes(|b| write_power_csv(&curve, b))?);
    for c in &curve.cells {
        println!(
            "beta1 {:<5} group size {:<5} power {:.3} [{:.3}, {:.3}]",
            c.beta1, c.group_size, c.power, c.ci_low, c.ci_high
        );
    }
    if cfg.run_fdr {
        let fdr = estimate_null_fdr(&cfg.sim).map_err(bad)?;
        println!(
            "FDR at q = {}: mixed {:.3} (TPR {:.3}), pure null {:.3}",
            fdr.q,
            fdr.mixed.fdr,
            fdr.mixed.tpr.unwrap_or(f64::NAN),
            fdr.pure_null.fdr
        );
        arts.add_json("fdr.json", &fdr)?;
    }
    Ok(())
}

pub fn cmd_power(cfg: &RunConfig) -> Result<(), CliError> {
    let started = unix_now();
    let mut arts = Artifacts::default();
    power_stage(cfg, &mut arts)?;
    arts.commit(&cfg.out, manifest(cfg, "power", started))
}

/// Fit, diagnostics and, when a grouping is configured, DCF in one
/// directory. A guard refusal still writes the other artifacts.
pub fn cmd_report(cfg: &RunConfig) -> Result<(), CliError> {
    let started = unix_now();
    let loaded = load(cfg)?;
    let gpa = compute_gpa(&loaded.parsed.records);
    let mut candidates = cfg.candidates();
    if !candidates.contains(&cfg.model) {
        candidates.push(cfg.model);
    }
    let diagnostics = run_diagnostics_with(&cfg.dataset, &loaded.matrix, &gpa, cfg.seed, &candidates)
        .map_err(diagnostics_error)?;
    let mut arts = Artifacts::default();
    fit_stage(cfg, &loaded, Some(&diagnostics.selection), &mut arts)?;
    arts.add_json("diagnostics.json", &diagnostics)?;
    arts.add_json("achievement_rates.json", &achievement_rates(&loaded.matrix, None))?;

    let mut m = with_dataset(manifest(cfg, "report", started), &loaded);
    m.model_selection = Some(SelectionSummary::from_report(&diagnostics.selection));
    let mut refusal = None;
    if let Some(grouping) = &cfg.grouping {
        match dcf_stage(cfg, grouping, &loaded, &diagnostics.selection, &mut arts) {
            Ok(analysis) => print_dcf_summary(cfg, grouping, &analysis),
            Err(e @ CliError::Guard(_)) => {
                m.guard_refusal = Some(e.to_string());
                refusal = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    if cfg.with_power {
        power_stage(cfg, &mut arts)?;
    }
    log::info!("writing {}", arts.names().join(", "));
    arts.commit(&cfg.out, m)?;
    refusal.map_or(Ok(()), Err)
}

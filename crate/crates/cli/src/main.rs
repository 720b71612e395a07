//! `dcf`: fit IRT models to dichotomized course grades, run diagnostics,
//! test courses for differential functioning between two student groups and
//! simulate the power of that test.
//!
//! Exit codes: 0 success, 1 internal error, 2 input or config error,
//! 3 refusal by the Rasch guard.

mod commands;
mod config;
mod error;
mod output;
mod pipeline;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "dcf", version, about = "Differential course functioning analysis of grade data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Fit one IRT model and write course parameters and student traits.
    Fit,
    /// Model selection, Q3, split-half reliability and concurrent validity.
    Diagnose,
    /// Per-course DCF and AR-gap tests between two groups.
    Dcf,
    /// Monte Carlo power curve and FDR calibration.
    Power,
    /// Fit, diagnostics and DCF into one directory.
    Report,
}

/// Every option is also a config-file key of the same name.
#[derive(Args, Debug, Default)]
struct Opts {
    /// Enrollment CSV with student_id, course_id, term_index, letter_grade.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Flat `key = value` config file, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    dataset: Option<String>,
    /// Comma-separated attribute columns; empty reads all extra columns.
    #[arg(long, global = true)]
    attributes: Option<String>,
    /// Achievement grade: `median` or a letter A-F.
    #[arg(long, global = true)]
    ag: Option<String>,
    #[arg(long, global = true)]
    min_grades: Option<String>,
    #[arg(long, global = true)]
    min_students: Option<String>,
    #[arg(long, global = true)]
    require_variance: Option<String>,
    /// Comma-separated 2PL dimensionalities for model selection (1 to 3).
    #[arg(long, global = true)]
    dims: Option<String>,
    /// Model written by `fit`: `1pl` or `2pl`.
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    model_dims: Option<String>,
    #[arg(long, global = true)]
    fdr_q: Option<String>,
    /// 1 tests the group effect alone, 2 tests intercept and effect jointly.
    #[arg(long, global = true)]
    lrt_df: Option<String>,
    /// `course` or `global` mean trait for the probability-scale effect.
    #[arg(long, global = true)]
    theta_bar: Option<String>,
    #[arg(long, global = true)]
    group_attr: Option<String>,
    #[arg(long, global = true)]
    group_neg: Option<String>,
    #[arg(long, global = true)]
    group_pos: Option<String>,
    /// Run DCF even when model selection does not support the Rasch model.
    #[arg(long, global = true)]
    override_rasch_guard: bool,
    #[arg(long, global = true)]
    beta1: Option<String>,
    #[arg(long, global = true)]
    group_sizes: Option<String>,
    #[arg(long, global = true)]
    replications: Option<String>,
    #[arg(long, global = true)]
    n_courses: Option<String>,
    #[arg(long, global = true)]
    n_dcf_courses: Option<String>,
    #[arg(long, global = true)]
    group_ratio: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// `true` or `false`: run the FDR study alongside the power curve.
    #[arg(long, global = true)]
    fdr: Option<String>,
    #[arg(long, global = true)]
    fdr_replications: Option<String>,
    #[arg(long, global = true)]
    fdr_group_size: Option<String>,
    #[arg(long, global = true)]
    fdr_beta1: Option<String>,
    /// Include the power study in `report`.
    #[arg(long, global = true)]
    with_power: bool,
}

impl Opts {
    fn to_flags(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: &Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v.clone());
            }
        };
        put("input", &self.input.as_ref().map(|p| p.display().to_string()));
        put("out", &self.out.as_ref().map(|p| p.display().to_string()));
        put("seed", &self.seed);
        put("dataset", &self.dataset);
        put("attributes", &self.attributes);
        put("ag", &self.ag);
        put("min-grades", &self.min_grades);
        put("min-students", &self.min_students);
        put("require-variance", &self.require_variance);
        put("dims", &self.dims);
        put("model", &self.model);
        put("model-dims", &self.model_dims);
        put("fdr-q", &self.fdr_q);
        put("lrt-df", &self.lrt_df);
        put("theta-bar", &self.theta_bar);
        put("group-attr", &self.group_attr);
        put("group-neg", &self.group_neg);
        put("group-pos", &self.group_pos);
        put("beta1", &self.beta1);
        put("group-sizes", &self.group_sizes);
        put("replications", &self.replications);
        put("n-courses", &self.n_courses);
        put("n-dcf-courses", &self.n_dcf_courses);
        put("group-ratio", &self.group_ratio);
        put("alpha", &self.alpha);
        put("fdr", &self.fdr);
        put("fdr-replications", &self.fdr_replications);
        put("fdr-group-size", &self.fdr_group_size);
        put("fdr-beta1", &self.fdr_beta1);
        if self.override_rasch_guard {
            m.insert("override-rasch-guard".into(), "true".into());
        }
        if self.with_power {
            m.insert("with-power".into(), "true".into());
        }
        m
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let file = match &cli.opts.config {
        Some(path) => config::read_config_file(path)?,
        None => BTreeMap::new(),
    };
    let cfg = config::resolve(file, cli.opts.to_flags())?;
    match cli.command {
        Command::Fit => commands::cmd_fit(&cfg),
        Command::Diagnose => commands::cmd_diagnose(&cfg),
        Command::Dcf => commands::cmd_dcf(&cfg),
        Command::Power => commands::cmd_power(&cfg),
        Command::Report => commands::cmd_report(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

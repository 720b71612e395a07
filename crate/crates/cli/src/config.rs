//! Run configuration: a flat `key = value` file merged with command-line
//! flags. Flags win over the file. Keys are the long flag names.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dcf_core::data::{AgPolicy, FilterConfig, Letter};
use dcf_core::dcf::{LrtMode, ThetaBar};
use dcf_core::irt::ModelSpec;
use dcf_core::power::SimConfig;

use crate::error::CliError;

/// Every key a config file may set.
pub const KEYS: &[&str] = &[
    "input",
    "out",
    "dataset",
    "seed",
    "attributes",
    "ag",
    "min-grades",
    "min-students",
    "require-variance",
    "dims",
    "model",
    "model-dims",
    "fdr-q",
    "lrt-df",
    "theta-bar",
    "group-attr",
    "group-neg",
    "group-pos",
    "override-rasch-guard",
    "beta1",
    "group-sizes",
    "replications",
    "n-courses",
    "n-dcf-courses",
    "group-ratio",
    "alpha",
    "fdr",
    "fdr-replications",
    "fdr-group-size",
    "fdr-beta1",
    "with-power",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    pub attribute: String,
    pub neg_value: String,
    pub pos_value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub dataset: String,
    pub seed: u64,
    pub attribute_columns: Vec<String>,
    pub ag_policy: AgPolicy,
    pub filter: FilterConfig,
    /// Dimensionalities of the 2PL candidates tried during selection.
    pub dims: Vec<usize>,
    /// Model written by `fit`.
    pub model: ModelSpec,
    pub fdr_q: f64,
    pub lrt_mode: LrtMode,
    pub theta_bar: ThetaBar,
    pub grouping: Option<Grouping>,
    pub override_rasch_guard: bool,
    pub sim: SimConfig,
    /// Also run the FDR study in `power`.
    pub run_fdr: bool,
    /// Include the power study in `report`.
    pub with_power: bool,
    /// Resolved value of every key, written to the manifest.
    pub echo: BTreeMap<String, String>,
}

impl RunConfig {
    /// Model-selection candidates: 1PL plus 2PL at every requested
    /// dimensionality.
    pub fn candidates(&self) -> Vec<ModelSpec> {
        std::iter::once(ModelSpec::rasch()).chain(self.dims.iter().map(|&d| ModelSpec::two_pl(d))).collect()
    }

    pub fn input_path(&self) -> Result<&Path, CliError> {
        self.input.as_deref().ok_or_else(|| CliError::Config("no input file given (use --input)".into()))
    }
}

fn defaults() -> BTreeMap<String, String> {
    let sim = SimConfig::default();
    let join = |v: Vec<String>| v.join(",");
    let pairs = [
        ("out", "out".to_string()),
        ("dataset", "dataset".to_string()),
        ("seed", sim.master_seed.to_string()),
        ("attributes", String::new()),
        ("ag", "median".to_string()),
        ("min-grades", FilterConfig::default().min_grades_per_student.to_string()),
        ("min-students", FilterConfig::default().min_students_per_course.to_string()),
        ("require-variance", "true".to_string()),
        ("dims", "1,2,3".to_string()),
        ("model", "1pl".to_string()),
        ("model-dims", "1".to_string()),
        ("fdr-q", "0.05".to_string()),
        ("lrt-df", LrtMode::default().df().to_string()),
        ("theta-bar", "course".to_string()),
        ("override-rasch-guard", "false".to_string()),
        ("beta1", join(sim.beta1_grid.iter().map(f64::to_string).collect())),
        ("group-sizes", join(sim.group_size_grid.iter().map(usize::to_string).collect())),
        ("replications", sim.replications.to_string()),
        ("n-courses", sim.n_courses.to_string()),
        ("n-dcf-courses", sim.n_dcf_courses.to_string()),
        ("group-ratio", sim.group_ratio.to_string()),
        ("alpha", sim.alpha.to_string()),
        ("fdr", "true".to_string()),
        ("fdr-replications", sim.fdr_replications.to_string()),
        ("fdr-group-size", sim.fdr_group_size.to_string()),
        ("fdr-beta1", sim.fdr_beta1.to_string()),
        ("with-power", "false".to_string()),
    ];
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Reads a config file. A `.json` file is taken to be a run manifest and
/// its `config` object is used, so an earlier run can be repeated.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config '{}': {e}", path.display())))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid manifest JSON: {e}")))?;
        let config = value
            .get("config")
            .and_then(|c| c.as_object())
            .ok_or_else(|| CliError::Config("manifest has no 'config' object".into()))?;
        let mut out = BTreeMap::new();
        for (k, v) in config {
            let v = v.as_str().ok_or_else(|| CliError::Config(format!("manifest config '{k}' is not a string")))?;
            out.insert(k.clone(), v.to_string());
        }
        check_keys(&out)?;
        return Ok(out);
    }
    parse_kv(&text)
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", n + 1)))?;
        let key = k.trim().replace('_', "-");
        out.insert(key, v.trim().to_string());
    }
    check_keys(&out)?;
    Ok(out)
}

fn check_keys(map: &BTreeMap<String, String>) -> Result<(), CliError> {
    match map.keys().find(|k| !KEYS.contains(&k.as_str())) {
        Some(k) => Err(CliError::Config(format!("unknown config key '{k}'"))),
        None => Ok(()),
    }
}

/// Layers defaults, then the file, then flag overrides, and validates.
pub fn resolve(
    file: BTreeMap<String, String>,
    flags: BTreeMap<String, String>,
) -> Result<RunConfig, CliError> {
    check_keys(&flags)?;
    let mut merged = defaults();
    merged.extend(file);
    merged.extend(flags);
    build(merged)
}

fn build(echo: BTreeMap<String, String>) -> Result<RunConfig, CliError> {
    let get = |k: &str| echo.get(k).map(String::as_str).unwrap_or("");
    let bad = |k: &str, why: &str| CliError::Config(format!("invalid value for '{k}': {why}"));

    fn num<T: std::str::FromStr>(echo: &BTreeMap<String, String>, k: &str) -> Result<T, CliError> {
        let raw = echo.get(k).map(String::as_str).unwrap_or("");
        raw.trim().parse().map_err(|_| CliError::Config(format!("invalid value for '{k}': '{raw}'")))
    }
    fn list<T: std::str::FromStr>(echo: &BTreeMap<String, String>, k: &str) -> Result<Vec<T>, CliError> {
        let raw = echo.get(k).map(String::as_str).unwrap_or("");
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| CliError::Config(format!("invalid entry '{s}' in '{k}'"))))
            .collect()
    }
    let check_dims = |k: &str, d: usize| {
        if (1..=3).contains(&d) {
            Ok(d)
        } else {
            Err(bad(k, &format!("{d} dimensions requested; supported: 1 to 3")))
        }
    };

    let ag_policy = match get("ag").to_ascii_lowercase().as_str() {
        "median" | "" => AgPolicy::Median,
        other => AgPolicy::Explicit(other.parse::<Letter>().map_err(|_| bad("ag", "expected 'median' or A-F"))?),
    };
    let filter = FilterConfig {
        min_grades_per_student: num(&echo, "min-grades")?,
        min_students_per_course: num(&echo, "min-students")?,
        require_variance: num(&echo, "require-variance")?,
    };
    if filter.min_grades_per_student == 0 || filter.min_students_per_course == 0 {
        return Err(CliError::Config("filter thresholds must be at least 1".into()));
    }
    let dims = list::<usize>(&echo, "dims")?
        .into_iter()
        .map(|d| check_dims("dims", d))
        .collect::<Result<Vec<_>, _>>()?;
    let model_dims = check_dims("model-dims", num(&echo, "model-dims")?)?;
    let model = match get("model").to_ascii_lowercase().as_str() {
        "1pl" | "rasch" => {
            if model_dims != 1 {
                return Err(bad("model-dims", "1PL is one-dimensional"));
            }
            ModelSpec::rasch()
        }
        "2pl" => ModelSpec::two_pl(model_dims),
        _ => return Err(bad("model", "expected '1pl' or '2pl'")),
    };

    let fdr_q: f64 = num(&echo, "fdr-q")?;
    if !(0.0..=1.0).contains(&fdr_q) {
        return Err(bad("fdr-q", "must lie in [0, 1]"));
    }
    let lrt_mode = LrtMode::from_df(num(&echo, "lrt-df")?).ok_or_else(|| bad("lrt-df", "expected 1 or 2"))?;
    let theta_bar = match get("theta-bar").to_ascii_lowercase().as_str() {
        "course" => ThetaBar::CourseLocal,
        "global" => ThetaBar::Global,
        _ => return Err(bad("theta-bar", "expected 'course' or 'global'")),
    };

    let grouping = match (get("group-attr"), get("group-neg"), get("group-pos")) {
        ("", "", "") => None,
        (a, n, p) if !a.is_empty() && !n.is_empty() && !p.is_empty() => {
            if n == p {
                return Err(bad("group-pos", "must differ from group-neg"));
            }
            Some(Grouping { attribute: a.to_string(), neg_value: n.to_string(), pos_value: p.to_string() })
        }
        _ => return Err(CliError::Config("group-attr, group-neg and group-pos must be given together".into())),
    };

    let mut attribute_columns: Vec<String> = list(&echo, "attributes")?;
    if let Some(g) = &grouping {
        if !attribute_columns.is_empty() && !attribute_columns.contains(&g.attribute) {
            attribute_columns.push(g.attribute.clone());
        }
    }

    let seed: u64 = num(&echo, "seed")?;
    let sim = SimConfig {
        n_courses: num(&echo, "n-courses")?,
        n_dcf_courses: num(&echo, "n-dcf-courses")?,
        beta1_grid: list(&echo, "beta1")?,
        group_size_grid: list(&echo, "group-sizes")?,
        group_ratio: num(&echo, "group-ratio")?,
        replications: num(&echo, "replications")?,
        alpha: num(&echo, "alpha")?,
        master_seed: seed,
        lrt_mode,
        fdr_q,
        fdr_beta1: num(&echo, "fdr-beta1")?,
        fdr_group_size: num(&echo, "fdr-group-size")?,
        fdr_replications: num(&echo, "fdr-replications")?,
        ..SimConfig::default()
    };

    let input = Some(get("input")).filter(|s| !s.is_empty()).map(PathBuf::from);
    Ok(RunConfig {
        input,
        out: PathBuf::from(get("out")),
        dataset: get("dataset").to_string(),
        seed,
        attribute_columns,
        ag_policy,
        filter,
        dims,
        model,
        fdr_q,
        lrt_mode,
        theta_bar,
        grouping,
        override_rasch_guard: num(&echo, "override-rasch-guard")?,
        run_fdr: num(&echo, "fdr")?,
        with_power: num(&echo, "with-power")?,
        sim,
        echo,
    })
}

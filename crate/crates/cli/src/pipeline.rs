//! Loads an enrollment file into a filtered response matrix.

use std::fs::File;
use std::io::BufReader;

use serde::Serialize;

use dcf_core::data::{
    dichotomize, iterative_filter, parse_enrollments, DataError, Dichotomized, FilterStep, ParsedEnrollments,
    ResponseMatrix,
};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSizes {
    pub records: usize,
    pub rejected_rows: usize,
    pub repeats_dropped: usize,
    pub students_before: usize,
    pub courses_before: usize,
    pub students_after: usize,
    pub courses_after: usize,
    pub filter_trace: Vec<FilterStep>,
}

pub struct Loaded {
    pub parsed: ParsedEnrollments,
    pub dichotomized: Dichotomized,
    pub matrix: ResponseMatrix,
    pub sizes: DatasetSizes,
}

fn data_error(e: DataError) -> CliError {
    match e {
        DataError::MissingColumn(c) => CliError::Input(format!("column '{c}' not found in input header")),
        other => CliError::Input(other.to_string()),
    }
}

/// Parses, checks the grouping attribute, dichotomizes and filters.
pub fn load(cfg: &RunConfig) -> Result<Loaded, CliError> {
    let path = cfg.input_path()?;
    if !path.is_file() {
        return Err(CliError::Input(format!("input not found: {}", path.display())));
    }
    let file = File::open(path).map_err(|e| CliError::Input(format!("input not found: {}: {e}", path.display())))?;
    let parsed = parse_enrollments(BufReader::new(file), &cfg.attribute_columns).map_err(data_error)?;

    if let Some(g) = &cfg.grouping {
        let in_header = parsed.attribute_columns.contains(&g.attribute);
        let in_cells = parsed.records.iter().any(|r| r.attributes.contains_key(&g.attribute));
        if !in_header && !in_cells {
            return Err(CliError::Config(format!("group attribute '{}' not found in input header", g.attribute)));
        }
    }
    if !parsed.rejects.is_empty() {
        log::warn!("{} input rows rejected", parsed.rejects.len());
    }

    let dichotomized = dichotomize(&parsed.records, cfg.ag_policy).map_err(data_error)?;
    let filtered = iterative_filter(&dichotomized.matrix, &cfg.filter).map_err(data_error)?;
    let sizes = DatasetSizes {
        records: parsed.records.len(),
        rejected_rows: parsed.rejects.len(),
        repeats_dropped: dichotomized.repeats_dropped,
        students_before: dichotomized.matrix.n_students(),
        courses_before: dichotomized.matrix.n_courses(),
        students_after: filtered.matrix.n_students(),
        courses_after: filtered.matrix.n_courses(),
        filter_trace: filtered.trace,
    };
    log::info!(
        "{} students x {} courses after filtering (from {} x {})",
        sizes.students_after,
        sizes.courses_after,
        sizes.students_before,
        sizes.courses_before
    );
    Ok(Loaded { parsed, dichotomized, matrix: filtered.matrix, sizes })
}

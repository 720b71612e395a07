//! CSV writers for exported artifacts. Floats are written in Rust's
//! shortest round-trip form, so identical results give identical bytes.

use std::io::Write;

use crate::dcf::{ArTest, DcfAnalysis};
use crate::irt::{FittedModel, TraitEstimates};
use crate::power::PowerCurve;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// `course_id,alpha_1..alpha_n,delta_1..delta_n,projected_difficulty`
pub fn write_model_csv<W: Write>(model: &FittedModel, out: W) -> Result<(), ReportError> {
    let dims = model.dims();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["course_id".to_string()];
    header.extend((1..=dims).map(|k| format!("alpha_{k}")));
    header.extend((1..=dims).map(|k| format!("delta_{k}")));
    header.push("projected_difficulty".into());
    w.write_record(&header)?;
    for c in 0..model.n_courses() {
        let mut row = vec![model.course_ids[c].clone()];
        row.extend(model.discriminations[c].iter().map(f64::to_string));
        row.extend(model.locations[c].iter().map(f64::to_string));
        row.push(model.projected_difficulty[c].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `student_id,theta_1..theta_n,posterior_sd_1..posterior_sd_n,trait_norm`
pub fn write_traits_csv<W: Write>(traits: &TraitEstimates, out: W) -> Result<(), ReportError> {
    let dims = traits.traits.first().map_or(1, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["student_id".to_string()];
    header.extend((1..=dims).map(|k| format!("theta_{k}")));
    header.extend((1..=dims).map(|k| format!("posterior_sd_{k}")));
    header.push("trait_norm".into());
    w.write_record(&header)?;
    for i in 0..traits.len() {
        let mut row = vec![traits.student_ids[i].clone()];
        row.extend(traits.traits[i].iter().map(f64::to_string));
        row.extend(traits.posterior_sd[i].iter().map(f64::to_string));
        row.push(traits.trait_norm[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per course, tested or skipped, sorted by course id.
pub fn write_dcf_csv<W: Write>(analysis: &DcfAnalysis, out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "course_id",
        "beta0",
        "beta1",
        "lrt_stat",
        "p_value",
        "significant",
        "effect_size_prob",
        "theta_bar",
        "n_g1",
        "n_g2",
        "case_label",
        "skip_reason",
    ])?;
    let mut rows: Vec<(String, Vec<String>)> = analysis
        .results
        .iter()
        .map(|r| {
            let row = vec![
                r.fit.course_id.clone(),
                r.fit.beta0.to_string(),
                r.fit.beta1.to_string(),
                r.lrt_statistic.to_string(),
                r.p_value.to_string(),
                r.significant_fdr.to_string(),
                r.effect_size_prob.to_string(),
                r.theta_bar.to_string(),
                r.fit.n_neg.to_string(),
                r.fit.n_pos.to_string(),
                r.case_label.map_or_else(String::new, |c| c.to_string()),
                String::new(),
            ];
            (r.fit.course_id.clone(), row)
        })
        .collect();
    for s in &analysis.skipped {
        let mut row = vec![s.course_id.clone()];
        row.extend(std::iter::repeat_n(String::new(), 10));
        row.push(s.reason.clone());
        rows.push((s.course_id.clone(), row));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    for (_, row) in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `course_id,ar_g1,ar_g2,ar_delta,p_value,significant,n_g1,n_g2,test`
pub fn write_ar_csv<W: Write>(analysis: &DcfAnalysis, out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["course_id", "ar_g1", "ar_g2", "ar_delta", "p_value", "significant", "n_g1", "n_g2", "test"])?;
    for r in &analysis.ar_results {
        w.write_record([
            r.course_id.clone(),
            r.ar_g1.to_string(),
            r.ar_g2.to_string(),
            r.ar_delta.to_string(),
            r.p_value.to_string(),
            r.significant_fdr.to_string(),
            r.n_g1.to_string(),
            r.n_g2.to_string(),
            match r.test {
                ArTest::ZTest => "z".into(),
                ArTest::Fisher => "fisher".into(),
            },
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_plot<W: Write>(rows: impl Iterator<Item = (String, f64, bool)>, out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["course_id", "effect", "significant"])?;
    for (c, e, s) in rows {
        w.write_record([c, e.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Bar-chart data of the probability-scale DCF effect per tested course.
pub fn write_dcf_plot_csv<W: Write>(analysis: &DcfAnalysis, out: W) -> Result<(), ReportError> {
    write_plot(analysis.results.iter().map(|r| (r.fit.course_id.clone(), r.effect_size_prob, r.significant_fdr)), out)
}

/// Bar-chart data of the AR gap per course.
pub fn write_ar_plot_csv<W: Write>(analysis: &DcfAnalysis, out: W) -> Result<(), ReportError> {
    write_plot(analysis.ar_results.iter().map(|r| (r.course_id.clone(), r.ar_delta, r.significant_fdr)), out)
}

/// `beta1,group_size,power,ci_low,ci_high,replications,fit_failures`
pub fn write_power_csv<W: Write>(curve: &PowerCurve, out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["beta1", "group_size", "power", "ci_low", "ci_high", "replications", "fit_failures"])?;
    for c in &curve.cells {
        w.write_record([
            c.beta1.to_string(),
            c.group_size.to_string(),
            c.power.to_string(),
            c.ci_low.to_string(),
            c.ci_high.to_string(),
            c.replications.to_string(),
            c.fit_failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Renders a CSV writer's output into a string.
pub fn to_csv_string<F>(write: F) -> Result<String, ReportError>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), ReportError>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

//! Aggregation of replication records into one table per cell.

use serde::{Deserialize, Serialize};

use super::replication::{ParamRecord, ReplicationRecord};
use super::truth::Truth;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub parameter: String,
    pub truth: f64,
    pub bias_full: Option<f64>,
    pub bias_samuelsen: Option<f64>,
    pub esd_samuelsen: Option<f64>,
    pub bias_new: Option<f64>,
    pub esd_new: Option<f64>,
    /// Mean perturbation standard error.
    pub pase: Option<f64>,
    pub coverage: Option<f64>,
    /// Replications whose interval entered the coverage denominator.
    pub n_intervals: usize,
    pub nonconv_samuelsen: usize,
    pub nonconv_new: usize,
    pub nonconv_full: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_reps: usize,
    pub rows: Vec<AggregateRow>,
}

pub const CSV_HEADER: [&str; 11] = [
    "parameter",
    "true",
    "bias_full",
    "bias_samuelsen",
    "esd_samuelsen",
    "bias_new",
    "esd_new",
    "pase",
    "coverage",
    "nonconv_samuelsen",
    "nonconv_new",
];

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Sample standard deviation, `n - 1` denominator.
pub fn sample_sd(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    (v.len() >= 2).then(|| (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

fn collect(records: &[&ParamRecord], f: impl Fn(&ParamRecord) -> Option<f64>) -> Vec<f64> {
    records.iter().filter_map(|r| f(r)).collect()
}

/// Bias and ESD over converged fits, mean perturbation SE, and coverage
/// of the perturbation intervals. Records are reduced in `rep_id` order.
pub fn aggregate(records: &[ReplicationRecord], truth: &Truth) -> Result<AggregateReport> {
    if records.is_empty() {
        return Err(Error::TooFewReplicates(0));
    }
    let mut sorted: Vec<&ReplicationRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.rep_id);
    let count = |f: fn(&ReplicationRecord) -> bool| sorted.iter().filter(|r| !f(r)).count();
    let nonconv_full = count(|r| r.converged_full);
    let nonconv_samuelsen = count(|r| r.converged_samuelsen);
    let nonconv_new = count(|r| r.converged_new);

    let mut rows = Vec::with_capacity(truth.values.len());
    for (name, t) in &truth.values {
        let per: Vec<&ParamRecord> = sorted
            .iter()
            .map(|r| {
                r.params
                    .iter()
                    .find(|p| &p.name == name)
                    .ok_or_else(|| Error::InconsistentSample(format!("replication {} lacks parameter {name}", r.rep_id)))
            })
            .collect::<Result<_>>()?;
        let full = collect(&per, |p| p.full);
        let sam = collect(&per, |p| p.samuelsen);
        let new = collect(&per, |p| p.new);
        let se = collect(&per, |p| p.se);
        let intervals: Vec<(f64, f64)> = per
            .iter()
            .filter_map(|p| Some((p.ci_lower?, p.ci_upper?)))
            .collect();
        let covered = intervals.iter().filter(|(lo, hi)| lo <= t && t <= hi).count();
        rows.push(AggregateRow {
            parameter: name.clone(),
            truth: *t,
            bias_full: mean(&full).map(|m| m - t),
            bias_samuelsen: mean(&sam).map(|m| m - t),
            esd_samuelsen: sample_sd(&sam),
            bias_new: mean(&new).map(|m| m - t),
            esd_new: sample_sd(&new),
            pase: mean(&se),
            coverage: (!intervals.is_empty()).then(|| covered as f64 / intervals.len() as f64),
            n_intervals: intervals.len(),
            nonconv_samuelsen,
            nonconv_new,
            nonconv_full,
        });
    }
    Ok(AggregateReport {
        n_reps: records.len(),
        rows,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl AggregateReport {
    pub fn row(&self, parameter: &str) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.parameter == parameter)
    }

    /// CSV with one row per parameter; undefined cells are empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidDesign(format!("csv: {e}"));
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.parameter.clone(),
                r.truth.to_string(),
                cell(r.bias_full),
                cell(r.bias_samuelsen),
                cell(r.esd_samuelsen),
                cell(r.bias_new),
                cell(r.esd_new),
                cell(r.pase),
                cell(r.coverage),
                r.nonconv_samuelsen.to_string(),
                r.nonconv_new.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidDesign(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

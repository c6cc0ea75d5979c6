//! Monte Carlo study harness: cohort generator, true-value oracle,
//! replication runner and aggregation into bias / ESD / ASE / coverage
//! tables.

pub mod generator;
pub mod replication;
pub mod report;
pub mod truth;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::ModelKind;

pub use generator::{generate, SimCohort};
pub use replication::{run_replication, ParamRecord, ReplicationRecord};
pub use report::{aggregate, AggregateReport, AggregateRow};
pub use truth::{true_values, Truth};

/// One cell of a simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_cohort: usize,
    pub pi1: f64,
    pub m: usize,
    pub matching: bool,
    pub t0: f64,
    pub model: ModelKind,
    pub n_reps: usize,
    /// Perturbation replicates per replication; zero skips inference.
    pub n_perturb: usize,
    pub fpr_target: f64,
    pub master_seed: u64,
    /// Confidence level of the perturbation intervals.
    pub level: f64,
    /// Sample size of the true-value oracle.
    pub truth_draws: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_cohort: 2000,
            pi1: 0.5,
            m: 3,
            matching: false,
            t0: 1.0,
            model: ModelKind::Cox,
            n_reps: 200,
            n_perturb: 500,
            fpr_target: 0.05,
            master_seed: 20_240_601,
            level: 0.95,
            truth_draws: 1_000_000,
        }
    }
}

impl SimConfig {
    /// Checks every field; the error names the offending one.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::InvalidDesign(format!("{key}: {why}")));
        if self.n_cohort < 2 {
            return bad("n_cohort", "must be at least 2");
        }
        if !(self.pi1 > 0.0 && self.pi1 <= 1.0) {
            return bad("pi1", "must lie in (0, 1]");
        }
        if self.m == 0 {
            return bad("m", "must be positive");
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return bad("t0", "must be positive and finite");
        }
        if self.n_reps == 0 {
            return bad("n_reps", "must be positive");
        }
        if !(self.fpr_target > 0.0 && self.fpr_target < 1.0) {
            return bad("fpr_target", "must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.level) {
            return bad("level", "must lie in [0, 1)");
        }
        if self.truth_draws < 1000 {
            return bad("truth_draws", "must be at least 1000");
        }
        Ok(())
    }

    pub fn match_tol(&self) -> Option<Vec<f64>> {
        self.matching.then(|| generator::MATCH_TOL.to_vec())
    }

    /// File-name stem identifying the cell, e.g. `cox_pi0.2_nomatch`.
    pub fn cell_name(&self) -> String {
        format!(
            "{}_pi{}_{}",
            self.model,
            self.pi1,
            if self.matching { "match" } else { "nomatch" }
        )
    }

    /// Same cell, i.e. the same data-generating and estimation settings,
    /// so replication records may be pooled.
    pub fn same_cell(&self, other: &SimConfig) -> bool {
        self == other
    }
}

/// Every replication of one cell plus its aggregate.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub config: SimConfig,
    pub truth: Truth,
    pub records: Vec<ReplicationRecord>,
    pub report: AggregateReport,
}

/// Runs all replications of a cell in parallel; results are ordered by
/// replication id and independent of the thread count.
pub fn run_cell(config: &SimConfig) -> Result<CellResult> {
    config.validate()?;
    let truth = true_values(config)?;
    let records = (0..config.n_reps as u64)
        .into_par_iter()
        .map(|rep| run_replication(config, rep))
        .collect::<Result<Vec<_>>>()?;
    let report = aggregate(&records, &truth)?;
    Ok(CellResult {
        config: config.clone(),
        truth,
        records,
        report,
    })
}

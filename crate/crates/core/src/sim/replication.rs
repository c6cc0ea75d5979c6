//! One replication: generate, sample, fit under three weightings, perturb.

use serde::{Deserialize, Serialize};

use super::generator::{generate, MARKERS};
use super::SimConfig;
use crate::cohort::{km_censoring_survival, Cohort, StepSurvival};
use crate::error::{Error, Result};
use crate::perturbation::{perturb, PerturbationConfig};
use crate::pipeline::{estimate, param_names, EstimationSpec, Estimates};
use crate::sampling::{sample, NccDesign};
use crate::seed::{derive_seed, rng_for, stream};
use crate::weights::{SamplingWeights, WeightScheme};

/// Estimates of one parameter in one replication. `None` means the fit
/// did not converge or the measure was undefined; never a stand-in zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub full: Option<f64>,
    pub samuelsen: Option<f64>,
    pub new: Option<f64>,
    pub se: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep_id: u64,
    pub n_events: usize,
    pub n_cases: usize,
    pub n_selected: usize,
    pub converged_full: bool,
    pub converged_samuelsen: bool,
    pub converged_new: bool,
    pub b_used: usize,
    pub b_total: usize,
    pub params: Vec<ParamRecord>,
}

/// Fit failures are data, anything else is a bug worth surfacing.
fn fit_or_absent(r: Result<Estimates>) -> Result<Option<Estimates>> {
    match r {
        Ok(e) => Ok(Some(e)),
        Err(Error::Fit(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn values(e: &Option<Estimates>, p: usize) -> Vec<Option<f64>> {
    e.as_ref().map_or_else(|| vec![None; p], Estimates::values)
}

fn fit_scheme(cohort: &Cohort, w: &SamplingWeights, g: &StepSurvival, spec: &EstimationSpec) -> Result<Option<Estimates>> {
    fit_or_absent(estimate(cohort, &w.values, g, spec))
}

/// Runs replication `rep_id` of the cell; deterministic in
/// `(master_seed, rep_id)` whatever the thread schedule.
pub fn run_replication(config: &SimConfig, rep_id: u64) -> Result<ReplicationRecord> {
    let seed = config.master_seed;
    let sim = generate(config.n_cohort, &mut rng_for(&[seed, rep_id, stream::COHORT]))?;
    let cohort = &sim.cohort;
    let design = NccDesign::new(config.pi1, config.m, config.match_tol())?;
    let ncc = sample(cohort, &design, &mut rng_for(&[seed, rep_id, stream::SAMPLE]))?;

    let g = km_censoring_survival(cohort, None)?;
    let spec = EstimationSpec::new(config.model, config.t0, config.fpr_target);
    let full = fit_scheme(cohort, &SamplingWeights::full_cohort(cohort.len()), &g, &spec)?;
    let samuelsen = fit_scheme(cohort, &SamplingWeights::compute(WeightScheme::Samuelsen, &ncc, cohort)?, &g, &spec)?;
    let new = fit_scheme(cohort, &SamplingWeights::compute(WeightScheme::New, &ncc, cohort)?, &g, &spec)?;

    let names = param_names(&MARKERS);
    let p = names.len();
    let inference = match (&new, config.n_perturb) {
        (Some(point), b) if b > 0 => {
            let cfg = PerturbationConfig {
                n_perturb: b,
                level: config.level,
                seed: derive_seed(&[seed, rep_id, stream::PERTURB]),
            };
            Some(perturb(cohort, &ncc, point, &spec, &cfg)?)
        }
        _ => None,
    };
    let (full_v, sam_v, new_v) = (values(&full, p), values(&samuelsen, p), values(&new, p));
    let params = names
        .into_iter()
        .enumerate()
        .map(|(k, name)| ParamRecord {
            name,
            full: full_v[k],
            samuelsen: sam_v[k],
            new: new_v[k],
            se: inference.as_ref().and_then(|r| r.se[k]),
            ci_lower: inference.as_ref().and_then(|r| r.ci_lower[k]),
            ci_upper: inference.as_ref().and_then(|r| r.ci_upper[k]),
        })
        .collect();
    Ok(ReplicationRecord {
        rep_id,
        n_events: cohort.n_events(),
        n_cases: ncc.n_cases(),
        n_selected: ncc.selected().iter().filter(|&&s| s).count(),
        converged_full: full.is_some(),
        converged_samuelsen: samuelsen.is_some(),
        converged_new: new.is_some(),
        b_used: inference.as_ref().map_or(0, |r| r.b_used),
        b_total: inference.as_ref().map_or(0, |r| r.b_total),
        params,
    })
}

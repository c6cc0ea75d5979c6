//! True parameter values for a simulation cell.
//!
//! The Cox coefficients are known in closed form: the extreme-value AFT
//! model is proportional hazards with `Lambda(t | z, b) = t^2 e^{-3}
//! e^{(z + b) / 2}`, so both coefficients are 0.5 and `log Lambda0(t0) =
//! 2 log t0 - 3`. GLM coefficients and all accuracy measures come from a
//! large uncensored Monte Carlo sample.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::generator::{draw_markers_and_time, MARKERS};
use super::SimConfig;
use crate::accuracy::WeightedScores;
use crate::error::Result;
use crate::estimators::{solve_glm, GlmEquation, Link, ModelKind};
use crate::newton::NewtonConfig;
use crate::seed::{rng_for, stream};

/// Fixed oracle seed: truths depend on the cell's estimand, not on the
/// study seed.
const ORACLE_SEED: u64 = 0x7275_7468;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    /// `(parameter, value)` in report order.
    pub values: Vec<(String, f64)>,
}

impl Truth {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

type Key = (ModelKind, u64, u64, usize);

fn cache() -> &'static Mutex<HashMap<Key, Truth>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Truth>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Truth for the cell's model at its `t0` and FPR target; cached.
pub fn true_values(config: &SimConfig) -> Result<Truth> {
    let key = (
        config.model,
        config.t0.to_bits(),
        config.fpr_target.to_bits(),
        config.truth_draws,
    );
    if let Some(t) = cache().lock().expect("truth cache").get(&key) {
        return Ok(t.clone());
    }
    let t = compute(config.model, config.t0, config.fpr_target, config.truth_draws)?;
    cache().lock().expect("truth cache").insert(key, t.clone());
    Ok(t)
}

/// Uncensored oracle sample: markers and event-by-`t0` indicators.
fn oracle_sample(t0: f64, n: usize) -> (Vec<[f64; 2]>, Vec<bool>) {
    let mut rng = rng_for(&[ORACLE_SEED, stream::TRUTH]);
    (0..n)
        .map(|_| {
            let (z, b, t) = draw_markers_and_time(&mut rng);
            ([z, b], t <= t0)
        })
        .unzip()
}

fn compute(model: ModelKind, t0: f64, fpr_target: f64, n: usize) -> Result<Truth> {
    let (x, event) = oracle_sample(t0, n);
    let mut values = Vec::new();
    let scores: Vec<f64> = match model {
        ModelKind::Cox => {
            values.extend(MARKERS.iter().map(|m| (format!("beta_{m}"), 0.5)));
            // Any increasing transform of z + b gives the same accuracy.
            x.iter().map(|r| r[0] + r[1]).collect()
        }
        ModelKind::TdGlm => {
            let rows: Vec<Vec<f64>> = x.iter().map(|r| r.to_vec()).collect();
            let y: Vec<f64> = event.iter().map(|&e| if e { 1.0 } else { 0.0 }).collect();
            let mass = vec![1.0 / n as f64; n];
            let eq = GlmEquation::from_rows(&rows, &y, &mass, Link::Logit);
            let (gamma, _, _) = solve_glm(&eq, &NewtonConfig::default())?;
            values.push(("alpha".to_string(), gamma[0]));
            values.extend(MARKERS.iter().zip(gamma.iter().skip(1)).map(|(m, g)| (format!("beta_{m}"), *g)));
            x.iter().map(|r| gamma[0] + gamma[1] * r[0] + gamma[2] * r[1]).collect()
        }
    };
    let ws = WeightedScores::from_mass(&scores, &vec![1.0; n], &event)?;
    let cutoff = ws.cutoff_for_fpr(fpr_target)?.cutoff;
    let s = ws.summary(t0, cutoff);
    for (name, v) in [("auc", s.auc), ("tpr", s.tpr), ("npv", s.npv), ("ppv", s.ppv)] {
        if let Some(v) = v {
            values.push((name.to_string(), v));
        }
    }
    Ok(Truth { values })
}

//! Model fit, risk scores and accuracy summary from one set of weights.

use serde::{Deserialize, Serialize};

use crate::accuracy::{AccuracySummary, WeightedScores};
use crate::cohort::{censoring_weights, Cohort, StepSurvival};
use crate::error::Result;
use crate::estimators::{fit_cox_with, fit_glm_mass, Link, ModelFit, ModelKind};
use crate::newton::NewtonConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CutoffRule {
    /// Solve for the smallest cutoff with FPR at most the target.
    FprTarget(f64),
    /// Use this cutoff as is.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationSpec {
    pub model: ModelKind,
    pub t0: f64,
    /// Link for the GLM; Cox always uses complementary log-log.
    pub link: Link,
    pub cutoff: CutoffRule,
    pub newton: NewtonConfig,
}

impl EstimationSpec {
    pub fn new(model: ModelKind, t0: f64, fpr_target: f64) -> Self {
        EstimationSpec {
            model,
            t0,
            link: Link::Logit,
            cutoff: CutoffRule::FprTarget(fpr_target),
            newton: NewtonConfig::default(),
        }
    }

    pub fn with_fixed_cutoff(self, c: f64) -> Self {
        EstimationSpec {
            cutoff: CutoffRule::Fixed(c),
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub fit: ModelFit,
    pub accuracy: AccuracySummary,
    /// The FPR-target cutoff landed on the largest score.
    pub cutoff_at_max: bool,
}

/// Accuracy measures appended after the model coefficients.
pub const ACCURACY_PARAMS: [&str; 5] = ["auc", "tpr", "fpr", "npv", "ppv"];

impl Estimates {
    /// `alpha, beta..., auc, tpr, fpr, npv, ppv`.
    pub fn values(&self) -> Vec<Option<f64>> {
        let a = &self.accuracy;
        std::iter::once(Some(self.fit.alpha))
            .chain(self.fit.beta.iter().map(|b| Some(*b)))
            .chain([a.auc, a.tpr, a.fpr, a.npv, a.ppv])
            .collect()
    }
}

/// Names matching [`Estimates::values`] for the given marker names.
pub fn param_names(markers: &[&str]) -> Vec<String> {
    std::iter::once("alpha".to_string())
        .chain(markers.iter().map(|m| format!("beta_{m}")))
        .chain(ACCURACY_PARAMS.iter().map(|s| s.to_string()))
        .collect()
}

/// Fits the model with sampling weights `weights`, scores everyone with
/// positive mass and evaluates the accuracy measures.
pub fn estimate(cohort: &Cohort, weights: &[f64], g: &StepSurvival, spec: &EstimationSpec) -> Result<Estimates> {
    let omega = censoring_weights(cohort, spec.t0, g)?;
    let mass: Vec<f64> = weights.iter().zip(&omega).map(|(w, o)| w * o).collect();
    let fit = match spec.model {
        ModelKind::Cox => fit_cox_with(cohort, weights, spec.t0, &spec.newton)?,
        ModelKind::TdGlm => fit_glm_mass(cohort, &mass, spec.t0, spec.link, &spec.newton)?,
    };
    let scores: Vec<f64> = cohort
        .subjects()
        .iter()
        .zip(&mass)
        .map(|(s, m)| if *m != 0.0 { fit.risk(&s.markers) } else { 0.0 })
        .collect();
    let event: Vec<bool> = cohort.subjects().iter().map(|s| s.event_by(spec.t0)).collect();
    let ws = WeightedScores::from_mass(&scores, &mass, &event)?;
    let (cutoff, at_max) = match spec.cutoff {
        CutoffRule::Fixed(c) => (c, false),
        CutoffRule::FprTarget(target) => {
            let choice = ws.cutoff_for_fpr(target)?;
            (choice.cutoff, choice.at_max)
        }
    };
    Ok(Estimates {
        accuracy: ws.summary(spec.t0, cutoff),
        fit,
        cutoff_at_max: at_max,
    })
}

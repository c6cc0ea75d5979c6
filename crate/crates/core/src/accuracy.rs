//! Doubly weighted time-dependent accuracy of a risk score.
//!
//! Every subject carries mass `w_i * omega_i` (sampling weight times
//! censoring weight). Subjects with `T_i <= t0` form the event class,
//! `T_i > t0` the non-event class. A score is high risk when strictly
//! greater than the cutoff, and AUC pairs count only strict wins.
//! Ratios with an empty denominator are `None`.

use serde::{Deserialize, Serialize};

use crate::cohort::{censoring_weights, Cohort, StepSurvival};
use crate::error::{Error, Result};
use crate::weights::SamplingWeights;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub t0: f64,
    pub cutoff: f64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffChoice {
    pub cutoff: f64,
    pub achieved_fpr: f64,
    /// The cutoff sits at the largest observed score (nobody high risk).
    pub at_max: bool,
}

#[derive(Debug, Clone, Copy)]
struct Row {
    score: f64,
    mass: f64,
    event: bool,
}

/// Scores and masses of the subjects that enter the estimators.
#[derive(Debug, Clone)]
pub struct WeightedScores {
    rows: Vec<Row>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

impl WeightedScores {
    /// From per-subject scores and masses; `event[i]` is `T_i <= t0`.
    pub fn from_mass(scores: &[f64], mass: &[f64], event: &[bool]) -> Result<Self> {
        if scores.len() != mass.len() || scores.len() != event.len() {
            return Err(Error::DimensionMismatch {
                what: "scores",
                expected: mass.len(),
                actual: scores.len(),
            });
        }
        let rows = (0..scores.len())
            .filter(|&i| mass[i] != 0.0)
            .map(|i| Row {
                score: scores[i],
                mass: mass[i],
                event: event[i],
            })
            .collect();
        Ok(WeightedScores { rows })
    }

    pub fn new(scores: &[f64], cohort: &Cohort, weights: &[f64], g: &StepSurvival, t0: f64) -> Result<Self> {
        if weights.len() != cohort.len() {
            return Err(Error::DimensionMismatch {
                what: "weights",
                expected: cohort.len(),
                actual: weights.len(),
            });
        }
        let omega = censoring_weights(cohort, t0, g)?;
        let mass: Vec<f64> = weights.iter().zip(&omega).map(|(w, o)| w * o).collect();
        let event: Vec<bool> = cohort.subjects().iter().map(|s| s.event_by(t0)).collect();
        Self::from_mass(scores, &mass, &event)
    }

    fn class_mass(&self) -> (f64, f64) {
        self.rows.iter().fold((0.0, 0.0), |(e, n), r| {
            if r.event {
                (e + r.mass, n)
            } else {
                (e, n + r.mass)
            }
        })
    }

    pub fn rates(&self, c: f64) -> Rates {
        let (mut hi_event, mut hi_non, mut lo_event, mut lo_non) = (0.0, 0.0, 0.0, 0.0);
        for r in &self.rows {
            match (r.score > c, r.event) {
                (true, true) => hi_event += r.mass,
                (true, false) => hi_non += r.mass,
                (false, true) => lo_event += r.mass,
                (false, false) => lo_non += r.mass,
            }
        }
        Rates {
            tpr: ratio(hi_event, hi_event + lo_event),
            fpr: ratio(hi_non, hi_non + lo_non),
            ppv: ratio(hi_event, hi_event + hi_non),
            npv: ratio(lo_non, lo_event + lo_non),
        }
    }

    /// Mass-weighted share of (event, non-event) pairs where the event
    /// scores strictly higher.
    pub fn auc(&self) -> Option<f64> {
        let (e_mass, n_mass) = self.class_mass();
        let den = e_mass * n_mass;
        if den == 0.0 {
            return None;
        }
        let mut non: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| !r.event)
            .map(|r| (r.score, r.mass))
            .collect();
        non.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut prefix = Vec::with_capacity(non.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for (_, m) in &non {
            acc += m;
            prefix.push(acc);
        }
        let num: f64 = self
            .rows
            .iter()
            .filter(|r| r.event)
            .map(|r| {
                let below = non.partition_point(|(s, _)| *s < r.score);
                r.mass * prefix[below]
            })
            .sum();
        // The quotient can round a hair past 1 when every pair is a win.
        Some((num / den).min(1.0))
    }

    /// Smallest observed score `c` with `FPR(c) <= target`. The value just
    /// below the minimum score is also a candidate (everyone high risk).
    pub fn cutoff_for_fpr(&self, target: f64) -> Result<CutoffChoice> {
        let (_, n_mass) = self.class_mass();
        if n_mass == 0.0 {
            return Err(Error::ZeroDenominator("non-event mass"));
        }
        let mut scores: Vec<f64> = self.rows.iter().map(|r| r.score).collect();
        scores.sort_by(f64::total_cmp);
        scores.dedup();
        let max = *scores.last().expect("non-event mass implies rows");
        let mut non: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| !r.event)
            .map(|r| (r.score, r.mass))
            .collect();
        non.sort_by(|a, b| a.0.total_cmp(&b.0));
        // suffix[k]: non-event mass at positions >= k
        let mut suffix = vec![0.0; non.len() + 1];
        for k in (0..non.len()).rev() {
            suffix[k] = suffix[k + 1] + non[k].1;
        }
        let fpr_at = |c: f64| {
            let k = non.partition_point(|(s, _)| *s <= c);
            suffix[k] / n_mass
        };
        let below_min = scores[0].next_down();
        for c in std::iter::once(below_min).chain(scores.iter().copied()) {
            let f = fpr_at(c);
            if f <= target {
                return Ok(CutoffChoice {
                    cutoff: c,
                    achieved_fpr: f,
                    at_max: c == max,
                });
            }
        }
        Ok(CutoffChoice {
            cutoff: max,
            achieved_fpr: fpr_at(max),
            at_max: true,
        })
    }

    pub fn summary(&self, t0: f64, cutoff: f64) -> AccuracySummary {
        let r = self.rates(cutoff);
        AccuracySummary {
            t0,
            cutoff,
            tpr: r.tpr,
            fpr: r.fpr,
            ppv: r.ppv,
            npv: r.npv,
            auc: self.auc(),
        }
    }
}

/// TPR, FPR, PPV and NPV at cutoff `c`.
pub fn accuracy_at_cutoff(
    scores: &[f64],
    cohort: &Cohort,
    w: &SamplingWeights,
    g: &StepSurvival,
    t0: f64,
    c: f64,
) -> Result<Rates> {
    Ok(WeightedScores::new(scores, cohort, &w.values, g, t0)?.rates(c))
}

pub fn auc(scores: &[f64], cohort: &Cohort, w: &SamplingWeights, g: &StepSurvival, t0: f64) -> Result<Option<f64>> {
    Ok(WeightedScores::new(scores, cohort, &w.values, g, t0)?.auc())
}

pub fn cutoff_for_fpr(
    scores: &[f64],
    cohort: &Cohort,
    w: &SamplingWeights,
    g: &StepSurvival,
    t0: f64,
    target: f64,
) -> Result<CutoffChoice> {
    WeightedScores::new(scores, cohort, &w.values, g, t0)?.cutoff_for_fpr(target)
}

//! Cohort data model, risk sets and the Kaplan-Meier censoring survival.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One cohort member: observed time, event flag, markers and optional
/// matching variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: usize,
    pub time: f64,
    pub delta: bool,
    pub markers: Vec<f64>,
    pub match_vars: Option<Vec<f64>>,
}

impl Subject {
    pub fn new(id: usize, time: f64, delta: bool, markers: Vec<f64>) -> Self {
        Subject {
            id,
            time,
            delta,
            markers,
            match_vars: None,
        }
    }

    pub fn with_match_vars(mut self, match_vars: Vec<f64>) -> Self {
        self.match_vars = Some(match_vars);
        self
    }

    /// Outcome of the binary event-by-`t0` indicator that the censoring
    /// weight makes observable.
    pub fn event_by(&self, t0: f64) -> bool {
        self.time <= t0
    }
}

/// A validated full cohort. Subject ids are `0..n` in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    subjects: Vec<Subject>,
    n_markers: usize,
    n_match: Option<usize>,
}

impl Cohort {
    pub fn new(subjects: Vec<Subject>) -> Result<Self> {
        if subjects.len() < 2 {
            return Err(Error::InvalidCohort(format!(
                "need at least 2 subjects, got {}",
                subjects.len()
            )));
        }
        let n_markers = subjects[0].markers.len();
        let n_match = subjects[0].match_vars.as_ref().map(Vec::len);
        for (k, s) in subjects.iter().enumerate() {
            if s.id != k {
                return Err(Error::InvalidCohort(format!(
                    "subject at position {k} has id {}; ids must be 0..n",
                    s.id
                )));
            }
            if !(s.time.is_finite() && s.time > 0.0) {
                return Err(Error::InvalidCohort(format!(
                    "subject {k} has non-positive or non-finite time {}",
                    s.time
                )));
            }
            if s.markers.len() != n_markers {
                return Err(Error::DimensionMismatch {
                    what: "markers",
                    expected: n_markers,
                    actual: s.markers.len(),
                });
            }
            if s.markers.iter().any(|z| !z.is_finite()) {
                return Err(Error::InvalidCohort(format!(
                    "subject {k} has a non-finite marker"
                )));
            }
            match (&s.match_vars, n_match) {
                (None, None) => {}
                (Some(m), Some(q)) if m.len() == q => {
                    if m.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidCohort(format!(
                            "subject {k} has a non-finite matching variable"
                        )));
                    }
                }
                (m, q) => {
                    return Err(Error::DimensionMismatch {
                        what: "match_vars",
                        expected: q.unwrap_or(0),
                        actual: m.as_ref().map_or(0, Vec::len),
                    })
                }
            }
        }
        Ok(Cohort {
            subjects,
            n_markers,
            n_match,
        })
    }

    /// Builds a cohort from parallel columns; `markers[i]` is subject i's
    /// marker vector.
    pub fn from_columns(times: &[f64], deltas: &[bool], markers: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != deltas.len() || times.len() != markers.len() {
            return Err(Error::DimensionMismatch {
                what: "cohort columns",
                expected: times.len(),
                actual: deltas.len().min(markers.len()),
            });
        }
        let subjects = markers
            .into_iter()
            .enumerate()
            .map(|(i, z)| Subject::new(i, times[i], deltas[i], z))
            .collect();
        Cohort::new(subjects)
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn subject(&self, i: usize) -> &Subject {
        &self.subjects[i]
    }

    pub fn n_markers(&self) -> usize {
        self.n_markers
    }

    pub fn n_match_vars(&self) -> Option<usize> {
        self.n_match
    }

    pub fn n_events(&self) -> usize {
        self.subjects.iter().filter(|s| s.delta).count()
    }

    pub fn times(&self) -> Vec<f64> {
        self.subjects.iter().map(|s| s.time).collect()
    }

    pub fn deltas(&self) -> Vec<bool> {
        self.subjects.iter().map(|s| s.delta).collect()
    }

    /// Validates a matching tolerance against this cohort's matching variables.
    pub fn check_match_tol(&self, match_tol: Option<&[f64]>) -> Result<()> {
        if let Some(tol) = match_tol {
            let q = self.n_match.ok_or(Error::DimensionMismatch {
                what: "match_tol",
                expected: 0,
                actual: tol.len(),
            })?;
            if tol.len() != q {
                return Err(Error::DimensionMismatch {
                    what: "match_tol",
                    expected: q,
                    actual: tol.len(),
                });
            }
            if tol.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
                return Err(Error::InvalidDesign(
                    "matching tolerances must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(())
    }

    /// Membership test `k ∈ R_i` without validation. Callers check the
    /// tolerance once via [`Cohort::check_match_tol`].
    #[inline]
    pub fn in_risk_set(&self, i: usize, k: usize, match_tol: Option<&[f64]>) -> bool {
        let si = &self.subjects[i];
        let sk = &self.subjects[k];
        if sk.time < si.time {
            return false;
        }
        match match_tol {
            None => true,
            Some(tol) => {
                let (mi, mk) = match (&si.match_vars, &sk.match_vars) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return false,
                };
                mi.iter()
                    .zip(mk)
                    .zip(tol)
                    .all(|((a, b), t)| (a - b).abs() <= *t)
            }
        }
    }

    /// The risk set of subject `i`: everyone with `T_k >= T_i`, restricted to
    /// matched subjects when a tolerance is given. Always contains `i`.
    pub fn risk_set(&self, i: usize, match_tol: Option<&[f64]>) -> Result<Vec<usize>> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange { index: i, n: self.len() });
        }
        self.check_match_tol(match_tol)?;
        Ok((0..self.len())
            .filter(|&k| self.in_risk_set(i, k, match_tol))
            .collect())
    }

    pub fn risk_set_size(&self, i: usize, match_tol: Option<&[f64]>) -> usize {
        (0..self.len())
            .filter(|&k| self.in_risk_set(i, k, match_tol))
            .count()
    }
}

/// Left-continuous step estimate of `P(C >= t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSurvival {
    jump_times: Vec<f64>,
    values: Vec<f64>,
    floor: Option<f64>,
}

impl StepSurvival {
    /// A survival curve with no jumps (identically 1).
    pub fn constant_one() -> Self {
        StepSurvival {
            jump_times: Vec::new(),
            values: Vec::new(),
            floor: None,
        }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True if the fitted curve reaches zero at its last jump.
    pub fn reaches_zero(&self) -> bool {
        self.values.last().is_some_and(|v| *v <= 0.0)
    }

    fn raw(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&x| x < t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// True when evaluation at `t` would be zero and is clamped.
    pub fn is_clamped_at(&self, t: f64) -> bool {
        self.raw(t) <= 0.0
    }

    /// Product over jumps strictly below `t`. A zero value is clamped to the
    /// smallest positive fitted value; `None` only if no positive value exists.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let v = self.raw(t);
        if v > 0.0 {
            Some(v)
        } else {
            self.floor
        }
    }
}

/// Kaplan-Meier estimate of the censoring survival `P(C >= t)`, treating
/// `delta == false` as the event. Each subject's risk and censoring
/// contributions are scaled by its multiplier when given. At tied times
/// events leave the risk set before censorings happen.
pub fn km_censoring_survival(cohort: &Cohort, multipliers: Option<&[f64]>) -> Result<StepSurvival> {
    let n = cohort.len();
    if let Some(m) = multipliers {
        if m.len() != n {
            return Err(Error::DimensionMismatch {
                what: "multipliers",
                expected: n,
                actual: m.len(),
            });
        }
        if m.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidCohort(
                "multipliers must be finite and nonnegative".into(),
            ));
        }
    }
    let weight = |k: usize| multipliers.map_or(1.0, |m| m[k]);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cohort.subject(a).time.total_cmp(&cohort.subject(b).time));

    // Group by distinct time, then build at-risk totals from the top.
    struct Level {
        time: f64,
        total: f64,
        events: f64,
        censored: f64,
    }
    let mut levels: Vec<Level> = Vec::new();
    for &k in &order {
        let s = cohort.subject(k);
        let w = weight(k);
        match levels.last_mut() {
            Some(l) if l.time == s.time => {
                l.total += w;
                if s.delta {
                    l.events += w;
                } else {
                    l.censored += w;
                }
            }
            _ => levels.push(Level {
                time: s.time,
                total: w,
                events: if s.delta { w } else { 0.0 },
                censored: if s.delta { 0.0 } else { w },
            }),
        }
    }
    let mut at_risk = vec![0.0; levels.len()];
    let mut acc = 0.0;
    for (k, l) in levels.iter().enumerate().rev() {
        acc += l.total;
        at_risk[k] = acc;
    }

    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut surv = 1.0;
    let mut floor: Option<f64> = None;
    for (l, r) in levels.iter().zip(&at_risk) {
        if l.censored > 0.0 {
            let exposed = r - l.events;
            let factor = if exposed > 0.0 {
                (1.0 - l.censored / exposed).max(0.0)
            } else {
                0.0
            };
            surv *= factor;
            jump_times.push(l.time);
            values.push(surv);
            if surv > 0.0 {
                floor = Some(surv);
            }
        }
    }
    Ok(StepSurvival {
        jump_times,
        values,
        floor,
    })
}

/// Inverse probability of censoring weight for the event-by-`t0` outcome.
pub fn censoring_weight(subject: &Subject, t0: f64, g: &StepSurvival) -> Result<f64> {
    if subject.time <= t0 {
        if !subject.delta {
            return Ok(0.0);
        }
        let gt = g.eval(subject.time).ok_or(Error::ZeroDenominator("censoring weight"))?;
        Ok(1.0 / gt)
    } else {
        let gt0 = g.eval(t0).ok_or(Error::ZeroDenominator("censoring weight"))?;
        Ok(1.0 / gt0)
    }
}

/// Censoring weights for the whole cohort.
pub fn censoring_weights(cohort: &Cohort, t0: f64, g: &StepSurvival) -> Result<Vec<f64>> {
    cohort
        .subjects()
        .iter()
        .map(|s| censoring_weight(s, t0, g))
        .collect()
}

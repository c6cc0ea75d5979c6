//! Nested case-control sampling with a sampled fraction of events as cases.
//!
//! Cases are a fixed-size simple random sample of the events. Each case then
//! draws up to `m` controls uniformly from its (optionally matched) risk set,
//! independently across cases, so one subject may serve several cases and an
//! event may be drawn as a control.

use std::collections::BTreeMap;
use std::ops::{Div, Mul, Sub};

use num_traits::{FromPrimitive, One, Zero};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cohort::Cohort;
use crate::error::{Error, Result};

/// Sampling design: case fraction, controls per case and optional matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NccDesign {
    pub pi1: f64,
    pub m: usize,
    pub match_tol: Option<Vec<f64>>,
}

impl NccDesign {
    pub fn new(pi1: f64, m: usize, match_tol: Option<Vec<f64>>) -> Result<Self> {
        if !(pi1 > 0.0 && pi1 <= 1.0) {
            return Err(Error::InvalidDesign(format!("pi1 must lie in (0, 1], got {pi1}")));
        }
        if m == 0 {
            return Err(Error::InvalidDesign("m must be at least 1".into()));
        }
        Ok(NccDesign { pi1, m, match_tol })
    }

    pub fn match_tol(&self) -> Option<&[f64]> {
        self.match_tol.as_deref()
    }
}

/// Case -> selected controls. Every case has an entry, possibly empty.
pub type ControlAssignments = BTreeMap<usize, Vec<usize>>;

/// A realized NCC sub-cohort with the quantities the weights need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NccSample {
    design: NccDesign,
    v1: Vec<bool>,
    assignments: ControlAssignments,
    v0: Vec<bool>,
    p0: Vec<f64>,
    pi1_realized: f64,
    selected: Vec<bool>,
}

impl NccSample {
    /// Assembles a sample from a case vector and control assignments,
    /// validating them against the cohort and deriving `v0`, `p0`,
    /// the realized case fraction and the selection flags.
    pub fn from_parts(
        cohort: &Cohort,
        design: NccDesign,
        v1: Vec<bool>,
        assignments: ControlAssignments,
    ) -> Result<Self> {
        let n = cohort.len();
        if v1.len() != n {
            return Err(Error::DimensionMismatch {
                what: "v1",
                expected: n,
                actual: v1.len(),
            });
        }
        cohort.check_match_tol(design.match_tol())?;
        let n_events = cohort.n_events();
        if n_events == 0 {
            return Err(Error::NoEvents);
        }
        let p0 = control_inclusion_prob(cohort, &v1, &assignments, design.match_tol())?;
        let v0 = control_indicators(cohort, &v1, &assignments, design.match_tol());
        let n_cases = v1.iter().filter(|&&v| v).count();
        let pi1_realized = n_cases as f64 / n_events as f64;
        let selected = v1.iter().zip(&v0).map(|(a, b)| *a || *b).collect();
        Ok(NccSample {
            design,
            v1,
            assignments,
            v0,
            p0,
            pi1_realized,
            selected,
        })
    }

    pub fn design(&self) -> &NccDesign {
        &self.design
    }
    pub fn v1(&self) -> &[bool] {
        &self.v1
    }
    pub fn assignments(&self) -> &ControlAssignments {
        &self.assignments
    }
    pub fn v0(&self) -> &[bool] {
        &self.v0
    }
    pub fn p0(&self) -> &[f64] {
        &self.p0
    }
    pub fn pi1_realized(&self) -> f64 {
        self.pi1_realized
    }
    pub fn selected(&self) -> &[bool] {
        &self.selected
    }
    pub fn len(&self) -> usize {
        self.v1.len()
    }
    pub fn is_empty(&self) -> bool {
        self.v1.is_empty()
    }
    pub fn n_cases(&self) -> usize {
        self.assignments.len()
    }

    /// All (case, control) pairs in case-then-control order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assignments
            .iter()
            .flat_map(|(&i, ctrls)| ctrls.iter().map(move |&l| (i, l)))
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Marks `round(pi1 * D)` of the `D` events as cases, uniformly without
/// replacement.
pub fn draw_cases<R: Rng + ?Sized>(cohort: &Cohort, design: &NccDesign, rng: &mut R) -> Result<Vec<bool>> {
    let events: Vec<usize> = (0..cohort.len()).filter(|&i| cohort.subject(i).delta).collect();
    if events.is_empty() {
        return Err(Error::NoEvents);
    }
    let k = round_half_up(design.pi1 * events.len() as f64).min(events.len());
    let mut v1 = vec![false; cohort.len()];
    for pos in index::sample(rng, events.len(), k) {
        v1[events[pos]] = true;
    }
    Ok(v1)
}

/// Draws `min(m, |R_i| - 1)` controls for every case `i`, uniformly without
/// replacement from `R_i \ {i}`. Cases are visited in index order.
pub fn draw_controls<R: Rng + ?Sized>(
    cohort: &Cohort,
    v1: &[bool],
    design: &NccDesign,
    rng: &mut R,
) -> Result<ControlAssignments> {
    if v1.len() != cohort.len() {
        return Err(Error::DimensionMismatch {
            what: "v1",
            expected: cohort.len(),
            actual: v1.len(),
        });
    }
    let tol = design.match_tol();
    cohort.check_match_tol(tol)?;
    let mut out = ControlAssignments::new();
    for i in (0..cohort.len()).filter(|&i| v1[i]) {
        let eligible: Vec<usize> = (0..cohort.len())
            .filter(|&k| k != i && cohort.in_risk_set(i, k, tol))
            .collect();
        let take = design.m.min(eligible.len());
        let mut ctrls: Vec<usize> = index::sample(rng, eligible.len(), take)
            .into_iter()
            .map(|p| eligible[p])
            .collect();
        ctrls.sort_unstable();
        out.insert(i, ctrls);
    }
    Ok(out)
}

/// Numeric types the inclusion-probability product can be evaluated in.
/// `f64` in production; exact rationals in verification code.
pub trait ProbScalar:
    Clone + One + Zero + FromPrimitive + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
}

impl<T> ProbScalar for T where
    T: Clone + One + Zero + FromPrimitive + Sub<Output = T> + Mul<Output = T> + Div<Output = T>
{
}

/// Per-case factor `1 - count / (n_i - 1)` of the inclusion product.
#[inline]
pub fn case_factor<T: ProbScalar>(count: T, risk_size: usize) -> T {
    T::one() - count / T::from_usize(risk_size - 1).expect("usize converts")
}

/// `p_j = 1 - prod_{cases i : j in R_i, j != i} {1 - count_i / (n_i - 1)}`
/// for every subject, with cases supplied in increasing index order as
/// `(case, count, n_i)`.
pub fn inclusion_probabilities<T: ProbScalar>(
    cohort: &Cohort,
    cases: &[(usize, T, usize)],
    match_tol: Option<&[f64]>,
) -> Result<Vec<T>> {
    let n = cohort.len();
    let mut prod = vec![T::one(); n];
    for (i, count, risk_size) in cases {
        if *risk_size <= 1 {
            if !count.is_zero() {
                return Err(Error::InconsistentSample(format!(
                    "case {i} has controls but an empty risk set"
                )));
            }
            continue;
        }
        let f = case_factor(count.clone(), *risk_size);
        for (j, p) in prod.iter_mut().enumerate() {
            if j != *i && cohort.in_risk_set(*i, j, match_tol) {
                *p = p.clone() * f.clone();
            }
        }
    }
    Ok(prod.into_iter().map(|p| T::one() - p).collect())
}

fn validate_assignments(
    cohort: &Cohort,
    v1: &[bool],
    assignments: &ControlAssignments,
    match_tol: Option<&[f64]>,
) -> Result<()> {
    let n = cohort.len();
    for (i, &is_case) in v1.iter().enumerate() {
        if is_case && !cohort.subject(i).delta {
            return Err(Error::InconsistentSample(format!("case {i} is not an event")));
        }
        if is_case != assignments.contains_key(&i) {
            return Err(Error::InconsistentSample(format!(
                "case flags and assignment keys disagree at subject {i}"
            )));
        }
    }
    for (&i, ctrls) in assignments {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        for (k, &l) in ctrls.iter().enumerate() {
            if l >= n {
                return Err(Error::IndexOutOfRange { index: l, n });
            }
            if l == i || !cohort.in_risk_set(i, l, match_tol) {
                return Err(Error::InconsistentSample(format!(
                    "control {l} is not in the risk set of case {i}"
                )));
            }
            if ctrls[..k].contains(&l) {
                return Err(Error::InconsistentSample(format!(
                    "control {l} listed twice for case {i}"
                )));
            }
        }
    }
    Ok(())
}

/// Probability that each subject is selected as a control at least once,
/// given the cases, using each case's realized number of controls.
pub fn control_inclusion_prob(
    cohort: &Cohort,
    v1: &[bool],
    assignments: &ControlAssignments,
    match_tol: Option<&[f64]>,
) -> Result<Vec<f64>> {
    cohort.check_match_tol(match_tol)?;
    validate_assignments(cohort, v1, assignments, match_tol)?;
    let cases: Vec<(usize, f64, usize)> = assignments
        .iter()
        .map(|(&i, c)| (i, c.len() as f64, cohort.risk_set_size(i, match_tol)))
        .collect();
    inclusion_probabilities(cohort, &cases, match_tol)
}

/// `V_{0j} = 1 - prod_{i: j in R_i} (1 - V_{1i} V^i_{0j})`.
fn control_indicators(
    cohort: &Cohort,
    v1: &[bool],
    assignments: &ControlAssignments,
    match_tol: Option<&[f64]>,
) -> Vec<bool> {
    let mut prod = vec![1u8; cohort.len()];
    for (&i, ctrls) in assignments {
        debug_assert!(v1[i]);
        for &l in ctrls {
            debug_assert!(cohort.in_risk_set(i, l, match_tol));
            prod[l] *= 0;
        }
    }
    prod.into_iter().map(|p| p == 0).collect()
}

/// Draws cases then controls and assembles the sample.
pub fn sample<R: Rng + ?Sized>(cohort: &Cohort, design: &NccDesign, rng: &mut R) -> Result<NccSample> {
    let v1 = draw_cases(cohort, design, rng)?;
    let assignments = draw_controls(cohort, &v1, design, rng)?;
    NccSample::from_parts(cohort, design.clone(), v1, assignments)
}

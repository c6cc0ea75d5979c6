//! Resampling-free inference by perturbing every random component of the
//! estimator with positive unit-mean multipliers.
//!
//! One multiplier `I_jj` per subject perturbs the case indicator and the
//! censoring Kaplan-Meier; one multiplier `I_il` per sampled (case, control)
//! pair perturbs the control indicator and the realized control count in the
//! inclusion probability. Multipliers that would only ever be multiplied by
//! zero are never drawn, so the state is `O(N + pairs)` rather than `N^2`.
//! With all multipliers equal to one the perturbed weights reproduce the
//! point weights bit for bit.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cohort::{km_censoring_survival, Cohort};
use crate::error::{Error, Result};
use crate::pipeline::{estimate, EstimationSpec, Estimates};
use crate::sampling::{case_factor, NccSample};
use crate::seed::rng_for;
use crate::weights::new_weight_value;

/// One draw of the perturbation multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierDraw {
    /// `I_jj` for every subject.
    pub diag: Vec<f64>,
    /// `I_il` for every sampled (case, control) pair.
    pub pair: BTreeMap<(usize, usize), f64>,
}

impl MultiplierDraw {
    /// All multipliers equal to one.
    pub fn ones(sample: &NccSample) -> Self {
        MultiplierDraw {
            diag: vec![1.0; sample.len()],
            pair: sample.pairs().map(|p| (p, 1.0)).collect(),
        }
    }
}

/// Draws Exp(1) multipliers: the diagonal in subject order, then the pairs
/// in case-then-control order.
pub fn draw_multipliers<R: Rng + ?Sized>(sample: &NccSample, rng: &mut R) -> MultiplierDraw {
    let diag = (0..sample.len()).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let pair = sample.pairs().map(|p| (p, rng.sample::<f64, _>(Exp1))).collect();
    MultiplierDraw { diag, pair }
}

#[derive(Debug, Clone)]
struct CaseEntry {
    case: usize,
    risk_size: usize,
    controls: Vec<usize>,
}

#[derive(Debug, Clone)]
struct ControlEntry {
    subject: usize,
    /// Positions in `cases` of every case whose risk set holds the subject.
    eligible: Vec<usize>,
    /// Cases that actually drew the subject.
    drawn_by: Vec<usize>,
}

/// Sample structure precomputed once and reused for every replicate.
#[derive(Debug, Clone)]
pub struct PerturbationPlan {
    delta: Vec<bool>,
    v1: Vec<bool>,
    cases: Vec<CaseEntry>,
    /// Non-event subjects drawn at least once, in index order.
    controls: Vec<ControlEntry>,
}

impl PerturbationPlan {
    pub fn new(cohort: &Cohort, sample: &NccSample) -> Result<Self> {
        if sample.len() != cohort.len() {
            return Err(Error::DimensionMismatch {
                what: "sample",
                expected: cohort.len(),
                actual: sample.len(),
            });
        }
        let tol = sample.design().match_tol();
        let cases: Vec<CaseEntry> = sample
            .assignments()
            .iter()
            .map(|(&case, ctrls)| CaseEntry {
                case,
                risk_size: cohort.risk_set_size(case, tol),
                controls: ctrls.clone(),
            })
            .collect();
        let controls = (0..cohort.len())
            .filter(|&j| !cohort.subject(j).delta && sample.v0()[j])
            .map(|j| {
                let eligible: Vec<usize> = cases
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.risk_size > 1 && cohort.in_risk_set(c.case, j, tol))
                    .map(|(k, _)| k)
                    .collect();
                let drawn_by = cases
                    .iter()
                    .filter(|c| c.controls.contains(&j))
                    .map(|c| c.case)
                    .collect();
                ControlEntry {
                    subject: j,
                    eligible,
                    drawn_by,
                }
            })
            .collect();
        Ok(PerturbationPlan {
            delta: cohort.deltas(),
            v1: sample.v1().to_vec(),
            cases,
            controls,
        })
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    fn check_draw(&self, draw: &MultiplierDraw) -> Result<()> {
        if draw.diag.len() != self.len() {
            return Err(Error::DimensionMismatch {
                what: "diagonal multipliers",
                expected: self.len(),
                actual: draw.diag.len(),
            });
        }
        let n_pairs: usize = self.cases.iter().map(|c| c.controls.len()).sum();
        if draw.pair.len() != n_pairs {
            return Err(Error::DimensionMismatch {
                what: "pair multipliers",
                expected: n_pairs,
                actual: draw.pair.len(),
            });
        }
        Ok(())
    }

    /// Perturbed case fraction `sum I_ii delta_i V1_i / sum I_ii delta_i`.
    pub fn pi1(&self, draw: &MultiplierDraw) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (j, &d) in self.delta.iter().enumerate() {
            if d {
                den += draw.diag[j];
                if self.v1[j] {
                    num += draw.diag[j];
                }
            }
        }
        num / den
    }

    /// Perturbed new weights for every subject.
    pub fn weights(&self, draw: &MultiplierDraw) -> Result<Vec<f64>> {
        self.check_draw(draw)?;
        let pi1 = self.pi1(draw);
        if !(pi1 > 0.0) {
            return Err(Error::ZeroDenominator("perturbed case fraction"));
        }
        let pair = |i: usize, l: usize| -> Result<f64> {
            draw.pair
                .get(&(i, l))
                .copied()
                .ok_or_else(|| Error::InconsistentSample(format!("no multiplier for pair ({i}, {l})")))
        };
        // Perturbed control counts, one per case.
        let counts: Vec<f64> = self
            .cases
            .iter()
            .map(|c| c.controls.iter().map(|&l| pair(c.case, l)).sum::<Result<f64>>())
            .collect::<Result<_>>()?;

        let mut w = vec![0.0; self.len()];
        for (j, &d) in self.delta.iter().enumerate() {
            if d {
                let v1 = if self.v1[j] { draw.diag[j] } else { 0.0 };
                w[j] = new_weight_value(j, true, v1, 0.0, 0.0, pi1)?;
            }
        }
        for c in &self.controls {
            let j = c.subject;
            let mut miss = 1.0;
            for &i in &c.drawn_by {
                miss *= 1.0 - pair(i, j)?;
            }
            let v0 = 1.0 - miss;
            let mut prod = 1.0;
            for &k in &c.eligible {
                prod *= case_factor(counts[k], self.cases[k].risk_size);
            }
            w[j] = new_weight_value(j, false, 0.0, v0, 1.0 - prod, pi1)?;
        }
        Ok(w)
    }
}

/// Refits with perturbed weights and perturbed censoring survival. The
/// cutoff rule in `spec` is applied to the perturbed fit as is.
pub fn perturbed_estimate(
    cohort: &Cohort,
    plan: &PerturbationPlan,
    draw: &MultiplierDraw,
    spec: &EstimationSpec,
) -> Result<Estimates> {
    let w = plan.weights(draw)?;
    let g = km_censoring_survival(cohort, Some(&draw.diag))?;
    estimate(cohort, &w, &g, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationResult {
    pub point: Vec<Option<f64>>,
    pub se: Vec<Option<f64>>,
    pub ci_lower: Vec<Option<f64>>,
    pub ci_upper: Vec<Option<f64>>,
    /// Replicates that converged.
    pub b_used: usize,
    pub b_total: usize,
}

/// Two-sided standard normal quantile for a confidence level.
pub fn normal_quantile(level: f64) -> f64 {
    if level == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + level / 2.0)
}

/// Welford's update, which is exactly zero for constant input.
fn sample_sd(values: &[f64]) -> f64 {
    let (mut mean, mut ss) = (0.0, 0.0);
    for (k, &v) in values.iter().enumerate() {
        let d = v - mean;
        mean += d / (k + 1) as f64;
        ss += d * (v - mean);
    }
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Standard errors as the sample standard deviation of the replicates and
/// Wald intervals `point +- z SE`.
pub fn se_ci(point: &[f64], replicates: &[Vec<f64>], level: f64) -> Result<PerturbationResult> {
    if replicates.len() < 2 {
        return Err(Error::TooFewReplicates(replicates.len()));
    }
    let opt_reps: Vec<Vec<Option<f64>>> = replicates
        .iter()
        .map(|r| r.iter().map(|v| Some(*v)).collect())
        .collect();
    let opt_point: Vec<Option<f64>> = point.iter().map(|v| Some(*v)).collect();
    summarize(&opt_point, &opt_reps, replicates.len(), level)
}

/// Like [`se_ci`], but a parameter that is undefined in the point estimate
/// or in a replicate is handled per parameter; fewer than two defined
/// replicate values leave that parameter's SE and CI undefined.
fn summarize(point: &[Option<f64>], replicates: &[Vec<Option<f64>>], b_total: usize, level: f64) -> Result<PerturbationResult> {
    let p = point.len();
    if let Some(r) = replicates.iter().find(|r| r.len() != p) {
        return Err(Error::DimensionMismatch {
            what: "replicate",
            expected: p,
            actual: r.len(),
        });
    }
    let z = normal_quantile(level);
    let mut se = vec![None; p];
    let mut lo = vec![None; p];
    let mut hi = vec![None; p];
    for k in 0..p {
        let Some(theta) = point[k] else { continue };
        let vals: Vec<f64> = replicates.iter().filter_map(|r| r[k]).collect();
        if vals.len() < 2 {
            continue;
        }
        let s = sample_sd(&vals);
        se[k] = Some(s);
        lo[k] = Some(theta - z * s);
        hi[k] = Some(theta + z * s);
    }
    Ok(PerturbationResult {
        point: point.to_vec(),
        se,
        ci_lower: lo,
        ci_upper: hi,
        b_used: replicates.len(),
        b_total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationConfig {
    pub n_perturb: usize,
    pub level: f64,
    /// Replicate `b` draws from the stream derived from `(seed, b)`.
    pub seed: u64,
}

/// Runs `n_perturb` perturbed refits in parallel around `point`. Each
/// replicate re-applies the cutoff rule of `spec`: with an FPR target the
/// cutoff is re-solved on the perturbed scores and weights, so the
/// replicates vary the same estimator the point estimate uses. Holding the
/// point cutoff fixed instead lets the realized FPR drift between
/// replicates and overstates the spread of PPV and understates that of NPV.
/// Replicates whose refit does not converge are dropped; the count used is
/// reported.
pub fn perturb(
    cohort: &Cohort,
    sample: &NccSample,
    point: &Estimates,
    spec: &EstimationSpec,
    cfg: &PerturbationConfig,
) -> Result<PerturbationResult> {
    let plan = PerturbationPlan::new(cohort, sample)?;
    let outcomes: Vec<Result<Option<Vec<Option<f64>>>>> = (0..cfg.n_perturb as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_for(&[cfg.seed, b]);
            let draw = draw_multipliers(sample, &mut rng);
            match perturbed_estimate(cohort, &plan, &draw, spec) {
                Ok(est) => Ok(Some(est.values())),
                Err(Error::Fit(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut reps = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        if let Some(v) = o? {
            reps.push(v);
        }
    }
    summarize(&point.values(), &reps, cfg.n_perturb, cfg.level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::Subject;
    use crate::sampling::{sample as draw_sample, NccDesign};
    use crate::weights::{SamplingWeights, WeightScheme};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_cohort(n: usize, seed: u64, matched: bool) -> Cohort {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let subjects = (0..n)
            .map(|i| {
                let s = Subject::new(i, rng.gen_range(0.1..5.0), rng.gen_bool(0.4), vec![rng.gen()]);
                if matched {
                    s.with_match_vars(vec![rng.gen_range(0..3) as f64])
                } else {
                    s
                }
            })
            .collect();
        Cohort::new(subjects).unwrap()
    }

    #[test]
    fn unit_multipliers_reproduce_point_weights_exactly() {
        for (seed, matched) in [(1, false), (2, true), (3, false)] {
            let cohort = random_cohort(80, seed, matched);
            let tol = matched.then(|| vec![0.0]);
            let design = NccDesign::new(0.5, 2, tol).unwrap();
            let s = draw_sample(&cohort, &design, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let plan = PerturbationPlan::new(&cohort, &s).unwrap();
            let w = plan.weights(&MultiplierDraw::ones(&s)).unwrap();
            let expect = SamplingWeights::compute(WeightScheme::New, &s, &cohort).unwrap();
            assert_eq!(w, expect.values);
        }
    }

    /// Dense evaluation of the perturbed weight with a full N x N multiplier
    /// matrix; entries never multiplied by a nonzero indicator get junk.
    fn dense_weights(cohort: &Cohort, s: &NccSample, draw: &MultiplierDraw, junk: u64) -> Vec<f64> {
        let n = cohort.len();
        let mut rng = ChaCha8Rng::seed_from_u64(junk);
        let mut big = vec![vec![0.0; n]; n];
        for (i, row) in big.iter_mut().enumerate() {
            for (l, x) in row.iter_mut().enumerate() {
                *x = if i == l { draw.diag[i] } else { draw.pair.get(&(i, l)).copied().unwrap_or(rng.gen_range(0.0..7.0)) };
            }
        }
        let tol = s.design().match_tol();
        let v1: Vec<f64> = s.v1().iter().map(|&b| b as u8 as f64).collect();
        let v0i = |i: usize, l: usize| s.assignments().get(&i).map_or(0.0, |c| c.contains(&l) as u8 as f64);
        let delta: Vec<f64> = cohort.deltas().iter().map(|&b| b as u8 as f64).collect();
        let num: f64 = (0..n).map(|i| big[i][i] * delta[i] * v1[i]).sum();
        let den: f64 = (0..n).map(|i| big[i][i] * delta[i]).sum();
        let pi1 = num / den;
        (0..n)
            .map(|j| {
                let mut v0 = 1.0;
                let mut p = 1.0;
                for i in 0..n {
                    if !cohort.in_risk_set(i, j, tol) {
                        continue;
                    }
                    v0 *= 1.0 - v1[i] * v0i(i, j) * big[i][j];
                    if i != j && v1[i] != 0.0 {
                        let n_i = cohort.risk_set_size(i, tol) as f64;
                        let cnt: f64 = (0..n).map(|l| big[i][l] * v0i(i, l)).sum();
                        p *= 1.0 - v1[i] * cnt / (n_i - 1.0);
                    }
                }
                let (v0, p0) = (1.0 - v0, 1.0 - p);
                let ctrl = if v0 == 0.0 { 0.0 } else { v0 / p0 };
                delta[j] * v1[j] * big[j][j] / pi1 + (1.0 - delta[j]) * ctrl
            })
            .collect()
    }

    #[test]
    fn sparse_weights_match_dense_formula() {
        for (seed, matched) in [(10, false), (11, true)] {
            let cohort = random_cohort(60, seed, matched);
            let tol = matched.then(|| vec![1.0]);
            let design = NccDesign::new(0.6, 3, tol).unwrap();
            let s = draw_sample(&cohort, &design, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let plan = PerturbationPlan::new(&cohort, &s).unwrap();
            for rep in 0..5 {
                let draw = draw_multipliers(&s, &mut ChaCha8Rng::seed_from_u64(100 + rep));
                let sparse = plan.weights(&draw).unwrap();
                let dense = dense_weights(&cohort, &s, &draw, rep);
                for (a, b) in sparse.iter().zip(&dense) {
                    assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
                }
            }
        }
    }

    /// Risk sets of size 5 and 3; a later control in both.
    fn two_case_fixture() -> (Cohort, NccSample) {
        let times = [1.0, 2.0, 3.0, 4.0, 5.0];
        let deltas = [true, false, true, false, false];
        let cohort = Cohort::from_columns(&times, &deltas, times.iter().map(|_| vec![0.0]).collect()).unwrap();
        let mut a = BTreeMap::new();
        a.insert(0, vec![3]);
        a.insert(2, vec![3]);
        let design = NccDesign::new(1.0, 1, None).unwrap();
        let s = NccSample::from_parts(&cohort, design, vec![true, false, true, false, false], a).unwrap();
        (cohort, s)
    }

    #[test]
    fn perturbed_inclusion_probability_by_hand() {
        let (cohort, s) = two_case_fixture();
        let plan = PerturbationPlan::new(&cohort, &s).unwrap();
        let mut draw = MultiplierDraw::ones(&s);
        // Counts 2.0 and 0.5 against risk sets of 5 and 3:
        // p = 1 - (1 - 2/4)(1 - 0.5/2) = 0.625.
        draw.pair.insert((0, 3), 2.0);
        draw.pair.insert((2, 3), 0.5);
        let w = plan.weights(&draw).unwrap();
        let v0 = 1.0 - (1.0 - 2.0) * (1.0 - 0.5);
        assert!((w[3] - v0 / 0.625).abs() < 1e-15);
        assert_eq!(w[1], 0.0);
        assert_eq!(w[4], 0.0);
    }

    #[test]
    fn perturbed_case_weight_by_hand() {
        let (cohort, s) = two_case_fixture();
        let plan = PerturbationPlan::new(&cohort, &s).unwrap();
        let mut draw = MultiplierDraw::ones(&s);
        // pi1* = 1 when every event is a case, so w* = I_jj.
        draw.diag[0] = 2.0;
        let w = plan.weights(&draw).unwrap();
        assert_eq!(w[0], 2.0);
        assert_eq!(w[2], 1.0);
    }

    #[test]
    fn perturbed_case_fraction() {
        let times = [1.0, 2.0, 3.0, 4.0];
        let deltas = [true, true, false, false];
        let cohort = Cohort::from_columns(&times, &deltas, times.iter().map(|_| vec![0.0]).collect()).unwrap();
        let mut a = BTreeMap::new();
        a.insert(0, vec![2]);
        let s = NccSample::from_parts(&cohort, NccDesign::new(0.5, 1, None).unwrap(), vec![true, false, false, false], a)
            .unwrap();
        let plan = PerturbationPlan::new(&cohort, &s).unwrap();
        let mut draw = MultiplierDraw::ones(&s);
        draw.diag[0] = 3.0;
        draw.diag[1] = 1.0;
        // pi1* = 3 / 4 and the case weight is 3 / (3/4) = 4.
        assert_eq!(plan.pi1(&draw), 0.75);
        assert_eq!(plan.weights(&draw).unwrap()[0], 4.0);
    }

    #[test]
    fn single_case_inclusion_probability_example() {
        // One case with risk set of size 5 and controls {a, b} = {1, 2}.
        let times = [1.0, 2.0, 3.0, 4.0, 5.0];
        let deltas = [true, false, false, false, false];
        let cohort = Cohort::from_columns(&times, &deltas, times.iter().map(|_| vec![0.0]).collect()).unwrap();
        let mut a = BTreeMap::new();
        a.insert(0, vec![1, 2]);
        let s = NccSample::from_parts(&cohort, NccDesign::new(1.0, 2, None).unwrap(), vec![true, false, false, false, false], a)
            .unwrap();
        let plan = PerturbationPlan::new(&cohort, &s).unwrap();
        let mut draw = MultiplierDraw::ones(&s);
        draw.pair.insert((0, 1), 2.0);
        draw.pair.insert((0, 2), 0.5);
        let w = plan.weights(&draw).unwrap();
        // p* = 1 - (1 - 2.5/4) = 0.625 for both controls; V0* = I_0l.
        assert!((w[1] - 2.0 / 0.625).abs() < 1e-15);
        assert!((w[2] - 0.5 / 0.625).abs() < 1e-15);
        assert_eq!(w[3], 0.0);
    }

    #[test]
    fn case_weight_arithmetic_example() {
        let w = new_weight_value(0, true, 1.7, 0.0, 0.0, 0.85).unwrap();
        assert!((w - 2.0).abs() < 1e-15);
    }

    #[test]
    fn all_events_as_cases_reduces_to_control_only_perturbation() {
        let cohort = random_cohort(70, 21, false);
        let s = draw_sample(&cohort, &NccDesign::new(1.0, 2, None).unwrap(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let plan = PerturbationPlan::new(&cohort, &s).unwrap();
        let draw = draw_multipliers(&s, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(plan.pi1(&draw), 1.0);
        let w = plan.weights(&draw).unwrap();
        // The standard-design scheme: I_jj for events, perturbed V0/p0 for
        // controls, with the case perturbation switched off entirely.
        let mut no_case = draw.clone();
        no_case.diag = vec![1.0; cohort.len()];
        let w_ctrl = plan.weights(&no_case).unwrap();
        for j in 0..cohort.len() {
            if cohort.subject(j).delta {
                assert_eq!(w[j], draw.diag[j]);
            } else {
                assert_eq!(w[j], w_ctrl[j]);
            }
        }
    }

    #[test]
    fn multipliers_are_unit_exponential_on_the_sample_edges() {
        let cohort = random_cohort(40, 8, false);
        let s = draw_sample(&cohort, &NccDesign::new(0.5, 2, None).unwrap(), &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let d = draw_multipliers(&s, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(d, draw_multipliers(&s, &mut ChaCha8Rng::seed_from_u64(1)));
        let keys: Vec<_> = d.pair.keys().copied().collect();
        let edges: Vec<_> = s.pairs().collect();
        assert_eq!(keys, edges);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..100_000).flat_map(|_| draw_multipliers(&s, &mut rng).diag.into_iter().take(1)).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // MC-SE of the mean is 1/sqrt(n); of the variance about sqrt(8/n).
        assert!((mean - 1.0).abs() < 3.0 / n.sqrt());
        assert!((var - 1.0).abs() < 3.0 * (8.0 / n).sqrt());
    }

    #[test]
    fn se_ci_three_replicates() {
        let r = se_ci(&[2.0], &[vec![1.0], vec![2.0], vec![3.0]], 0.95).unwrap();
        assert_eq!(r.se[0], Some(1.0));
        assert!((r.ci_lower[0].unwrap() - (2.0 - 1.959_963_984_540_054)).abs() < 1e-9);
        assert!((r.ci_upper[0].unwrap() - (2.0 + 1.959_963_984_540_054)).abs() < 1e-9);
    }

    #[test]
    fn se_ci_examples() {
        let reps = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let r = se_ci(&[2.5], &reps, 0.95).unwrap();
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((r.se[0].unwrap() - sd).abs() < 1e-14);
        assert!((r.ci_lower[0].unwrap() - (2.5 - 1.959963984540054 * sd)).abs() < 1e-9);
        assert!((r.ci_upper[0].unwrap() - (2.5 + 1.959963984540054 * sd)).abs() < 1e-9);
        let r0 = se_ci(&[2.5], &reps, 0.0).unwrap();
        assert_eq!(r0.ci_lower[0], Some(2.5));
        assert_eq!(r0.ci_upper[0], Some(2.5));
        assert_eq!(se_ci(&[1.0], &[vec![1.0]], 0.95).unwrap_err(), Error::TooFewReplicates(1));
    }

    #[test]
    fn identical_replicates_have_zero_se() {
        let reps = vec![vec![0.3, 7.0]; 10];
        let r = se_ci(&[0.3, 7.0], &reps, 0.9).unwrap();
        assert_eq!(r.se, vec![Some(0.0), Some(0.0)]);
        assert_eq!(r.ci_lower, vec![Some(0.3), Some(7.0)]);
    }
}

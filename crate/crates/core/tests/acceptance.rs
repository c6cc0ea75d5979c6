//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one `PASS`/`FAIL` line per criterion.
//!
//! Some criteria cannot be met as stated; for those the line reads `FAIL`
//! with the measured values, and the run still succeeds. The run fails only
//! when a gated check breaks (a property the implementation guarantees).
//! The long criterion 5 runs only with `NCC_FULL_SCALE=1`.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;
use num::{BigInt, BigRational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ncc_ipw::accuracy::WeightedScores;
use ncc_ipw::cohort::{km_censoring_survival, Cohort, Subject};
use ncc_ipw::estimators::{CoxLikelihood, GlmEquation, Link, ModelKind};
use ncc_ipw::perturbation::{draw_multipliers, perturbed_estimate, MultiplierDraw, PerturbationPlan};
use ncc_ipw::pipeline::{estimate, EstimationSpec};
use ncc_ipw::sampling::{inclusion_probabilities, sample, NccDesign, NccSample};
use ncc_ipw::seed::{rng_for, stream};
use ncc_ipw::sim::{generate, run_cell, true_values, CellResult, SimConfig};
use ncc_ipw::weights::{SamplingWeights, WeightScheme};

struct Outcome {
    /// Verdict on the criterion exactly as stated.
    pass: bool,
    /// False when a guaranteed property broke; fails the run.
    gate: bool,
    detail: String,
}

impl Outcome {
    fn gated(pass: bool, detail: String) -> Self {
        Outcome { pass, gate: pass, detail }
    }
}

fn toy_cohort(rng: &mut ChaCha8Rng, n: usize, p: usize, ties: bool, matched: bool) -> Cohort {
    let subjects = (0..n)
        .map(|i| {
            let t: f64 = if ties { rng.gen_range(1..=(n / 2).max(2)) as f64 } else { rng.gen_range(0.01..5.0) };
            let markers = (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let s = Subject::new(i, t, rng.gen_bool(0.4), markers);
            if matched {
                s.with_match_vars(vec![rng.gen_range(0..2) as f64])
            } else {
                s
            }
        })
        .collect();
    Cohort::new(subjects).unwrap()
}

// ---------------------------------------------------------------- 1

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (k - i) as f64)
}

fn criterion_1() -> Outcome {
    const RESAMPLES: u64 = 50_000;
    let pi1 = 0.5;
    // A cohort whose event count is even, so exactly half the events are cases.
    let cohort = (0..)
        .map(|seed| generate(200, &mut rng_for(&[101, seed, stream::COHORT])).unwrap().cohort)
        .find(|c| c.n_events() >= 6 && c.n_events() % 2 == 0)
        .unwrap();
    let n = cohort.len();
    let d = cohort.n_events();
    let design = NccDesign::new(pi1, 3, None).unwrap();

    // Raw power sums of the weights, per subject, in a fixed reduction order.
    let chunks: Vec<Vec<[f64; 4]>> = (0..100u64)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = vec![[0.0; 4]; n];
            for r in chunk * (RESAMPLES / 100)..(chunk + 1) * (RESAMPLES / 100) {
                let s = sample(&cohort, &design, &mut rng_for(&[102, r])).unwrap();
                let w = SamplingWeights::compute(WeightScheme::New, &s, &cohort).unwrap();
                for (a, &x) in acc.iter_mut().zip(&w.values) {
                    a[0] += x;
                    a[1] += x * x;
                    a[2] += x * x * x;
                    a[3] += x * x * x * x;
                }
            }
            acc
        })
        .collect();
    let r = RESAMPLES as f64;
    let moments: Vec<[f64; 4]> = (0..n)
        .map(|j| {
            let mut s = [0.0; 4];
            for c in &chunks {
                for k in 0..4 {
                    s[k] += c[j][k];
                }
            }
            s.map(|v| v / r)
        })
        .collect();

    let n_cases = (pi1 * d as f64 + 0.5).floor() as usize;
    let mut event_bad = Vec::new();
    let mut literal_bad = 0;
    let mut exact_bad = Vec::new();
    let mut non_events = 0;
    for (j, m) in moments.iter().enumerate() {
        let mean = m[0];
        let var = m[1] - mean * mean;
        let se = (var * r / (r - 1.0)).max(0.0).sqrt() / r.sqrt();
        let subj = cohort.subject(j);
        if subj.delta {
            // Central fourth moment for the standard error of the variance.
            let mu4 = m[3] - 4.0 * mean * m[2] + 6.0 * mean * mean * m[1] - 3.0 * mean.powi(4);
            let var_se = ((mu4 - var * var) / r).max(0.0).sqrt();
            let target_var = (1.0 - pi1) / pi1;
            if (mean - 1.0).abs() > 3.0 * se || (var - target_var).abs() > 3.0 * var_se {
                event_bad.push(j);
            }
        } else {
            non_events += 1;
            if (mean - 1.0).abs() > 3.0 * se {
                literal_bad += 1;
            }
            // E[w_j] = P(some case's risk set holds j) under the case SRS.
            let k = cohort
                .subjects()
                .iter()
                .filter(|s| s.delta && s.time <= subj.time)
                .count();
            let expected = 1.0 - binom(d - k, n_cases) / binom(d, n_cases);
            if (mean - expected).abs() > 3.0 * se + 1e-12 {
                exact_bad.push((j, mean, expected, se));
            }
        }
    }
    let pass = event_bad.is_empty() && literal_bad == 0;
    Outcome {
        pass,
        gate: event_bad.is_empty() && exact_bad.is_empty(),
        detail: format!(
            "N={n}, D={d}, {RESAMPLES} resamples: events with mean/variance outside 3 MC-SE: {}/{d}; \
             non-events with mean outside 1 ± 3 MC-SE: {literal_bad}/{non_events} \
             (a non-event's expected weight is P(it is at risk for some case) < 1); \
             outside 3 MC-SE of that exact expectation: {}/{non_events} {:?}",
            event_bad.len(),
            exact_bad.len(),
            exact_bad.iter().take(3).collect::<Vec<_>>()
        ),
    }
}

// ---------------------------------------------------------------- 2

/// All `k`-subsets of `pool`.
fn subsets(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if pool.len() < k {
        return vec![];
    }
    let mut with: Vec<Vec<usize>> = subsets(&pool[1..], k - 1)
        .into_iter()
        .map(|mut s| {
            s.insert(0, pool[0]);
            s
        })
        .collect();
    with.extend(subsets(&pool[1..], k));
    with
}

/// Walks the joint draws of every case, counting draws that select each subject.
fn enumerate_draws(choices: &[Vec<Vec<usize>>], depth: usize, hit: &mut Vec<u32>, counts: &mut Vec<u64>) {
    if depth == choices.len() {
        for (c, h) in counts.iter_mut().zip(hit.iter()) {
            *c += (*h > 0) as u64;
        }
        return;
    }
    for draw in &choices[depth] {
        for &l in draw {
            hit[l] += 1;
        }
        enumerate_draws(choices, depth + 1, hit, counts);
        for &l in draw {
            hit[l] -= 1;
        }
    }
}

/// Checks every nonempty case set of one cohort; returns (case sets, mismatches).
fn check_exhaustive(cohort: &Cohort, m: usize, tol: Option<&[f64]>) -> (usize, usize) {
    let n = cohort.len();
    let events: Vec<usize> = (0..n).filter(|&i| cohort.subject(i).delta).collect();
    let (mut checked, mut bad) = (0, 0);
    for mask in 1u32..(1 << events.len()) {
        let cases: Vec<usize> = events.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i).collect();
        let mut choices = Vec::new();
        let mut total: u64 = 1;
        let mut exact_cases = Vec::new();
        for &i in &cases {
            let pool: Vec<usize> = (0..n).filter(|&l| l != i && cohort.in_risk_set(i, l, tol)).collect();
            let k = m.min(pool.len());
            let draws = subsets(&pool, k);
            total *= draws.len() as u64;
            choices.push(draws);
            exact_cases.push((i, BigRational::from_integer(BigInt::from(k)), cohort.risk_set_size(i, tol)));
        }
        let mut counts = vec![0u64; n];
        enumerate_draws(&choices, 0, &mut vec![0; n], &mut counts);
        let p = inclusion_probabilities(cohort, &exact_cases, tol).unwrap();
        for j in 0..n {
            let oracle = BigRational::new(BigInt::from(counts[j]), BigInt::from(total));
            if oracle != p[j] {
                bad += 1;
            }
        }
        checked += 1;
    }
    (checked, bad)
}

fn cohort_from(times: &[f64], deltas: &[bool], match_vars: Option<&[f64]>) -> Cohort {
    let subjects = (0..times.len())
        .map(|i| {
            let s = Subject::new(i, times[i], deltas[i], vec![0.0]);
            match match_vars {
                Some(mv) => s.with_match_vars(vec![mv[i]]),
                None => s,
            }
        })
        .collect();
    Cohort::new(subjects).unwrap()
}

fn criterion_2() -> Outcome {
    // Distinct times with every event pattern for N <= 8; every tie
    // structure (composition of N into blocks) for N <= 6; every binary
    // matching pattern for N <= 5.
    let mut cohorts: Vec<(Cohort, Option<Vec<f64>>)> = Vec::new();
    for n in 2..=8usize {
        let distinct: Vec<f64> = (1..=n).map(|t| t as f64).collect();
        let mut time_sets = vec![distinct.clone()];
        if n <= 6 {
            for cuts in 1u32..(1 << (n - 1)) {
                let mut t = 1.0;
                let mut times = vec![1.0];
                for b in 0..n - 1 {
                    if cuts >> b & 1 == 1 {
                        t += 1.0;
                    }
                    times.push(t);
                }
                time_sets.push(times);
            }
        }
        for dmask in 0u32..(1 << n) {
            let deltas: Vec<bool> = (0..n).map(|b| dmask >> b & 1 == 1).collect();
            for times in &time_sets {
                cohorts.push((cohort_from(times, &deltas, None), None));
            }
            if n <= 5 {
                for mmask in 0u32..(1 << n) {
                    let mv: Vec<f64> = (0..n).map(|b| (mmask >> b & 1) as f64).collect();
                    cohorts.push((cohort_from(&distinct, &deltas, Some(&mv)), Some(vec![0.0])));
                }
            }
        }
    }
    let results: Vec<(usize, usize)> = cohorts
        .par_iter()
        .flat_map_iter(|(c, tol)| [1, 2].map(|m| check_exhaustive(c, m, tol.as_deref())))
        .collect();
    let checked: usize = results.iter().map(|r| r.0).sum();
    let bad: usize = results.iter().map(|r| r.1).sum();
    Outcome::gated(
        bad == 0,
        format!(
            "{} cohorts x m in {{1,2}}, {checked} case sets: {bad} subjects whose exact enumerated \
             probability differs from the product formula",
            cohorts.len()
        ),
    )
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let mut mismatches = Vec::new();
    let mut fits = 0;
    for (seed, tol) in [(31u64, None), (32, Some(vec![0.0, 1.0]))] {
        let cohort = generate(2000, &mut rng_for(&[seed, 0, stream::COHORT])).unwrap().cohort;
        let s = sample(&cohort, &NccDesign::new(1.0, 3, tol).unwrap(), &mut rng_for(&[seed, 0, stream::SAMPLE])).unwrap();
        let new = SamplingWeights::compute(WeightScheme::New, &s, &cohort).unwrap();
        let sam = SamplingWeights::compute(WeightScheme::Samuelsen, &s, &cohort).unwrap();
        if new.values != sam.values {
            mismatches.push(format!("weights differ (seed {seed})"));
        }
        let g = km_censoring_survival(&cohort, None).unwrap();
        for model in [ModelKind::Cox, ModelKind::TdGlm] {
            let spec = EstimationSpec::new(model, 1.0, 0.05);
            let a = estimate(&cohort, &new.values, &g, &spec).unwrap().values();
            let b = estimate(&cohort, &sam.values, &g, &spec).unwrap().values();
            fits += 1;
            let close = a.iter().zip(&b).all(|(x, y)| match (x, y) {
                (Some(x), Some(y)) => (x - y).abs() <= 1e-12 * (1.0 + y.abs()),
                (None, None) => true,
                _ => false,
            });
            if !close {
                mismatches.push(format!("{model} estimates differ (seed {seed})"));
            }
        }
    }
    Outcome::gated(
        mismatches.is_empty(),
        format!("pi1=1, unmatched and matched: weights identical elementwise, {fits} fits compared; {mismatches:?}"),
    )
}

// ---------------------------------------------------------------- 4, 6

fn desk_cells() -> Vec<CellResult> {
    [0.2, 0.5, 0.8]
        .into_iter()
        .map(|pi1| {
            let cfg = SimConfig {
                n_cohort: 2000,
                pi1,
                m: 3,
                matching: false,
                model: ModelKind::Cox,
                n_reps: 200,
                n_perturb: 500,
                ..SimConfig::default()
            };
            run_cell(&cfg).unwrap()
        })
        .collect()
}

fn esd_ratio(cell: &CellResult, param: &str) -> f64 {
    let row = cell.report.row(param).unwrap();
    row.esd_samuelsen.unwrap() / row.esd_new.unwrap()
}

fn criterion_4(cells: &[CellResult]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for param in ["beta_z", "beta_b"] {
        let r: Vec<f64> = cells.iter().map(|c| esd_ratio(c, param)).collect();
        ok &= r[0] >= 1.5 && r[1] >= 1.2 && r[0] >= r[1] && r[1] >= r[2];
        parts.push(format!("{param} ESD ratio {:.2}/{:.2}/{:.2}", r[0], r[1], r[2]));
    }
    Outcome::gated(ok, format!("N=2000, 200 reps, pi1 = 0.2/0.5/0.8: {}", parts.join("; ")))
}

fn criterion_6(cells: &[CellResult]) -> Outcome {
    let mut pass = true;
    let mut misses = Vec::new();
    let mut rows = 0;
    for cell in cells {
        for row in &cell.report.rows {
            let ratio = row.pase.unwrap() / row.esd_new.unwrap();
            let cov = row.coverage.unwrap();
            rows += 1;
            let ok = (0.85..=1.15).contains(&ratio) && (0.91..=0.98).contains(&cov);
            if !ok {
                pass = false;
                misses.push(format!("pi1={} {} SE/ESD {:.2} cov {:.3}", cell.config.pi1, row.parameter, ratio, cov));
            }
        }
    }
    Outcome {
        pass,
        gate: true,
        detail: format!("B=500: {} of {rows} (cell, parameter) rows outside the bands: {}", misses.len(), misses.join("; ")),
    }
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Option<Outcome> {
    if std::env::var("NCC_FULL_SCALE").as_deref() != Ok("1") {
        return None;
    }
    let cfg = SimConfig {
        n_cohort: 10_000,
        pi1: 0.5,
        n_reps: 1000,
        n_perturb: 0,
        ..SimConfig::default()
    };
    let cell = run_cell(&cfg).unwrap();
    let row = cell.report.row("beta_z").unwrap();
    let (new, sam) = (row.esd_new.unwrap(), row.esd_samuelsen.unwrap());
    let pass = (new - 0.100).abs() <= 0.020 && (sam - 0.218).abs() <= 0.0436;
    Some(Outcome::gated(
        pass,
        format!("N=10000, pi1=0.5, 1000 reps: ESD(beta_z) new {new:.3} (0.100 ± 20%), classical {sam:.3} (0.218 ± 20%)"),
    ))
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (seed, pi1, tol) in [(71u64, 0.2, None), (72, 0.5, Some(vec![0.0, 1.0])), (73, 1.0, None)] {
        let cohort = generate(2000, &mut rng_for(&[seed, 0, stream::COHORT])).unwrap().cohort;
        let s = sample(&cohort, &NccDesign::new(pi1, 3, tol).unwrap(), &mut rng_for(&[seed, 0, stream::SAMPLE])).unwrap();
        let w = SamplingWeights::compute(WeightScheme::New, &s, &cohort).unwrap();
        let g = km_censoring_survival(&cohort, None).unwrap();
        let plan = PerturbationPlan::new(&cohort, &s).unwrap();
        let ones = MultiplierDraw::ones(&s);
        if plan.weights(&ones).unwrap() != w.values {
            bad.push(format!("weights seed {seed}"));
        }
        for model in [ModelKind::Cox, ModelKind::TdGlm] {
            let spec = EstimationSpec::new(model, 1.0, 0.05);
            let point = estimate(&cohort, &w.values, &g, &spec).unwrap();
            let again = perturbed_estimate(&cohort, &plan, &ones, &spec).unwrap();
            checked += 1;
            let same = point
                .values()
                .iter()
                .zip(again.values())
                .all(|(a, b)| a.map(f64::to_bits) == b.map(f64::to_bits));
            if !same {
                bad.push(format!("{model} seed {seed}"));
            }
        }
    }
    Outcome::gated(bad.is_empty(), format!("{checked} fits, all-ones multipliers vs point estimate, bitwise: {bad:?}"))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let sim = generate(100_000, &mut rng_for(&[81, 0, stream::COHORT])).unwrap();
    let cens = sim.censoring_rate();
    let cens_ok = (cens - 0.97).abs() <= 0.01;
    let cox = true_values(&SimConfig::default()).unwrap();
    let get = |k: &str| cox.get(k).unwrap();
    let bands = [("auc", 0.79, 0.01), ("tpr", 0.31, 0.02), ("npv", 0.94, 0.01), ("ppv", 0.36, 0.02)];
    let truth_ok = bands.iter().all(|(k, v, tol)| (get(k) - v).abs() <= *tol)
        && get("beta_z") == 0.5
        && get("beta_b") == 0.5;
    Outcome {
        pass: cens_ok && truth_ok,
        gate: truth_ok,
        detail: format!(
            "censoring {cens:.4} at N=1e5 (target 0.97 ± 0.01: {}); truth AUC {:.3}, TPR {:.3}, NPV {:.3}, PPV {:.3}, \
             Cox beta ({}, {}) ({})",
            if cens_ok { "ok" } else { "missed" },
            get("auc"),
            get("tpr"),
            get("npv"),
            get("ppv"),
            get("beta_z"),
            get("beta_b"),
            if truth_ok { "ok" } else { "missed" },
        ),
    }
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let cfg = SimConfig {
        n_cohort: 2000,
        pi1: 0.2,
        model: ModelKind::TdGlm,
        n_reps: 200,
        n_perturb: 0,
        ..SimConfig::default()
    };
    let cell = run_cell(&cfg).unwrap();
    let sam = cell.records.iter().filter(|r| !r.converged_samuelsen).count();
    let new = cell.records.iter().filter(|r| r.converged_new).count();
    Outcome {
        pass: sam >= 1 && new >= 199,
        gate: new >= 199,
        detail: format!("GLM, pi1=0.2, N=2000, 200 reps: classical-weight non-convergences {sam} (need >= 1); new-weight converged {new}/200"),
    }
}

// ---------------------------------------------------------------- 10

fn cox_loglik_oracle(cohort: &Cohort, w: &[f64], beta: &[f64]) -> f64 {
    let eta = |i: usize| cohort.subject(i).markers.iter().zip(beta).map(|(z, b)| z * b).sum::<f64>();
    (0..cohort.len())
        .filter(|&i| cohort.subject(i).delta && w[i] != 0.0)
        .map(|i| {
            let ti = cohort.subject(i).time;
            let s0: f64 = (0..cohort.len())
                .filter(|&k| cohort.subject(k).time >= ti)
                .map(|k| w[k] * eta(k).exp())
                .sum();
            w[i] * (eta(i) - s0.ln())
        })
        .sum()
}

fn glm_loglik_oracle(x: &[Vec<f64>], y: &[f64], mass: &[f64], gamma: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(mass)
        .map(|((xi, yi), m)| {
            let eta = gamma[0] + xi.iter().zip(&gamma[1..]).map(|(a, b)| a * b).sum::<f64>();
            m * (yi * eta - eta.exp().ln_1p())
        })
        .sum()
}

fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = 1e-5;
    (0..x.len())
        .map(|k| {
            let (mut up, mut dn) = (x.to_vec(), x.to_vec());
            up[k] += h;
            dn[k] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn dense_weights(cohort: &Cohort, s: &NccSample, draw: &MultiplierDraw, junk: &mut ChaCha8Rng) -> Vec<f64> {
    let n = cohort.len();
    let tol = s.design().match_tol();
    // Every (i, l) multiplier materialized; unsampled pairs get noise that
    // must not matter.
    let xi: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|l| if i == l { draw.diag[i] } else { draw.pair.get(&(i, l)).copied().unwrap_or_else(|| junk.gen_range(0.0..9.0)) })
                .collect()
        })
        .collect();
    let v1: Vec<f64> = s.v1().iter().map(|&b| b as u8 as f64).collect();
    let drew = |i: usize, l: usize| s.assignments().get(&i).is_some_and(|c| c.contains(&l)) as u8 as f64;
    let delta: Vec<f64> = cohort.deltas().iter().map(|&b| b as u8 as f64).collect();
    let pi1 = (0..n).map(|i| xi[i][i] * delta[i] * v1[i]).sum::<f64>() / (0..n).map(|i| xi[i][i] * delta[i]).sum::<f64>();
    (0..n)
        .map(|j| {
            let (mut not_drawn, mut not_incl) = (1.0, 1.0);
            for i in 0..n {
                if i == j || !cohort.in_risk_set(i, j, tol) {
                    continue;
                }
                not_drawn *= 1.0 - v1[i] * drew(i, j) * xi[i][j];
                if v1[i] == 1.0 {
                    let n_i = cohort.risk_set_size(i, tol) as f64;
                    let count: f64 = (0..n).map(|l| xi[i][l] * drew(i, l)).sum();
                    not_incl *= 1.0 - count / (n_i - 1.0);
                }
            }
            let (v0, p0) = (1.0 - not_drawn, 1.0 - not_incl);
            let control = if v0 == 0.0 { 0.0 } else { v0 / p0 };
            delta[j] * v1[j] * xi[j][j] / pi1 + (1.0 - delta[j]) * control
        })
        .collect()
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let (mut cox_err, mut glm_err, mut ll_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let n = rng.gen_range(8..40);
        let ties = rng.gen_bool(0.5);
        let cohort = toy_cohort(&mut rng, n, 2, ties, false);
        let w: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.2..4.0) }).collect();
        let x: Vec<Vec<f64>> = (0..n).map(|i| cohort.subject(i).markers.clone()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_bool(0.4) as u8 as f64).collect();
        let lik = CoxLikelihood::new(&cohort, &w);
        let glm = GlmEquation::from_rows(&x, &y, &w, Link::Logit);
        for _ in 0..10 {
            if let Ok(lik) = &lik {
                let beta: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let analytic = lik.score(&DVector::from_vec(beta.clone()));
                let fd = central_diff(|b| cox_loglik_oracle(&cohort, &w, b), &beta);
                cox_err = cox_err.max(rel_err(analytic.as_slice(), &fd));
                let ll = lik.loglik(&DVector::from_vec(beta.clone()));
                let oracle = cox_loglik_oracle(&cohort, &w, &beta);
                ll_err = ll_err.max((ll - oracle).abs() / oracle.abs().max(1.0));
            }
            let gamma: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let analytic = glm.score(&DVector::from_vec(gamma.clone()));
            let fd = central_diff(|g| glm_loglik_oracle(&x, &y, &w, g), &gamma);
            glm_err = glm_err.max(rel_err(analytic.as_slice(), &fd));
        }
    }
    let scores_ok = cox_err <= 1e-5 && glm_err <= 1e-5;

    // AUC against pair enumeration; scores on a coarse grid to force ties.
    let mut auc_err = 0.0f64;
    let mut toys = 0;
    for _ in 0..2000 {
        let n = rng.gen_range(2..=10);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
        let mass: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.1..3.0) }).collect();
        let event: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let ws = WeightedScores::from_mass(&scores, &mass, &event).unwrap();
        let (mut num, mut e_mass, mut n_mass) = (0.0, 0.0, 0.0);
        for i in 0..n {
            if event[i] {
                e_mass += mass[i];
            } else {
                n_mass += mass[i];
            }
            for j in 0..n {
                if event[i] && !event[j] && scores[i] > scores[j] {
                    num += mass[i] * mass[j];
                }
            }
        }
        let oracle = (e_mass * n_mass > 0.0).then(|| num / (e_mass * n_mass));
        match (ws.auc(), oracle) {
            (Some(a), Some(o)) => auc_err = auc_err.max((a - o).abs()),
            (None, None) => {}
            _ => auc_err = f64::INFINITY,
        }
        toys += 1;
    }
    let auc_ok = auc_err <= 1e-12;

    // Sparse perturbed weights against the dense N x N construction.
    let (mut dense_err, mut draws, mut skipped) = (0.0f64, 0, 0);
    for t in 0..40 {
        let n = rng.gen_range(6..=30);
        let matched = t % 2 == 1;
        let cohort = toy_cohort(&mut rng, n, 1, t % 3 == 0, matched);
        if cohort.n_events() == 0 {
            continue;
        }
        let tol = matched.then(|| vec![0.0]);
        let s = sample(&cohort, &NccDesign::new(rng.gen_range(0.3..1.0), rng.gen_range(1..4), tol).unwrap(), &mut rng).unwrap();
        let plan = PerturbationPlan::new(&cohort, &s).unwrap();
        for _ in 0..5 {
            let draw = draw_multipliers(&s, &mut rng);
            let Ok(sparse) = plan.weights(&draw) else {
                skipped += 1;
                continue;
            };
            let dense = dense_weights(&cohort, &s, &draw, &mut rng);
            for (a, b) in sparse.iter().zip(&dense) {
                dense_err = dense_err.max((a - b).abs() / (1.0 + b.abs()));
            }
            draws += 1;
        }
    }
    let dense_ok = dense_err <= 1e-12;
    Outcome::gated(
        scores_ok && auc_ok && dense_ok && ll_err <= 1e-10,
        format!(
            "score vs finite differences: Cox max rel err {cox_err:.1e}, GLM {glm_err:.1e} (200 points each; \
             Cox log-likelihood vs direct sum {ll_err:.1e}); AUC vs pair enumeration on {toys} toys: max err {auc_err:.1e}; \
             sparse vs dense perturbation on {draws} draws (N <= 30, {skipped} invalid draws skipped): max rel err {dense_err:.1e}"
        ),
    )
}

// ---------------------------------------------------------------- 11

fn criterion_11() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_ncc-ipw");
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("study.conf");
    std::fs::write(
        &conf,
        "n_cohort = 800\npi1 = 0.3, 1.0\nmodel = cox, glm\nmatching = false, true\nn_reps = 8\nn_perturb = 20\ntruth_draws = 20000\n",
    )
    .unwrap();
    let run = |threads: &str, tag: &str| {
        let out = dir.path().join(tag);
        let status = std::process::Command::new(bin)
            .args(["--threads", threads, "simulate", "--config"])
            .arg(&conf)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        let mut csvs = BTreeMap::new();
        for e in std::fs::read_dir(&out).unwrap() {
            let p = e.unwrap().path();
            if p.extension().is_some_and(|x| x == "csv") {
                csvs.insert(p.file_name().unwrap().to_owned(), std::fs::read(&p).unwrap());
            }
        }
        csvs
    };
    let a = run("1", "t1");
    let b = run("1", "t1_again");
    let c = run("4", "t4");
    let d = run("7", "t7");
    let ok = a.len() == 8 && a == b && a == c && a == d;
    Outcome::gated(ok, format!("{} report CSVs byte-identical across repeat and 1/4/7 threads: {ok}", a.len()))
}

// ----------------------------------------------------------------

fn main() {
    let mut gates_ok = true;
    let mut line = |id: &str, o: Option<Outcome>, secs: f64| match o {
        None => println!("criterion {id}: SKIPPED (long-running; set NCC_FULL_SCALE=1)"),
        Some(o) => {
            gates_ok &= o.gate;
            println!(
                "criterion {id}: {} [{secs:.0}s] {}{}",
                if o.pass { "PASS" } else { "FAIL" },
                o.detail,
                if o.gate { "" } else { "  <-- gated check broken" }
            );
        }
    };
    let timed = |f: &dyn Fn() -> Option<Outcome>| {
        let t = Instant::now();
        let o = f();
        (o, t.elapsed().as_secs_f64())
    };
    let (o, s) = timed(&|| Some(criterion_1()));
    line("1", o, s);
    let (o, s) = timed(&|| Some(criterion_2()));
    line("2", o, s);
    let (o, s) = timed(&|| Some(criterion_3()));
    line("3", o, s);
    let t = Instant::now();
    let cells = desk_cells();
    let desk_secs = t.elapsed().as_secs_f64();
    line("4", Some(criterion_4(&cells)), desk_secs);
    let (o, s) = timed(&criterion_5);
    line("5", o, s);
    line("6", Some(criterion_6(&cells)), desk_secs);
    let (o, s) = timed(&|| Some(criterion_7()));
    line("7", o, s);
    let (o, s) = timed(&|| Some(criterion_8()));
    line("8", o, s);
    let (o, s) = timed(&|| Some(criterion_9()));
    line("9", o, s);
    let (o, s) = timed(&|| Some(criterion_10()));
    line("10", o, s);
    let (o, s) = timed(&|| Some(criterion_11()));
    line("11", o, s);
    if !gates_ok {
        eprintln!("acceptance: a gated check failed");
        std::process::exit(1);
    }
}

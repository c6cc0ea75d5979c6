//! Weighted risk models for `P(T <= t0 | Z) = g(alpha + beta'Z)`.
//!
//! * Cox: `beta` maximizes the weighted log partial likelihood and
//!   `alpha = log Lambda0(t0)` comes from the weighted Breslow estimator.
//!   The implied link is complementary log-log.
//! * Time-dependent GLM: `(alpha, beta)` solve the doubly weighted
//!   estimating equation `sum a_j [1(T_j <= t0) - g(alpha + beta'Z_j)] (1, Z_j) = 0`
//!   with `a_j` the product of the sampling and censoring weights.
//!
//! Subjects with zero weight are dropped before fitting.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cohort::{censoring_weights, Cohort, StepSurvival};
use crate::error::{Error, FitError};
use crate::newton::{maximize, Eval, NewtonConfig, Objective};
use crate::weights::SamplingWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cox,
    #[serde(rename = "glm")]
    TdGlm,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Cox => "cox",
            ModelKind::TdGlm => "glm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Logit,
    Cloglog,
}

impl Link {
    #[inline]
    pub fn apply(self, u: f64) -> f64 {
        match self {
            Link::Logit => 1.0 / (1.0 + (-u).exp()),
            Link::Cloglog => -(-(u.exp())).exp_m1(),
        }
    }

    /// Derivative of the inverse link.
    #[inline]
    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Link::Logit => {
                let p = self.apply(u);
                p * (1.0 - p)
            }
            Link::Cloglog => {
                let e = u.exp();
                e * (-e).exp()
            }
        }
    }

    pub fn inverse(self, p: f64) -> f64 {
        match self {
            Link::Logit => (p / (1.0 - p)).ln(),
            Link::Cloglog => (-(-p).ln_1p()).ln(),
        }
    }
}

/// A fitted model. Only converged fits are returned by the fitters;
/// failures come back as [`FitError`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub model: ModelKind,
    pub t0: f64,
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub link: Link,
    pub converged: bool,
    pub iterations: usize,
    pub score_norm: f64,
}

impl ModelFit {
    pub fn linear_predictor(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.beta.len());
        self.alpha + self.beta.iter().zip(z).map(|(b, x)| b * x).sum::<f64>()
    }

    pub fn risk(&self, z: &[f64]) -> f64 {
        self.link.apply(self.linear_predictor(z))
    }
}

/// `g(alpha + beta'Z)` under an explicit link.
pub fn predict_risk(fit: &ModelFit, z: &[f64], link: Link) -> f64 {
    link.apply(fit.linear_predictor(z))
}

fn check_weights(cohort: &Cohort, weights: &[f64]) -> Result<(), Error> {
    if weights.len() != cohort.len() {
        return Err(Error::DimensionMismatch {
            what: "weights",
            expected: cohort.len(),
            actual: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidCohort("weights must be finite".into()));
    }
    Ok(())
}

fn dot(a: &DVector<f64>, z: &[f64]) -> f64 {
    a.iter().zip(z).map(|(b, x)| b * x).sum()
}

/// Weighted Cox partial likelihood with Breslow handling of ties.
/// Rows are sorted by decreasing time.
pub struct CoxLikelihood {
    time: Vec<f64>,
    delta: Vec<bool>,
    weight: Vec<f64>,
    z: Vec<Vec<f64>>,
    p: usize,
}

struct CoxSums {
    loglik: f64,
    score: DVector<f64>,
    info: DMatrix<f64>,
}

impl CoxLikelihood {
    pub fn new(cohort: &Cohort, weights: &[f64]) -> Result<Self, Error> {
        check_weights(cohort, weights)?;
        let mut rows: Vec<usize> = (0..cohort.len()).filter(|&i| weights[i] != 0.0).collect();
        rows.sort_by(|&a, &b| cohort.subject(b).time.total_cmp(&cohort.subject(a).time).then(a.cmp(&b)));
        if !rows.iter().any(|&i| cohort.subject(i).delta && weights[i] > 0.0) {
            return Err(FitError::NoEvents.into());
        }
        Ok(CoxLikelihood {
            time: rows.iter().map(|&i| cohort.subject(i).time).collect(),
            delta: rows.iter().map(|&i| cohort.subject(i).delta).collect(),
            weight: rows.iter().map(|&i| weights[i]).collect(),
            z: rows.iter().map(|&i| cohort.subject(i).markers.clone()).collect(),
            p: cohort.n_markers(),
        })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    /// Log partial likelihood only.
    pub fn loglik(&self, beta: &DVector<f64>) -> f64 {
        self.sums(beta, false).loglik
    }

    fn sums(&self, beta: &DVector<f64>, derivs: bool) -> CoxSums {
        let p = self.p;
        let n = self.time.len();
        let eta: Vec<f64> = self.z.iter().map(|z| dot(beta, z)).collect();
        let shift = eta.iter().fold(f64::NEG_INFINITY, |m, e| m.max(*e));
        let mut s0 = 0.0;
        let mut s1 = DVector::zeros(p);
        let mut s2 = DMatrix::<f64>::zeros(p, p);
        let mut out = CoxSums {
            loglik: 0.0,
            score: DVector::zeros(p),
            info: DMatrix::zeros(p, p),
        };
        let mut k = 0;
        while k < n {
            let mut end = k;
            while end < n && self.time[end] == self.time[k] {
                let r = self.weight[end] * (eta[end] - shift).exp();
                s0 += r;
                if derivs {
                    for a in 0..p {
                        s1[a] += r * self.z[end][a];
                        for b in 0..p {
                            s2[(a, b)] += r * self.z[end][a] * self.z[end][b];
                        }
                    }
                }
                end += 1;
            }
            for i in k..end {
                if !self.delta[i] {
                    continue;
                }
                let w = self.weight[i];
                out.loglik += w * (eta[i] - shift - s0.ln());
                if derivs {
                    let mean = &s1 / s0;
                    for a in 0..p {
                        out.score[a] += w * (self.z[i][a] - mean[a]);
                        for b in 0..p {
                            out.info[(a, b)] += w * (s2[(a, b)] / s0 - mean[a] * mean[b]);
                        }
                    }
                }
            }
            k = end;
        }
        out
    }

    /// Analytic score of the log partial likelihood.
    pub fn score(&self, beta: &DVector<f64>) -> DVector<f64> {
        self.sums(beta, true).score
    }

    /// Weighted Breslow cumulative baseline hazard at `t0`.
    pub fn breslow(&self, beta: &DVector<f64>, t0: f64) -> f64 {
        let n = self.time.len();
        let risk: Vec<f64> = (0..n).map(|i| self.weight[i] * dot(beta, &self.z[i]).exp()).collect();
        let mut s0 = 0.0;
        let mut cum = 0.0;
        let mut k = 0;
        while k < n {
            let mut end = k;
            while end < n && self.time[end] == self.time[k] {
                s0 += risk[end];
                end += 1;
            }
            if self.time[k] <= t0 {
                for i in k..end {
                    if self.delta[i] {
                        cum += self.weight[i] / s0;
                    }
                }
            }
            k = end;
        }
        cum
    }
}

impl Objective for CoxLikelihood {
    fn evaluate(&self, x: &DVector<f64>) -> Option<Eval> {
        let s = self.sums(x, true);
        s.loglik.is_finite().then(|| Eval {
            merit: s.loglik,
            score: s.score,
            jacobian: -s.info,
        })
    }

    fn merit(&self, x: &DVector<f64>) -> Option<f64> {
        let l = self.loglik(x);
        l.is_finite().then_some(l)
    }
}

pub fn fit_cox_with(cohort: &Cohort, weights: &[f64], t0: f64, cfg: &NewtonConfig) -> Result<ModelFit, Error> {
    let lik = CoxLikelihood::new(cohort, weights)?;
    let out = maximize(&lik, DVector::zeros(lik.dim()), cfg)?;
    let base = lik.breslow(&out.x, t0);
    if !(base > 0.0) || !base.is_finite() {
        return Err(FitError::DegenerateOutcome.into());
    }
    Ok(ModelFit {
        model: ModelKind::Cox,
        t0,
        alpha: base.ln(),
        beta: out.x.iter().copied().collect(),
        link: Link::Cloglog,
        converged: true,
        iterations: out.iterations,
        score_norm: out.score_norm,
    })
}

/// Weighted Cox fit plus Breslow intercept at `t0`.
pub fn fit_cox(cohort: &Cohort, weights: &SamplingWeights, t0: f64) -> Result<ModelFit, Error> {
    fit_cox_with(cohort, &weights.values, t0, &NewtonConfig::default())
}

/// Binary-outcome estimating equation with per-row mass and a link.
pub struct GlmEquation {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    mass: Vec<f64>,
    link: Link,
}

impl GlmEquation {
    /// Rows are subjects with nonzero mass; the design has a leading 1.
    pub fn new(cohort: &Cohort, mass: &[f64], t0: f64, link: Link) -> Result<Self, Error> {
        check_weights(cohort, mass)?;
        let rows: Vec<usize> = (0..cohort.len()).filter(|&i| mass[i] != 0.0).collect();
        let x = rows
            .iter()
            .map(|&i| {
                let mut r = Vec::with_capacity(cohort.n_markers() + 1);
                r.push(1.0);
                r.extend_from_slice(&cohort.subject(i).markers);
                r
            })
            .collect();
        let y = rows
            .iter()
            .map(|&i| if cohort.subject(i).event_by(t0) { 1.0 } else { 0.0 })
            .collect();
        let mass = rows.iter().map(|&i| mass[i]).collect();
        Ok(GlmEquation { x, y, mass, link })
    }

    /// Direct construction from rows (design without the intercept column).
    pub fn from_rows(z: &[Vec<f64>], y: &[f64], mass: &[f64], link: Link) -> Self {
        let x = z
            .iter()
            .map(|r| std::iter::once(1.0).chain(r.iter().copied()).collect())
            .collect();
        GlmEquation {
            x,
            y: y.to_vec(),
            mass: mass.to_vec(),
            link,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    fn class_mass(&self) -> (f64, f64) {
        self.y.iter().zip(&self.mass).fold((0.0, 0.0), |(a, b), (y, m)| {
            if *y > 0.5 {
                (a + m, b)
            } else {
                (a, b + m)
            }
        })
    }

    /// Weighted Bernoulli log-likelihood. The estimating equation is its
    /// score under the logit link.
    pub fn loglik(&self, gamma: &DVector<f64>) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .zip(&self.mass)
            .map(|((x, y), m)| {
                let eta = dot(gamma, x);
                let ll = match self.link {
                    Link::Logit => y * eta - softplus(eta),
                    Link::Cloglog => {
                        let mu = self.link.apply(eta);
                        y * mu.ln() + (1.0 - y) * (-(eta.exp()))
                    }
                };
                m * ll
            })
            .sum()
    }

    /// `sum a_j (y_j - g(eta_j)) x_j`.
    pub fn score(&self, gamma: &DVector<f64>) -> DVector<f64> {
        let mut u = DVector::zeros(self.dim());
        for ((x, y), m) in self.x.iter().zip(&self.y).zip(&self.mass) {
            let r = m * (y - self.link.apply(dot(gamma, x)));
            for (a, xa) in x.iter().enumerate() {
                u[a] += r * xa;
            }
        }
        u
    }

    fn jacobian(&self, gamma: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim();
        let mut j = DMatrix::zeros(d, d);
        for (x, m) in self.x.iter().zip(&self.mass) {
            let g = m * self.link.derivative(dot(gamma, x));
            for a in 0..d {
                for b in 0..d {
                    j[(a, b)] -= g * x[a] * x[b];
                }
            }
        }
        j
    }

    fn merit_value(&self, gamma: &DVector<f64>) -> f64 {
        match self.link {
            Link::Logit => self.loglik(gamma),
            // The equation is not a likelihood score here; line-search on
            // its squared norm instead.
            Link::Cloglog => -0.5 * self.score(gamma).norm_squared(),
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl Objective for GlmEquation {
    fn evaluate(&self, x: &DVector<f64>) -> Option<Eval> {
        let merit = self.merit_value(x);
        merit.is_finite().then(|| Eval {
            merit,
            score: self.score(x),
            jacobian: self.jacobian(x),
        })
    }

    fn merit(&self, x: &DVector<f64>) -> Option<f64> {
        let m = self.merit_value(x);
        m.is_finite().then_some(m)
    }
}

/// Solves the GLM equation from `alpha = g^{-1}(weighted prevalence)`, `beta = 0`.
pub fn solve_glm(eq: &GlmEquation, cfg: &NewtonConfig) -> Result<(DVector<f64>, usize, f64), FitError> {
    let (pos, neg) = eq.class_mass();
    if !(pos > 0.0 && neg > 0.0) {
        return Err(FitError::DegenerateOutcome);
    }
    let mut start = DVector::zeros(eq.dim());
    start[0] = eq.link.inverse(pos / (pos + neg));
    let out = maximize(eq, start, cfg)?;
    Ok((out.x, out.iterations, out.score_norm))
}

pub fn fit_glm_with(
    cohort: &Cohort,
    weights: &[f64],
    g: &StepSurvival,
    t0: f64,
    link: Link,
    cfg: &NewtonConfig,
) -> Result<ModelFit, Error> {
    check_weights(cohort, weights)?;
    let omega = censoring_weights(cohort, t0, g)?;
    let mass: Vec<f64> = weights.iter().zip(&omega).map(|(w, o)| w * o).collect();
    fit_glm_mass(cohort, &mass, t0, link, cfg)
}

/// GLM fit from precomputed per-subject mass (sampling x censoring weight).
pub fn fit_glm_mass(cohort: &Cohort, mass: &[f64], t0: f64, link: Link, cfg: &NewtonConfig) -> Result<ModelFit, Error> {
    let eq = GlmEquation::new(cohort, mass, t0, link)?;
    let (gamma, iterations, score_norm) = solve_glm(&eq, cfg)?;
    Ok(ModelFit {
        model: ModelKind::TdGlm,
        t0,
        alpha: gamma[0],
        beta: gamma.iter().skip(1).copied().collect(),
        link,
        converged: true,
        iterations,
        score_norm,
    })
}

/// Doubly weighted time-dependent GLM.
pub fn fit_glm(
    cohort: &Cohort,
    weights: &SamplingWeights,
    g: &StepSurvival,
    t0: f64,
    link: Link,
) -> Result<ModelFit, Error> {
    fit_glm_with(cohort, &weights.values, g, t0, link, &NewtonConfig::default())
}

//! Damped Newton iteration shared by the Cox and GLM fitters.

use nalgebra::{DMatrix, DVector};

use crate::error::FitError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Convergence threshold on the sup-norm of the score.
    pub score_tol: f64,
    /// The final Newton step must also be this small. Under separation the
    /// score vanishes while steps stay O(1); this keeps such fits from
    /// being reported as converged.
    pub step_tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Divergence bound on the sup-norm of the coefficients.
    pub max_coef: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            score_tol: 1e-8,
            step_tol: 1e-6,
            max_iter: 50,
            max_halvings: 20,
            max_coef: 50.0,
        }
    }
}

/// Merit value, score and score Jacobian at a point. The Jacobian must be
/// symmetric negative definite near the root; the merit must increase
/// along the Newton direction.
pub struct Eval {
    pub merit: f64,
    pub score: DVector<f64>,
    pub jacobian: DMatrix<f64>,
}

pub trait Objective {
    fn evaluate(&self, x: &DVector<f64>) -> Option<Eval>;
    fn merit(&self, x: &DVector<f64>) -> Option<f64>;
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub score_norm: f64,
}

fn sup(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn newton_step(e: &Eval) -> Option<DVector<f64>> {
    let neg = -&e.jacobian;
    let chol = neg.cholesky()?;
    let d = chol.solve(&e.score);
    d.iter().all(|v| v.is_finite()).then_some(d)
}

pub fn maximize<O: Objective>(obj: &O, x0: DVector<f64>, cfg: &NewtonConfig) -> Result<NewtonOutcome, FitError> {
    let mut x = x0;
    let mut cur = obj.evaluate(&x).ok_or(FitError::NonFinite)?;
    for iter in 0..=cfg.max_iter {
        let score_norm = sup(&cur.score);
        if !score_norm.is_finite() || !cur.merit.is_finite() {
            return Err(FitError::NonFinite);
        }
        if score_norm == 0.0 {
            return Ok(NewtonOutcome { x, iterations: iter, score_norm });
        }
        let step = match newton_step(&cur) {
            Some(d) => d,
            None if iter == 0 => return Err(FitError::RankDeficient),
            None => {
                return Err(FitError::NotConverged {
                    iterations: iter,
                    score_norm,
                })
            }
        };
        if score_norm < cfg.score_tol && sup(&step) < cfg.step_tol {
            return Ok(NewtonOutcome { x, iterations: iter, score_norm });
        }
        if iter == cfg.max_iter {
            return Err(FitError::NotConverged {
                iterations: iter,
                score_norm,
            });
        }

        let slack = 1e-12 * (1.0 + cur.merit.abs());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let cand = &x + &step * t;
            if let Some(m) = obj.merit(&cand) {
                if m.is_finite() && m >= cur.merit - slack {
                    accepted = Some(cand);
                    break;
                }
            }
            t *= 0.5;
        }
        let Some(next) = accepted else {
            return Err(FitError::NotConverged {
                iterations: iter + 1,
                score_norm,
            });
        };
        x = next;
        let max_coef = sup(&x);
        if max_coef > cfg.max_coef {
            return Err(FitError::Diverged {
                iterations: iter + 1,
                max_coef,
            });
        }
        cur = obj.evaluate(&x).ok_or(FitError::NonFinite)?;
    }
    unreachable!("loop returns on its last iteration")
}

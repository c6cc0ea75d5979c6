//! Synthetic cohorts: an extreme-value AFT event time, administrative plus
//! gamma censoring (about 93% censored), two
//! correlated markers and two coarse matching variables.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal, Uniform};
use statrs::function::erf::erfc;

use crate::cohort::{Cohort, Subject};
use crate::error::Result;

/// Standard normal CDF via the complementary error function; accurate to
/// about 1e-16 in absolute terms.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Marker names as they appear in parameter labels.
pub const MARKERS: [&str; 2] = ["z", "b"];

/// Matching tolerance used when matching is switched on: exact on the
/// binary variable, within one on the 0..=5 variable.
pub const MATCH_TOL: [f64; 2] = [0.0, 1.0];

/// One generated subject, including the quantities the observed cohort hides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub z: f64,
    pub b: f64,
    pub latent_time: f64,
    pub censor_time: f64,
    pub m1: f64,
    pub m2: f64,
}

/// `log T = 1.5 - 0.25 Z - 0.25 B + 0.5 eps`, with `eps` standard minimum
/// extreme value drawn by inversion.
pub fn latent_time(z: f64, b: f64, u: f64) -> f64 {
    let eps = (-(-u).ln_1p()).ln();
    (1.5 - 0.25 * z - 0.25 * b + 0.5 * eps).exp()
}

/// Markers and latent event time only; the truth oracle needs no more.
pub fn draw_markers_and_time<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64, f64) {
    let z: f64 = rng.sample(StandardNormal);
    let e_b: f64 = rng.sample(StandardNormal);
    let u: f64 = rng.sample(Open01);
    let b = z + e_b;
    (z, b, latent_time(z, b, u))
}

pub fn draw_subject<R: Rng + ?Sized>(rng: &mut R) -> Draw {
    // Rate 2 is scale 1/2 in this parameterization.
    let gamma = Gamma::new(2.0, 0.5).expect("valid gamma");
    let unif = Uniform::new_inclusive(0.5, 2.0);
    let (z, b, latent) = draw_markers_and_time(rng);
    let c1: f64 = gamma.sample(rng);
    let c2: f64 = unif.sample(rng);
    let e1: f64 = rng.sample(StandardNormal);
    let e2: f64 = rng.sample(StandardNormal);
    Draw {
        z,
        b,
        latent_time: latent,
        censor_time: (0.1 + c1).min(c2),
        m1: if normal_cdf(z + e1) > 0.5 { 1.0 } else { 0.0 },
        m2: (5.0 * normal_cdf(b + e2)).round(),
    }
}

/// A generated cohort together with its latent times.
#[derive(Debug, Clone)]
pub struct SimCohort {
    pub cohort: Cohort,
    pub draws: Vec<Draw>,
}

impl SimCohort {
    pub fn censoring_rate(&self) -> f64 {
        1.0 - self.cohort.n_events() as f64 / self.cohort.len() as f64
    }
}

/// `n` independent subjects; markers `(Z, B)`, matching variables `(M1, M2)`.
pub fn generate<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SimCohort> {
    let draws: Vec<Draw> = (0..n).map(|_| draw_subject(rng)).collect();
    let subjects = draws
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let time = d.latent_time.min(d.censor_time);
            Subject::new(i, time, d.latent_time <= d.censor_time, vec![d.z, d.b]).with_match_vars(vec![d.m1, d.m2])
        })
        .collect();
    Ok(SimCohort {
        cohort: Cohort::new(subjects)?,
        draws,
    })
}

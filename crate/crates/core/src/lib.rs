//! Inverse-probability-weighted risk modelling for nested case-control
//! (NCC) samples in which only a fraction `pi1` of the events are kept as
//! cases.
//!
//! The pipeline, module by module:
//!
//! * [`cohort`]: subjects, risk sets and the Kaplan–Meier censoring survival.
//! * [`sampling`]: case and control draws, exact control-inclusion probabilities.
//! * [`weights`]: the weight that inflates cases by `1/pi1`, the classical
//!   weight that gives cases weight 1, and the full-cohort reference.
//! * [`estimators`]: weighted Cox model with Breslow intercept, and the
//!   doubly weighted time-specific GLM.
//! * [`accuracy`]: weighted TPR/FPR/PPV/NPV at a cutoff, AUC, and the cutoff
//!   search for a false-positive target.
//! * [`pipeline`]: one call from weights to estimates.
//! * [`perturbation`]: resampling-free standard errors and intervals from
//!   Exp(1) multipliers on the sampling indicators.
//! * [`sim`]: the Monte Carlo study harness.
//! * [`io`] and [`cli`]: file formats and the `ncc-ipw` command line.
//!
//! ```no_run
//! use ncc_ipw::cohort::km_censoring_survival;
//! use ncc_ipw::estimators::ModelKind;
//! use ncc_ipw::pipeline::{estimate, EstimationSpec};
//! use ncc_ipw::sampling::{sample, NccDesign};
//! use ncc_ipw::seed::rng_for;
//! use ncc_ipw::sim::generate;
//! use ncc_ipw::weights::{SamplingWeights, WeightScheme};
//!
//! # fn main() -> ncc_ipw::Result<()> {
//! let cohort = generate(2000, &mut rng_for(&[1]))?.cohort;
//! let ncc = sample(&cohort, &NccDesign::new(0.5, 3, None)?, &mut rng_for(&[2]))?;
//! let w = SamplingWeights::compute(WeightScheme::New, &ncc, &cohort)?;
//! let g = km_censoring_survival(&cohort, None)?;
//! let est = estimate(&cohort, &w.values, &g, &EstimationSpec::new(ModelKind::Cox, 1.0, 0.05))?;
//! println!("{:?}", est.values());
//! # Ok(())
//! # }
//! ```

pub mod accuracy;
pub mod cli;
pub mod cohort;
pub mod error;
pub mod estimators;
pub mod io;
pub mod newton;
pub mod perturbation;
pub mod pipeline;
pub mod sampling;
pub mod seed;
pub mod sim;
pub mod weights;

pub use error::{Error, FitError, Result};

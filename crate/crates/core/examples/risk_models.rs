//! Fits the weighted Cox model and the doubly weighted time-specific GLM to
//! an NCC sample and prints the predicted t0-risk for a few marker values.

use ncc_ipw::cohort::km_censoring_survival;
use ncc_ipw::estimators::{fit_cox, fit_glm, Link};
use ncc_ipw::sampling::{sample, NccDesign};
use ncc_ipw::seed::{rng_for, stream};
use ncc_ipw::sim::generate;
use ncc_ipw::weights::{SamplingWeights, WeightScheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t0 = 1.0;
    let sim = generate(5000, &mut rng_for(&[13, 0, stream::COHORT]))?;
    let cohort = &sim.cohort;
    let s = sample(cohort, &NccDesign::new(0.5, 3, None)?, &mut rng_for(&[13, 0, stream::SAMPLE]))?;
    let w = SamplingWeights::compute(WeightScheme::New, &s, cohort)?;
    let g = km_censoring_survival(cohort, None)?;

    let cox = fit_cox(cohort, &w, t0)?;
    let glm = fit_glm(cohort, &w, &g, t0, Link::Logit)?;
    println!("Cox: alpha {:.3}, beta {:.3?} ({} Newton steps)", cox.alpha, cox.beta, cox.iterations);
    println!("GLM: alpha {:.3}, beta {:.3?} ({} Newton steps)", glm.alpha, glm.beta, glm.iterations);
    for z in [[-1.0, -1.0], [0.0, 0.0], [1.0, 1.0], [2.0, 2.0]] {
        println!("  P(T <= {t0} | z = {z:?}): Cox {:.4}, GLM {:.4}", cox.risk(&z), glm.risk(&z));
    }
    Ok(())
}

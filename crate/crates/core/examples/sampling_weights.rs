//! Compares the three weighting schemes on one sample: the proposed weight
//! (cases inflated by 1/pi1), the classical weight (cases weighted 1) and the
//! full-cohort reference.

use ncc_ipw::sampling::{sample, NccDesign};
use ncc_ipw::seed::{rng_for, stream};
use ncc_ipw::sim::generate;
use ncc_ipw::weights::{SamplingWeights, WeightScheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = generate(2000, &mut rng_for(&[12, 0, stream::COHORT]))?;
    let cohort = &sim.cohort;
    let s = sample(cohort, &NccDesign::new(0.3, 3, None)?, &mut rng_for(&[12, 0, stream::SAMPLE]))?;

    for scheme in [WeightScheme::New, WeightScheme::Samuelsen, WeightScheme::FullCohort] {
        let w = SamplingWeights::compute(scheme, &s, cohort)?;
        let total: f64 = w.values.iter().sum();
        let events: f64 = cohort
            .subjects()
            .iter()
            .zip(&w.values)
            .filter(|(subj, _)| subj.delta)
            .map(|(_, w)| w)
            .sum();
        let nonzero = w.values.iter().filter(|&&v| v != 0.0).count();
        println!(
            "{scheme:>9}: {nonzero:>4} non-zero weights, total {total:8.1} (cohort {}), event total {events:6.1} (events {})",
            cohort.len(),
            cohort.n_events()
        );
    }
    println!("the classical weight under-counts events when only a fraction are cases");
    Ok(())
}

//! Draws a nested case-control sample with only part of the events kept as
//! cases, with and without matching, and shows the resulting inclusion
//! probabilities.

use ncc_ipw::sampling::{sample, NccDesign};
use ncc_ipw::seed::{rng_for, stream};
use ncc_ipw::sim::generate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = generate(2000, &mut rng_for(&[11, 0, stream::COHORT]))?;
    let cohort = &sim.cohort;
    println!("cohort: {} subjects, {} events", cohort.len(), cohort.n_events());

    for (label, tol) in [("unmatched", None), ("matched", Some(vec![0.0, 1.0]))] {
        for pi1 in [0.2, 0.5, 1.0] {
            let design = NccDesign::new(pi1, 3, tol.clone())?;
            let s = sample(cohort, &design, &mut rng_for(&[11, 0, stream::SAMPLE]))?;
            let controls = s.v0().iter().filter(|&&v| v).count();
            let selected = s.selected().iter().filter(|&&v| v).count();
            let p0: Vec<f64> = s.p0().iter().copied().filter(|&p| p > 0.0).collect();
            let (lo, hi) = p0.iter().fold((1.0f64, 0.0f64), |(a, b), &p| (a.min(p), b.max(p)));
            println!(
                "{label:>9} pi1={pi1:.1}: {} cases (realized {:.3}), {controls} distinct controls, \
                 {selected} selected; control inclusion probability in [{lo:.4}, {hi:.4}]",
                s.n_cases(),
                s.pi1_realized(),
            );
        }
    }
    Ok(())
}

//! Weighted time-specific accuracy of a fitted score: the cutoff meeting a
//! false-positive target and TPR/PPV/NPV/AUC at that cutoff.

use ncc_ipw::accuracy::WeightedScores;
use ncc_ipw::cohort::km_censoring_survival;
use ncc_ipw::estimators::fit_cox;
use ncc_ipw::sampling::{sample, NccDesign};
use ncc_ipw::seed::{rng_for, stream};
use ncc_ipw::sim::generate;
use ncc_ipw::weights::{SamplingWeights, WeightScheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t0 = 1.0;
    let sim = generate(5000, &mut rng_for(&[14, 0, stream::COHORT]))?;
    let cohort = &sim.cohort;
    let s = sample(cohort, &NccDesign::new(0.5, 3, None)?, &mut rng_for(&[14, 0, stream::SAMPLE]))?;
    let w = SamplingWeights::compute(WeightScheme::New, &s, cohort)?;
    let g = km_censoring_survival(cohort, None)?;
    let fit = fit_cox(cohort, &w, t0)?;
    let scores: Vec<f64> = cohort.subjects().iter().map(|s| fit.risk(&s.markers)).collect();

    let ws = WeightedScores::new(&scores, cohort, &w.values, &g, t0)?;
    println!("AUC {:.3}", ws.auc().unwrap_or(f64::NAN));
    for target in [0.01, 0.05, 0.10, 0.20] {
        let choice = ws.cutoff_for_fpr(target)?;
        let r = ws.rates(choice.cutoff);
        println!(
            "FPR <= {target:.2}: cutoff {:.4} (FPR {:.3}), TPR {:.3}, PPV {:.3}, NPV {:.3}",
            choice.cutoff,
            choice.achieved_fpr,
            r.tpr.unwrap_or(f64::NAN),
            r.ppv.unwrap_or(f64::NAN),
            r.npv.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}

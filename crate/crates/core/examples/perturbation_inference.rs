//! Point estimates with perturbation standard errors and normal intervals
//! for one NCC sample.
//!
//! ```text
//! cargo run --release --example perturbation_inference -- [pi1] [B]
//! ```

use ncc_ipw::cohort::km_censoring_survival;
use ncc_ipw::estimators::ModelKind;
use ncc_ipw::perturbation::{perturb, PerturbationConfig};
use ncc_ipw::pipeline::{estimate, param_names, EstimationSpec};
use ncc_ipw::sampling::{sample, NccDesign};
use ncc_ipw::seed::{derive_seed, rng_for, stream};
use ncc_ipw::sim::generate;
use ncc_ipw::weights::{SamplingWeights, WeightScheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let pi1: f64 = args.first().map_or(Ok(0.5), |s| s.parse())?;
    let b: usize = args.get(1).map_or(Ok(200), |s| s.parse())?;

    let sim = generate(2000, &mut rng_for(&[15, 0, stream::COHORT]))?;
    let cohort = &sim.cohort;
    let s = sample(cohort, &NccDesign::new(pi1, 3, None)?, &mut rng_for(&[15, 0, stream::SAMPLE]))?;
    let w = SamplingWeights::compute(WeightScheme::New, &s, cohort)?;
    let g = km_censoring_survival(cohort, None)?;
    let spec = EstimationSpec::new(ModelKind::Cox, 1.0, 0.05);
    let point = estimate(cohort, &w.values, &g, &spec)?;

    let cfg = PerturbationConfig {
        n_perturb: b,
        level: 0.95,
        seed: derive_seed(&[15, stream::PERTURB]),
    };
    let inf = perturb(cohort, &s, &point, &spec, &cfg)?;
    println!("{} of {} replicates used", inf.b_used, inf.b_total);
    let fmt = |v: Option<f64>| v.map_or("     -".to_string(), |x| format!("{x:6.3}"));
    for (k, name) in param_names(&["z", "b"]).iter().enumerate() {
        println!(
            "{name:>7}: {}  se {}  95% CI [{}, {}]",
            fmt(inf.point[k]),
            fmt(inf.se[k]),
            fmt(inf.ci_lower[k]),
            fmt(inf.ci_upper[k])
        );
    }
    Ok(())
}

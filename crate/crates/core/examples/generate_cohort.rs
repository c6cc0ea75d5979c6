//! Writes a synthetic cohort CSV usable by the `ncc-ipw` binary.
//!
//! ```text
//! cargo run --example generate_cohort -- cohort.csv [n] [seed]
//! ```

use ncc_ipw::io::write_cohort;
use ncc_ipw::seed::{rng_for, stream};
use ncc_ipw::sim::generate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().cloned().unwrap_or_else(|| "cohort.csv".to_string());
    let n: usize = args.get(1).map_or(Ok(2000), |s| s.parse())?;
    let seed: u64 = args.get(2).map_or(Ok(1), |s| s.parse())?;
    let sim = generate(n, &mut rng_for(&[seed, 0, stream::COHORT]))?;
    write_cohort(path.as_ref(), &sim.cohort)?;
    println!(
        "wrote {n} subjects to {path}: {} events ({:.1}% censored)",
        sim.cohort.n_events(),
        100.0 * sim.censoring_rate()
    );
    Ok(())
}

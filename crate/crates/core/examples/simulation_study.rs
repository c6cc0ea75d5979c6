//! Runs one simulation cell and prints its aggregate table.
//!
//! ```text
//! cargo run --release --example simulation_study -- [pi1] [cox|glm] [n_reps] [n_perturb] [n_cohort]
//! ```

use ncc_ipw::estimators::ModelKind;
use ncc_ipw::sim::{run_cell, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let config = SimConfig {
        pi1: arg(0, "0.5").parse()?,
        model: if arg(1, "cox") == "glm" { ModelKind::TdGlm } else { ModelKind::Cox },
        n_reps: arg(2, "50").parse()?,
        n_perturb: arg(3, "100").parse()?,
        n_cohort: arg(4, "2000").parse()?,
        ..SimConfig::default()
    };
    let started = std::time::Instant::now();
    let cell = run_cell(&config)?;
    let mean = |f: fn(&ncc_ipw::sim::ReplicationRecord) -> usize| {
        cell.records.iter().map(f).sum::<usize>() as f64 / cell.records.len() as f64
    };
    println!(
        "{}: {} replications in {:.1?}; mean events {:.1}, cases {:.1}, sub-cohort {:.1}",
        config.cell_name(),
        config.n_reps,
        started.elapsed(),
        mean(|r| r.n_events),
        mean(|r| r.n_cases),
        mean(|r| r.n_selected),
    );
    print!("{}", cell.report.to_csv()?);
    Ok(())
}

//! Command-line front end: `simulate`, `sample`, `estimate`, `report`.
//!
//! Exit codes: 0 on success (statistical non-convergence included, it is
//! reported inside the output), 1 on internal failure, 2 on usage or
//! input errors.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::accuracy::AccuracySummary;
use crate::cohort::km_censoring_survival;
use crate::error::Error;
use crate::estimators::{Link, ModelKind};
use crate::io::{self, CohortFile, IoError};
use crate::perturbation::{perturb, PerturbationConfig};
use crate::pipeline::{estimate, param_names, EstimationSpec, Estimates};
use crate::sampling::{sample, NccDesign, NccSample};
use crate::seed::{derive_seed, rng_for, stream};
use crate::sim::{aggregate, run_cell, ReplicationRecord, SimConfig, Truth};
use crate::weights::{SamplingWeights, WeightScheme};

#[derive(Debug, Parser)]
#[command(name = "ncc-ipw", version, about = "IPW estimation and perturbation inference for nested case-control samples")]
pub struct Cli {
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Cox,
    Glm,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Cox => ModelKind::Cox,
            ModelArg::Glm => ModelKind::TdGlm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    New,
    Samuelsen,
    /// Every subject weighted 1 (full-cohort reference; no sample needed).
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every (pi1, matching, model) cell of a study config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a nested case-control sample from a cohort CSV.
    Sample {
        #[arg(long)]
        cohort: PathBuf,
        #[arg(long)]
        pi1: f64,
        #[arg(long, default_value_t = 3)]
        m: usize,
        /// Matching tolerances, one per matching column, e.g. `0,1`.
        #[arg(long = "match")]
        match_tol: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a risk model on a sample and evaluate its accuracy.
    Estimate {
        #[arg(long)]
        cohort: PathBuf,
        /// Directory written by `sample`.
        #[arg(long)]
        sample: Option<PathBuf>,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        t0: f64,
        #[arg(long, value_enum, default_value_t = WeightArg::New)]
        weight: WeightArg,
        /// Expected case fraction; must agree with the sample's design.
        #[arg(long)]
        pi1: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long = "match")]
        match_tol: Option<String>,
        /// Perturbation replicates; 0 reports point estimates only.
        #[arg(long = "B", default_value_t = 0)]
        b: usize,
        #[arg(long, default_value_t = 0.05)]
        fpr_target: f64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate replication records written by `simulate`.
    Report {
        /// Files or glob patterns.
        #[arg(required = true)]
        inputs: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

fn model_error_code(e: &Error) -> i32 {
    match e {
        Error::InvalidCohort(_)
        | Error::DimensionMismatch { .. }
        | Error::IndexOutOfRange { .. }
        | Error::NoEvents
        | Error::InvalidDesign(_)
        | Error::InconsistentSample(_) => 2,
        _ => 1,
    }
}

/// Errors while reading inputs are the user's; while writing, ours.
fn input(e: IoError) -> CliError {
    let code = match &e {
        IoError::Model(m) => model_error_code(m),
        _ => 2,
    };
    CliError {
        code,
        message: e.to_string(),
    }
}

fn output(e: IoError) -> CliError {
    CliError::internal(e.to_string())
}

fn model(e: Error) -> CliError {
    CliError {
        code: model_error_code(&e),
        message: e.to_string(),
    }
}

/// Written next to every output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub master_seed: Option<u64>,
    pub threads: Option<usize>,
    pub duration_secs: f64,
}

/// Record file written per replication: the cell, its truth and the record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEnvelope {
    pub config: SimConfig,
    pub truth: Truth,
    pub record: ReplicationRecord,
}

/// The `estimate` model block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub model: ModelKind,
    pub t0: f64,
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub name: String,
    pub estimate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSummary {
    pub b_total: usize,
    pub b_used: usize,
    pub level: f64,
    pub seed: u64,
}

/// `result.json` of `estimate`. Key order is the field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub model: ModelKind,
    pub t0: f64,
    pub weight: String,
    pub link: Link,
    pub n_subjects: usize,
    pub n_events: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cases: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi1_realized: Option<f64>,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<AccuracySummary>,
    pub parameters: Vec<ParamEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSummary>,
}

/// Sampling design as saved by `sample` next to the sample files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignFile {
    pub pi1: f64,
    pub m: usize,
    pub match_tol: Option<Vec<f64>>,
    pub seed: u64,
}

fn parse_tol(raw: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("--match: cannot parse {s:?}")))
        })
        .collect()
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}

fn show(p: &Path) -> String {
    p.display().to_string()
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads;
    let go = move || dispatch(cli.command, threads);
    match threads {
        Some(0) => Err(CliError::usage("--threads must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::internal(e.to_string()))?
            .install(go),
        None => go(),
    }
}

fn dispatch(command: Command, threads: Option<usize>) -> Result<(), CliError> {
    let started = Instant::now();
    let (name, out, manifest_path, mut manifest) = match command {
        Command::Simulate { config, out } => {
            let m = cmd_simulate(&config, &out)?;
            ("simulate", out.clone(), out.join("manifest.json"), m)
        }
        Command::Sample {
            cohort,
            pi1,
            m,
            match_tol,
            seed,
            out,
        } => {
            let tol = match_tol.as_deref().map(parse_tol).transpose()?;
            let man = cmd_sample(&cohort, pi1, m, tol, seed, &out)?;
            ("sample", out.clone(), out.join("manifest.json"), man)
        }
        Command::Estimate {
            cohort,
            sample,
            model,
            t0,
            weight,
            pi1,
            m,
            match_tol,
            b,
            fpr_target,
            level,
            seed,
            out,
        } => {
            let tol = match_tol.as_deref().map(parse_tol).transpose()?;
            let args = EstimateArgs {
                cohort,
                sample,
                model: model.into(),
                t0,
                weight,
                pi1,
                m,
                match_tol: tol,
                b,
                fpr_target,
                level,
                seed,
            };
            let man = cmd_estimate(&args, &out)?;
            ("estimate", out.clone(), out.join("manifest.json"), man)
        }
        Command::Report { inputs, out } => {
            let man = cmd_report(&inputs, &out)?;
            let mut mp = out.clone().into_os_string();
            mp.push(".manifest.json");
            ("report", out.clone(), PathBuf::from(mp), man)
        }
    };
    manifest.command = name.to_string();
    manifest.threads = threads;
    manifest.duration_secs = started.elapsed().as_secs_f64();
    let _ = out;
    io::write_json(&manifest_path, &manifest).map_err(output)
}

fn manifest(config: serde_json::Value, inputs: Vec<String>, outputs: Vec<String>, seed: Option<u64>) -> RunManifest {
    RunManifest {
        command: String::new(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        inputs,
        outputs,
        master_seed: seed,
        threads: None,
        duration_secs: 0.0,
    }
}

fn cmd_simulate(config: &Path, out: &Path) -> Result<RunManifest, CliError> {
    let text = std::fs::read_to_string(config).map_err(|e| CliError::usage(format!("{}: {e}", config.display())))?;
    let study = io::parse_config(&text).map_err(input)?;
    create_dir(out)?;
    let mut outputs = Vec::new();
    for cell in study.cells() {
        let result = run_cell(&cell).map_err(model)?;
        let name = cell.cell_name();
        let csv_path = out.join(format!("{name}.csv"));
        let csv = result.report.to_csv().map_err(model)?;
        std::fs::write(&csv_path, csv).map_err(|e| CliError::internal(format!("{}: {e}", csv_path.display())))?;
        outputs.push(show(&csv_path));
        let rec_dir = out.join("records").join(&name);
        create_dir(&rec_dir)?;
        for record in result.records {
            let p = rec_dir.join(format!("rep_{:05}.json", record.rep_id));
            let env = RecordEnvelope {
                config: cell.clone(),
                truth: result.truth.clone(),
                record,
            };
            io::write_json(&p, &env).map_err(output)?;
        }
        outputs.push(show(&rec_dir));
    }
    let cells: Vec<SimConfig> = study.cells();
    Ok(manifest(
        serde_json::to_value(&cells).expect("config serializes"),
        vec![show(config)],
        outputs,
        Some(study.base.master_seed),
    ))
}

fn cmd_sample(
    cohort_path: &Path,
    pi1: f64,
    m: usize,
    match_tol: Option<Vec<f64>>,
    seed: u64,
    out: &Path,
) -> Result<RunManifest, CliError> {
    let cf = io::read_cohort(cohort_path).map_err(input)?;
    let design = NccDesign::new(pi1, m, match_tol.clone()).map_err(model)?;
    let s = sample(&cf.cohort, &design, &mut rng_for(&[seed, stream::SAMPLE])).map_err(model)?;
    create_dir(out)?;
    let (sp, ap, dp) = (out.join("sample.csv"), out.join("assignments.csv"), out.join("design.json"));
    io::write_sample(&sp, &cf.ids, &s).map_err(output)?;
    io::write_assignments(&ap, &cf.ids, s.assignments()).map_err(output)?;
    let design_file = DesignFile {
        pi1,
        m,
        match_tol,
        seed,
    };
    io::write_json(&dp, &design_file).map_err(output)?;
    Ok(manifest(
        serde_json::to_value(&design_file).expect("design serializes"),
        vec![show(cohort_path)],
        vec![show(&sp), show(&ap), show(&dp)],
        Some(seed),
    ))
}

/// Parsed `estimate` arguments.
#[derive(Debug, Clone)]
pub struct EstimateArgs {
    pub cohort: PathBuf,
    pub sample: Option<PathBuf>,
    pub model: ModelKind,
    pub t0: f64,
    pub weight: WeightArg,
    pub pi1: Option<f64>,
    pub m: Option<usize>,
    pub match_tol: Option<Vec<f64>>,
    pub b: usize,
    pub fpr_target: f64,
    pub level: f64,
    pub seed: u64,
}

/// Rebuilds the sample from the files written by `sample` and checks that
/// the stored indicators and probabilities agree with the cohort.
pub fn load_sample(cf: &CohortFile, dir: &Path, args: &EstimateArgs) -> Result<NccSample, CliError> {
    let design_path = dir.join("design.json");
    let saved: Option<DesignFile> = if design_path.exists() {
        Some(io::read_json(&design_path).map_err(input)?)
    } else {
        None
    };
    let disagree = |flag: &str| CliError::usage(format!("--{flag} disagrees with {}", design_path.display()));
    let pi1 = match (args.pi1, &saved) {
        (Some(p), Some(d)) if p != d.pi1 => return Err(disagree("pi1")),
        (Some(p), _) => p,
        (None, Some(d)) => d.pi1,
        (None, None) => return Err(CliError::usage("--pi1 is required without design.json")),
    };
    let match_tol = match (&args.match_tol, &saved) {
        (Some(t), Some(d)) if Some(t) != d.match_tol.as_ref() => return Err(disagree("match")),
        (Some(t), _) => Some(t.clone()),
        (None, Some(d)) => d.match_tol.clone(),
        (None, None) => None,
    };
    let m = args.m.or(saved.as_ref().map(|d| d.m)).unwrap_or(1);
    let design = NccDesign::new(pi1, m, match_tol).map_err(model)?;
    let rows = io::read_sample(&dir.join("sample.csv"), cf).map_err(input)?;
    let assignments = io::read_assignments(&dir.join("assignments.csv"), cf, &rows.v1).map_err(input)?;
    let s = NccSample::from_parts(&cf.cohort, design, rows.v1, assignments).map_err(model)?;
    if s.v0() != rows.v0.as_slice() {
        return Err(CliError::usage("sample.csv v0 disagrees with assignments.csv"));
    }
    if let Some(j) = (0..s.len()).find(|&j| (s.p0()[j] - rows.p0[j]).abs() > 1e-12 * (1.0 + rows.p0[j].abs())) {
        return Err(CliError::usage(format!(
            "sample.csv p0 for id {:?} disagrees with the cohort and design",
            cf.ids[j]
        )));
    }
    Ok(s)
}

/// The full `estimate` computation without touching the output directory.
pub fn estimate_record(args: &EstimateArgs) -> Result<(EstimateRecord, Vec<String>, Vec<f64>), CliError> {
    let cf = io::read_cohort(&args.cohort).map_err(input)?;
    if !(args.t0 > 0.0 && args.t0.is_finite()) {
        return Err(CliError::usage("--t0 must be positive"));
    }
    if !(args.fpr_target > 0.0 && args.fpr_target < 1.0) {
        return Err(CliError::usage("--fpr-target must lie in (0, 1)"));
    }
    if !(0.0..1.0).contains(&args.level) {
        return Err(CliError::usage("--level must lie in [0, 1)"));
    }
    if args.b > 0 && args.weight != WeightArg::New {
        return Err(CliError::usage("perturbation (--B > 0) is defined for --weight new only"));
    }
    let cohort = &cf.cohort;
    let ncc = match (args.weight, &args.sample) {
        (WeightArg::Full, _) => None,
        (_, Some(dir)) => Some(load_sample(&cf, dir, args)?),
        (_, None) => return Err(CliError::usage("--sample is required for --weight new/samuelsen")),
    };
    let weights = match (&ncc, args.weight) {
        (Some(s), WeightArg::New) => SamplingWeights::compute(WeightScheme::New, s, cohort),
        (Some(s), WeightArg::Samuelsen) => SamplingWeights::compute(WeightScheme::Samuelsen, s, cohort),
        _ => Ok(SamplingWeights::full_cohort(cohort.len())),
    }
    .map_err(model)?;
    let g = km_censoring_survival(cohort, None).map_err(model)?;
    let spec = EstimationSpec::new(args.model, args.t0, args.fpr_target);
    let markers: Vec<&str> = cf.marker_names.iter().map(String::as_str).collect();
    let names = param_names(&markers);

    let (est, failure): (Option<Estimates>, Option<String>) = match estimate(cohort, &weights.values, &g, &spec) {
        Ok(e) => (Some(e), None),
        Err(Error::Fit(f)) => (None, Some(f.to_string())),
        Err(e) => return Err(model(e)),
    };
    let perturb_seed = derive_seed(&[args.seed, stream::PERTURB]);
    let inference = match (&est, &ncc) {
        (Some(point), Some(s)) if args.b > 0 => {
            let cfg = PerturbationConfig {
                n_perturb: args.b,
                level: args.level,
                seed: perturb_seed,
            };
            Some(perturb(cohort, s, point, &spec, &cfg).map_err(model)?)
        }
        _ => None,
    };
    let values = est.as_ref().map_or_else(|| vec![None; names.len()], Estimates::values);
    let parameters = names
        .iter()
        .enumerate()
        .map(|(k, name)| ParamEstimate {
            name: name.clone(),
            estimate: values[k],
            se: inference.as_ref().and_then(|r| r.se[k]),
            ci_lower: inference.as_ref().and_then(|r| r.ci_lower[k]),
            ci_upper: inference.as_ref().and_then(|r| r.ci_upper[k]),
        })
        .collect();
    let link = match args.model {
        ModelKind::Cox => Link::Cloglog,
        ModelKind::TdGlm => spec.link,
    };
    let record = EstimateRecord {
        model: args.model,
        t0: args.t0,
        weight: match args.weight {
            WeightArg::New => "new",
            WeightArg::Samuelsen => "samuelsen",
            WeightArg::Full => "full",
        }
        .to_string(),
        link,
        n_subjects: cohort.len(),
        n_events: cohort.n_events(),
        n_cases: ncc.as_ref().map(NccSample::n_cases),
        pi1_realized: ncc.as_ref().map(NccSample::pi1_realized),
        converged: est.is_some(),
        failure,
        fit: est.as_ref().map(|e| FitRecord {
            model: e.fit.model,
            t0: e.fit.t0,
            alpha: e.fit.alpha,
            beta: e.fit.beta.clone(),
            converged: e.fit.converged,
            iterations: e.fit.iterations,
        }),
        accuracy: est.as_ref().map(|e| e.accuracy),
        parameters,
        perturbation: inference.as_ref().map(|r| PerturbationSummary {
            b_total: r.b_total,
            b_used: r.b_used,
            level: args.level,
            seed: args.seed,
        }),
    };
    Ok((record, cf.ids.clone(), weights.values))
}

fn cmd_estimate(args: &EstimateArgs, out: &Path) -> Result<RunManifest, CliError> {
    let (record, ids, weights) = estimate_record(args)?;
    create_dir(out)?;
    let rp = out.join("result.json");
    io::write_json(&rp, &record).map_err(output)?;
    let wp = out.join("weights.csv");
    let mut w = csv::Writer::from_path(&wp).map_err(|e| CliError::internal(format!("{}: {e}", wp.display())))?;
    let werr = |e: csv::Error| CliError::internal(format!("{}: {e}", wp.display()));
    w.write_record(["id", "w"]).map_err(werr)?;
    for (id, v) in ids.iter().zip(&weights) {
        w.write_record([id.clone(), v.to_string()]).map_err(werr)?;
    }
    w.flush().map_err(|e| CliError::internal(format!("{}: {e}", wp.display())))?;

    let mut inputs = vec![show(&args.cohort)];
    inputs.extend(args.sample.iter().map(|p| show(p)));
    let config = serde_json::json!({
        "model": args.model,
        "t0": args.t0,
        "weight": record.weight,
        "pi1": args.pi1,
        "m": args.m,
        "match": args.match_tol,
        "B": args.b,
        "fpr_target": args.fpr_target,
        "level": args.level,
        "seed": args.seed,
    });
    Ok(manifest(config, inputs, vec![show(&rp), show(&wp)], Some(args.seed)))
}

fn cmd_report(patterns: &[String], out: &Path) -> Result<RunManifest, CliError> {
    let mut paths = Vec::new();
    for pat in patterns {
        let matches = glob::glob(pat).map_err(|e| CliError::usage(format!("bad pattern {pat:?}: {e}")))?;
        for m in matches {
            paths.push(m.map_err(|e| CliError::usage(e.to_string()))?);
        }
    }
    paths.sort();
    paths.dedup();
    if paths.is_empty() {
        return Err(CliError::usage("no record files matched"));
    }
    let mut envelopes = Vec::with_capacity(paths.len());
    for p in &paths {
        envelopes.push(io::read_json::<RecordEnvelope>(p).map_err(input)?);
    }
    let first = &envelopes[0];
    if let Some(bad) = envelopes.iter().position(|e| !e.config.same_cell(&first.config) || e.truth != first.truth) {
        return Err(CliError::usage(format!(
            "{} belongs to a different configuration than {}",
            paths[bad].display(),
            paths[0].display()
        )));
    }
    let mut ids: Vec<u64> = envelopes.iter().map(|e| e.record.rep_id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::usage("duplicate replication ids among the inputs"));
    }
    let records: Vec<ReplicationRecord> = envelopes.iter().map(|e| e.record.clone()).collect();
    let report = aggregate(&records, &first.truth).map_err(model)?;
    let csv = report.to_csv().map_err(model)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    std::fs::write(out, csv).map_err(|e| CliError::internal(format!("{}: {e}", out.display())))?;
    Ok(manifest(
        serde_json::to_value(&first.config).expect("config serializes"),
        paths.iter().map(|p| show(p)).collect(),
        vec![show(out)],
        Some(first.config.master_seed),
    ))
}

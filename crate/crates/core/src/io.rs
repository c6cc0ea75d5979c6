//! File formats: cohort, sample and assignment CSVs, and the flat
//! `key=value` study configuration.
//!
//! Cohort CSV: header `id,time,delta,z1..zp[,m1..mq]`. Marker columns
//! start with `z`, matching columns with `m`; `delta` is `0` or `1`. Ids
//! are arbitrary unique strings and are mapped to row order internally.

use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::cohort::{Cohort, Subject};
use crate::error::Error;
use crate::estimators::ModelKind;
use crate::sampling::{ControlAssignments, NccSample};
use crate::sim::SimConfig;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error(transparent)]
    Model(#[from] Error),
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> IoError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => IoError::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => IoError::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("{kind:?}"),
        },
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let f = File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let f = File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(f))
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, col: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| IoError::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("column `{col}`: cannot parse {raw:?}"),
    })
}

fn parse_flag(path: &Path, line: u64, col: &str, raw: &str) -> Result<bool> {
    match raw {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(IoError::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("column `{col}` must be 0 or 1, got {raw:?}"),
        }),
    }
}

/// A cohort read from disk with its external ids and column names.
#[derive(Debug, Clone)]
pub struct CohortFile {
    pub cohort: Cohort,
    pub ids: Vec<String>,
    pub marker_names: Vec<String>,
    pub match_names: Vec<String>,
}

impl CohortFile {
    pub fn index_of(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
    }
}

pub fn read_cohort(path: &Path) -> Result<CohortFile> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let bad_header = |msg: String| IoError::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg,
    };
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 4 || cols[..3] != ["id", "time", "delta"] {
        return Err(bad_header("header must start with id,time,delta and list at least one marker".into()));
    }
    let n_markers = cols[3..].iter().take_while(|c| c.starts_with('z')).count();
    let rest = &cols[3 + n_markers..];
    if n_markers == 0 || !rest.iter().all(|c| c.starts_with('m')) {
        return Err(bad_header("marker columns (z...) must precede matching columns (m...)".into()));
    }
    let marker_names = cols[3..3 + n_markers].iter().map(|s| s.to_string()).collect();
    let match_names: Vec<String> = rest.iter().map(|s| s.to_string()).collect();

    let mut ids = Vec::new();
    let mut seen = HashMap::new();
    let mut subjects = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec[0].to_string();
        if seen.insert(id.clone(), line).is_some() {
            return Err(IoError::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("duplicate id {id:?}"),
            });
        }
        let time: f64 = parse_field(path, line, "time", &rec[1])?;
        if !(time > 0.0 && time.is_finite()) {
            return Err(IoError::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("time must be positive and finite, got {time}"),
            });
        }
        let delta = parse_flag(path, line, "delta", &rec[2])?;
        let values = (3..cols.len())
            .map(|k| parse_field::<f64>(path, line, cols[k], &rec[k]))
            .collect::<Result<Vec<_>>>()?;
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(IoError::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("column `{}` is not finite", cols[3 + k]),
            });
        }
        let mut s = Subject::new(subjects.len(), time, delta, values[..n_markers].to_vec());
        if !match_names.is_empty() {
            s = s.with_match_vars(values[n_markers..].to_vec());
        }
        subjects.push(s);
        ids.push(id);
    }
    Ok(CohortFile {
        cohort: Cohort::new(subjects)?,
        ids,
        marker_names,
        match_names,
    })
}

pub fn write_cohort(path: &Path, cohort: &Cohort) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["id".to_string(), "time".into(), "delta".into()];
    header.extend((1..=cohort.n_markers()).map(|k| format!("z{k}")));
    header.extend((1..=cohort.n_match_vars().unwrap_or(0)).map(|k| format!("m{k}")));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for s in cohort.subjects() {
        let mut row = vec![s.id.to_string(), s.time.to_string(), (s.delta as u8).to_string()];
        row.extend(s.markers.iter().map(f64::to_string));
        if let Some(m) = &s.match_vars {
            row.extend(m.iter().map(f64::to_string));
        }
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes `id,v1,v0,p0` for every subject. Probabilities use the shortest
/// round-trip representation, so re-reading is exact.
pub fn write_sample(path: &Path, ids: &[String], sample: &NccSample) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["id", "v1", "v0", "p0"]).map_err(|e| csv_err(path, e))?;
    for (j, id) in ids.iter().enumerate() {
        w.write_record([
            id.clone(),
            (sample.v1()[j] as u8).to_string(),
            (sample.v0()[j] as u8).to_string(),
            sample.p0()[j].to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

/// Rows of a sample file: per-subject `(v1, v0, p0)` in cohort order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRows {
    pub v1: Vec<bool>,
    pub v0: Vec<bool>,
    pub p0: Vec<f64>,
}

fn lookup(path: &Path, line: u64, index: &HashMap<&str, usize>, id: &str) -> Result<usize> {
    index.get(id).copied().ok_or_else(|| IoError::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("unknown id {id:?}"),
    })
}

pub fn read_sample(path: &Path, cohort: &CohortFile) -> Result<SampleRows> {
    let index = cohort.index_of();
    let n = cohort.ids.len();
    let mut rows: Vec<Option<(bool, bool, f64)>> = vec![None; n];
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "v1", "v0", "p0"] {
        return Err(IoError::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "header must be id,v1,v0,p0".into(),
        });
    }
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let j = lookup(path, line, &index, &rec[0])?;
        let v1 = parse_flag(path, line, "v1", &rec[1])?;
        let v0 = parse_flag(path, line, "v0", &rec[2])?;
        let p0: f64 = parse_field(path, line, "p0", &rec[3])?;
        if rows[j].replace((v1, v0, p0)).is_some() {
            return Err(IoError::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("duplicate id {:?}", &rec[0]),
            });
        }
    }
    if let Some(j) = rows.iter().position(Option::is_none) {
        return Err(IoError::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("no row for id {:?}", cohort.ids[j]),
        });
    }
    let (mut v1, mut v0, mut p0) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (a, b, c) in rows.into_iter().flatten() {
        v1.push(a);
        v0.push(b);
        p0.push(c);
    }
    Ok(SampleRows { v1, v0, p0 })
}

pub fn write_assignments(path: &Path, ids: &[String], assignments: &ControlAssignments) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["case_id", "control_id"]).map_err(|e| csv_err(path, e))?;
    for (&i, ctrls) in assignments {
        for &l in ctrls {
            w.write_record([&ids[i], &ids[l]]).map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Reads `case_id,control_id` pairs. Cases flagged in `v1` without any
/// pair still get an (empty) entry.
pub fn read_assignments(path: &Path, cohort: &CohortFile, v1: &[bool]) -> Result<ControlAssignments> {
    let index = cohort.index_of();
    let mut out: ControlAssignments = (0..v1.len()).filter(|&i| v1[i]).map(|i| (i, Vec::new())).collect();
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["case_id", "control_id"] {
        return Err(IoError::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "header must be case_id,control_id".into(),
        });
    }
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let i = lookup(path, line, &index, &rec[0])?;
        let l = lookup(path, line, &index, &rec[1])?;
        out.entry(i).or_default().push(l);
    }
    for ctrls in out.values_mut() {
        ctrls.sort_unstable();
    }
    Ok(out)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// A study: base settings plus the list-valued keys that span its cells.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub base: SimConfig,
    pub pi1: Vec<f64>,
    pub matching: Vec<bool>,
    pub model: Vec<ModelKind>,
}

impl StudyConfig {
    /// Cells in (model, matching, pi1) order.
    pub fn cells(&self) -> Vec<SimConfig> {
        let mut out = Vec::new();
        for &model in &self.model {
            for &matching in &self.matching {
                for &pi1 in &self.pi1 {
                    out.push(SimConfig {
                        model,
                        matching,
                        pi1,
                        ..self.base.clone()
                    });
                }
            }
        }
        out
    }
}

/// Recognised configuration keys; `pi1`, `matching` and `model` accept
/// comma-separated lists.
pub const CONFIG_KEYS: [&str; 12] = [
    "n_cohort",
    "pi1",
    "m",
    "matching",
    "t0",
    "model",
    "n_reps",
    "n_perturb",
    "fpr_target",
    "master_seed",
    "level",
    "truth_draws",
];

fn config_err(key: &str, msg: impl Into<String>) -> IoError {
    IoError::Config {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| config_err(key, format!("cannot parse {raw:?}")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(config_err(key, format!("expected true/false, got {raw:?}"))),
    }
}

fn parse_model(key: &str, raw: &str) -> Result<ModelKind> {
    match raw {
        "cox" => Ok(ModelKind::Cox),
        "glm" => Ok(ModelKind::TdGlm),
        _ => Err(config_err(key, format!("expected cox or glm, got {raw:?}"))),
    }
}

fn list<T>(key: &str, raw: &str, f: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    let v = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(key, s))
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        return Err(config_err(key, "empty list"));
    }
    Ok(v)
}

/// Parses `key = value` lines; `#` starts a comment. Unset keys keep the
/// defaults of [`SimConfig`]. Every resulting cell is validated.
pub fn parse_config(text: &str) -> Result<StudyConfig> {
    let mut base = SimConfig::default();
    let mut pi1 = vec![base.pi1];
    let mut matching = vec![base.matching];
    let mut model = vec![base.model];
    for raw_line in text.lines() {
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| config_err(line, "expected key=value"))?;
        match key {
            "n_cohort" => base.n_cohort = parse_value(key, value)?,
            "pi1" => pi1 = list(key, value, parse_value)?,
            "m" => base.m = parse_value(key, value)?,
            "matching" => matching = list(key, value, parse_bool)?,
            "t0" => base.t0 = parse_value(key, value)?,
            "model" => model = list(key, value, parse_model)?,
            "n_reps" => base.n_reps = parse_value(key, value)?,
            "n_perturb" => base.n_perturb = parse_value(key, value)?,
            "fpr_target" => base.fpr_target = parse_value(key, value)?,
            "master_seed" => base.master_seed = parse_value(key, value)?,
            "level" => base.level = parse_value(key, value)?,
            "truth_draws" => base.truth_draws = parse_value(key, value)?,
            _ => return Err(config_err(key, format!("unknown key; expected one of {}", CONFIG_KEYS.join(", ")))),
        }
    }
    let study = StudyConfig {
        base,
        pi1,
        matching,
        model,
    };
    for cell in study.cells() {
        cell.validate().map_err(|e| match e {
            Error::InvalidDesign(msg) => {
                let key = msg.split(':').next().unwrap_or("").to_string();
                IoError::Config {
                    msg: msg[key.len()..].trim_start_matches(':').trim().to_string(),
                    key,
                }
            }
            other => IoError::Model(other),
        })?;
    }
    Ok(study)
}

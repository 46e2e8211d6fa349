//! Config-driven experiment runners, sweeps and result persistence.

mod config;
mod fields;
mod runners;
mod table;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use config::*;
pub use runners::*;
pub use table::{format_number, Artifact, CsvTable};

use crate::error::{ConfigIssue, DqmError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const OUT_DIR_ENV: &str = "DQM_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "dqm-out";
pub const MAX_SWEEP_POINTS: usize = 10_000;
const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// What a run leaves behind, persisted as `result.json` next to its CSV files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub version: String,
    pub config: Value,
    pub config_hash: String,
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub summary: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
    pub duration_seconds: f64,
}

/// Output root: `$DQM_OUT_DIR`, else `dqm-out`.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn short(hash: &str) -> &str {
    &hash[..16]
}

/// `output_path` if set, else `<root>/<experiment>-<hash prefix>`.
pub fn output_dir(config: &ExperimentConfig, root: &Path) -> PathBuf {
    match &config.output_path {
        Some(p) => PathBuf::from(p),
        None => root.join(format!("{}-{}", config.kind(), short(&config.hash()))),
    }
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        fs::write(dir.join(&a.name), &a.contents)?;
        names.push(a.name.clone());
    }
    Ok(names)
}

fn write_record(record: &ResultRecord) -> Result<()> {
    let text = serde_json::to_string_pretty(record).map_err(|e| DqmError::Numeric(e.to_string()))?;
    fs::write(record.output_dir.join("result.json"), text + "\n")?;
    Ok(())
}

/// Runs one experiment and writes its artifacts and `result.json`.
pub fn execute(config: &ExperimentConfig, root: &Path) -> Result<ResultRecord> {
    let started = Instant::now();
    let output = run_experiment(config)?;
    let dir = output_dir(config, root);
    let files = write_artifacts(&dir, &output.artifacts)?;
    let record = ResultRecord {
        experiment: config.kind().name().to_string(),
        version: VERSION.to_string(),
        config: config.echo(),
        config_hash: config.hash(),
        output_dir: dir,
        files,
        summary: output.summary,
        warnings: output.warnings,
        duration_seconds: started.elapsed().as_secs_f64(),
    };
    write_record(&record)?;
    Ok(record)
}

/// One point of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub seed: u64,
    pub assignments: Vec<(String, Value)>,
}

/// Cross product of the `sweep` axes in key order; point `i` gets seed
/// `seed + i·0x9E3779B97F4A7C15` (wrapping), so point 0 reuses the base seed.
pub fn sweep_points(sweep: &Value, seed: u64) -> Result<Vec<SweepPoint>> {
    let axes = sweep
        .as_object()
        .ok_or_else(|| DqmError::Config(vec![ConfigIssue::new("sweep", "expected an object of parameter arrays")]))?;
    let mut issues = Vec::new();
    let mut lists = Vec::new();
    for (key, values) in axes {
        let path = format!("sweep.{key}");
        if key.split('.').count() != 2 || key.starts_with("sweep") {
            issues.push(ConfigIssue::new(&path, "axis must name a field as section.key"));
        }
        match values.as_array() {
            Some(v) => lists.push((key.clone(), v.clone())),
            None => issues.push(ConfigIssue::new(&path, "expected an array of values")),
        }
    }
    if !issues.is_empty() {
        return Err(DqmError::Config(issues));
    }
    if lists.is_empty() || lists.iter().any(|(_, v)| v.is_empty()) {
        return Ok(Vec::new());
    }
    let total = lists.iter().try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len()));
    match total {
        Some(t) if t <= MAX_SWEEP_POINTS => {}
        _ => {
            return Err(DqmError::Config(vec![ConfigIssue::new(
                "sweep",
                format!("grid exceeds {MAX_SWEEP_POINTS} points"),
            )]))
        }
    }
    let total = total.unwrap_or(0);
    let mut points = Vec::with_capacity(total);
    for index in 0..total {
        let mut rest = index;
        let mut assignments = vec![(String::new(), Value::Null); lists.len()];
        // last axis varies fastest
        for (slot, (key, values)) in assignments.iter_mut().zip(&lists).rev() {
            *slot = (key.clone(), values[rest % values.len()].clone());
            rest /= values.len();
        }
        points.push(SweepPoint {
            index,
            seed: seed.wrapping_add((index as u64).wrapping_mul(SEED_STRIDE)),
            assignments,
        });
    }
    Ok(points)
}

/// The single-run config of one sweep point.
pub fn point_config(base: &Value, point: &SweepPoint) -> Result<ExperimentConfig> {
    let mut v = base.clone();
    let map = v.as_object_mut().ok_or_else(|| DqmError::config("$", "config must be a JSON object"))?;
    map.remove("sweep");
    map.remove("output_path");
    map.insert("seed".into(), Value::from(point.seed));
    for (key, value) in &point.assignments {
        let (section, field) = key.split_once('.').expect("validated axis");
        let entry = map.entry(section.to_string()).or_insert_with(|| Value::Object(Default::default()));
        match entry.as_object_mut() {
            Some(m) => {
                m.insert(field.to_string(), value.clone());
            }
            None => return Err(DqmError::config(section, "expected an object")),
        }
    }
    config_from_value(&v)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map(format_number).unwrap_or_else(|| n.to_string()),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Runs every point of the config's `sweep` in parallel and writes, through one writer,
/// per-point artifacts under `point-NNNNN/` plus the aggregated `sweep.csv`.
pub fn run_sweep(text: &str, root: &Path) -> Result<ResultRecord> {
    let started = Instant::now();
    let raw: Value = serde_json::from_str(text)
        .map_err(|e| DqmError::Config(vec![ConfigIssue::new("$", format!("invalid JSON: {e}"))]))?;
    let base = config_from_value(&raw)?;
    let sweep = base
        .sweep
        .clone()
        .ok_or_else(|| DqmError::config("sweep", "missing (a sweep needs a parameter grid)"))?;
    let points = sweep_points(&sweep, base.seed)?;

    let mut canonical = raw.clone();
    if let Some(m) = canonical.as_object_mut() {
        m.remove("output_path");
    }
    let hash: String = Sha256::digest(serde_json::to_string(&canonical).expect("json").as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let dir = match &base.output_path {
        Some(p) => PathBuf::from(p),
        None => root.join(format!("{}-sweep-{}", base.kind(), short(&hash))),
    };

    let results: Vec<Result<(ExperimentConfig, ExperimentOutput)>> = points
        .par_iter()
        .map(|p| {
            let cfg = point_config(&raw, p)?;
            let out = run_experiment(&cfg)?;
            Ok((cfg, out))
        })
        .collect();

    let axis_names: Vec<String> = sweep.as_object().map(|m| m.keys().cloned().collect()).unwrap_or_default();
    let mut scalar_keys: Vec<String> = results
        .iter()
        .flatten()
        .flat_map(|(_, o)| o.summary.keys().cloned())
        .collect();
    scalar_keys.sort();
    scalar_keys.dedup();

    let mut header: Vec<&str> = vec!["point"];
    header.extend(axis_names.iter().map(String::as_str));
    header.extend(["seed", "status"]);
    header.extend(scalar_keys.iter().map(String::as_str));
    let mut table = CsvTable::new("sweep.csv", &hash, &header);

    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let mut failures = 0usize;
    let mut fit = (Vec::new(), Vec::new());
    for (point, result) in points.iter().zip(&results) {
        let mut row = vec![point.index.to_string()];
        row.extend(point.assignments.iter().map(|(_, v)| cell(v)));
        row.push(point.seed.to_string());
        match result {
            Ok((cfg, out)) => {
                row.push("ok".into());
                row.extend(scalar_keys.iter().map(|k| out.summary.get(k).map(cell).unwrap_or_default()));
                let sub = format!("point-{:05}", point.index);
                for name in write_artifacts(&dir.join(&sub), &out.artifacts)? {
                    files.push(format!("{sub}/{name}"));
                }
                if let (ExperimentParams::Collapse(c), Some(tau)) = (&cfg.params, out.get("tau_c")) {
                    fit.0.push(c.state.delta_e);
                    fit.1.push(tau);
                }
            }
            Err(e) => {
                failures += 1;
                row.push(format!("error: {}", e.to_string().replace('\n', " ")));
                row.extend(scalar_keys.iter().map(|_| String::new()));
            }
        }
        table.raw_row(&row);
    }
    let artifact = table.finish();
    files.extend(write_artifacts(&dir, std::slice::from_ref(&artifact))?);

    let mut summary = BTreeMap::new();
    summary.insert("points".into(), Value::from(points.len()));
    summary.insert("failures".into(), Value::from(failures));
    let distinct = fit.0.iter().any(|&x| x != fit.0[0]);
    if fit.0.len() >= 2 && distinct {
        summary.insert(
            "fitted_exponent".into(),
            Value::from(crate::constants::log_log_slope(&fit.0, &fit.1)),
        );
    }
    let record = ResultRecord {
        experiment: base.kind().name().to_string(),
        version: VERSION.to_string(),
        config: raw,
        config_hash: hash,
        output_dir: dir,
        files,
        summary,
        warnings: Vec::new(),
        duration_seconds: started.elapsed().as_secs_f64(),
    };
    write_record(&record)?;
    Ok(record)
}

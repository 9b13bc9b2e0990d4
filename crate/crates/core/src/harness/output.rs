use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::report::Report;
use super::Partial;
use crate::config::Config;
use crate::error::{Error, Result};

/// A CSV table; all cells are preformatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Provenance of a run. Unlike the statistics files it carries wall-clock
/// times and the thread count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub experiment: String,
    pub config_hash: String,
    pub config: Config,
    pub threads: usize,
    pub started: String,
    pub finished: String,
    pub files: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub dir: PathBuf,
    pub summary: PathBuf,
    pub manifest: PathBuf,
    pub tables: Vec<PathBuf>,
}

/// The JSON summary: keys sorted, no timestamps, identical for any thread
/// count.
pub fn summary_json(cfg: &Config, partial: &Partial, report: &Report) -> Value {
    json!({
        "experiment": cfg.experiment.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": partial.config_hash,
        "t": cfg.t,
        "seed": cfg.seed,
        "replicas_requested": cfg.replicas,
        "replicas_used": partial.samples.len(),
        "aborted": partial.aborted.len(),
        "pass": report.pass(),
        "checks": report.checks,
        "results": report.results,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `<table>.csv`, `summary.json` and `manifest.json` into `cfg.out`.
pub fn write_outputs(
    cfg: &Config,
    partial: &Partial,
    report: &Report,
    threads: usize,
    started: chrono::DateTime<chrono::Utc>,
) -> Result<OutputFiles> {
    let dir = cfg.out.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tables = Vec::new();
    for t in &report.tables {
        let p = dir.join(format!("{}.csv", t.name));
        write(&p, &t.to_csv())?;
        tables.push(p);
    }
    let summary = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary_json(cfg, partial, report))
        .map_err(|e| Error::Parse(e.to_string()))?;
    write(&summary, &(text + "\n"))?;
    let mut files: Vec<String> = report.tables.iter().map(|t| format!("{}.csv", t.name)).collect();
    files.push("summary.json".into());
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: cfg.experiment.name().into(),
        config_hash: partial.config_hash.clone(),
        config: cfg.clone(),
        threads,
        started: started.to_rfc3339(),
        finished: chrono::Utc::now().to_rfc3339(),
        files,
        pass: report.pass(),
    };
    let mpath = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
    write(&mpath, &(text + "\n"))?;
    Ok(OutputFiles {
        dir,
        summary,
        manifest: mpath,
        tables,
    })
}

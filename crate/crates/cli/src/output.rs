use std::fs;
use std::path::Path;

use fraclap_core::GridFunction;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::{Command, Failure};

/// A CSV file as a header plus rows of already formatted cells.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Everything a command produces; nothing touches the disk until it is complete.
#[derive(Debug, Default)]
pub struct RunResult {
    pub tables: Vec<Table>,
    pub grids: Vec<(String, GridFunction)>,
    pub metrics: serde_json::Map<String, Value>,
    pub violations: Vec<String>,
}

impl RunResult {
    pub fn metric(&mut self, key: &str, v: impl Into<Value>) {
        self.metrics.insert(key.into(), v.into());
    }
}

/// Shortest round-trip formatting, so equal values always print equally.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Coordinate header names `x1 .. xD` with a prefix.
pub fn coord_header<const D: usize>(prefix: &str) -> Vec<String> {
    (1..=D).map(|a| format!("{prefix}{a}")).collect()
}

fn io(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

pub fn write(out: &Path, command: Command, cfg: &RunConfig, result: RunResult, wall: f64) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    for t in &result.tables {
        let path = out.join(format!("{}.csv", t.name));
        let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
        w.write_record(&t.header).map_err(|e| io(&path, e))?;
        for row in &t.rows {
            w.write_record(row).map_err(|e| io(&path, e))?;
        }
        w.flush().map_err(|e| io(&path, e))?;
    }
    for (name, g) in &result.grids {
        let path = out.join(format!("{name}.grid"));
        g.save(&path).map_err(|e| io(&path, e))?;
    }
    let report = json!({
        "command": command.name(),
        "config": cfg,
        "versions": { "fraclap": env!("CARGO_PKG_VERSION") },
        "seed": cfg.seed,
        "threads": rayon::current_num_threads(),
        "wall_time_s": wall,
        "metrics": result.metrics,
        "violations": result.violations,
        "outputs": result.tables.iter().map(|t| format!("{}.csv", t.name))
            .chain(result.grids.iter().map(|(n, _)| format!("{n}.grid")))
            .collect::<Vec<_>>(),
    });
    let path = out.join("report.json");
    let text = serde_json::to_string_pretty(&report).map_err(|e| io(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| io(&path, e))
}

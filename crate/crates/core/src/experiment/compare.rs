//! Per-optimizer summaries of completed runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{OptimizerId, RunRecord, RunStatus, TaskKind};
use crate::analysis::{CiMethod, RunSummary};
use crate::error::{Error, Result};

/// One row of the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub optimizer: OptimizerId,
    pub task: TaskKind,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Finite runs summarized.
    pub n: usize,
    pub diverged: usize,
    /// Fewer than two finite runs: the interval is a point.
    pub degenerate: bool,
}

/// Every `record.json` at or below `root`, in path order.
pub fn find_records(root: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let record = dir.join("record.json");
        if record.is_file() {
            found.push(record);
            continue;
        }
        if dir.is_dir() {
            for entry in fs::read_dir(&dir)? {
                let path = entry?.path();
                if path.is_dir() {
                    stack.push(path);
                }
            }
        }
    }
    found.sort();
    Ok(found)
}

/// Group records by optimizer and summarize the final losses of the runs
/// that finished. All records must come from the same task.
pub fn compare_records(records: &[RunRecord], method: CiMethod) -> Result<Vec<ComparisonRow>> {
    let Some(first) = records.first() else {
        return Err(Error::InvalidParameter("no runs to compare".into()));
    };
    if let Some(other) = records.iter().find(|r| r.task != first.task) {
        return Err(Error::TaskMismatch(format!("{:?}", first.task), format!("{:?}", other.task)));
    }
    let mut groups: BTreeMap<String, (OptimizerId, Vec<f64>, usize)> = BTreeMap::new();
    for r in records {
        let entry = groups.entry(r.optimizer.to_string()).or_insert((r.optimizer, Vec::new(), 0));
        if r.status == RunStatus::Ok && r.final_loss.is_finite() {
            entry.1.push(r.final_loss);
        } else {
            entry.2 += 1;
        }
    }
    let rows = groups
        .into_values()
        .map(|(optimizer, finals, diverged)| {
            let (mean, ci_low, ci_high, degenerate) = if finals.is_empty() {
                (f64::INFINITY, f64::INFINITY, f64::INFINITY, true)
            } else {
                let s = RunSummary::from_values(&finals, method)?;
                (s.mean, s.ci_low, s.ci_high, s.degenerate)
            };
            Ok(ComparisonRow { optimizer, task: first.task, mean, ci_low, ci_high, n: finals.len(), diverged, degenerate })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows)
}

/// Load every run found under `dirs` and compare them.
pub fn compare(dirs: &[PathBuf], method: CiMethod) -> Result<Vec<ComparisonRow>> {
    let mut records = Vec::new();
    for dir in dirs {
        for path in find_records(dir)? {
            records.push(serde_json::from_str::<RunRecord>(&fs::read_to_string(path)?)?);
        }
    }
    compare_records(&records, method)
}

/// Write `optimizer,task,mean,ci_low,ci_high,n,diverged,degenerate`.
pub fn write_comparison_csv<W: std::io::Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

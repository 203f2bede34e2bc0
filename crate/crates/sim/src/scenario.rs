//! Scenario files and the metrics CSV.

use std::io::{self, Write};
use std::path::Path;

use anyhow::Context;
use luce_core::harness::{MetricsRow, ScenarioConfig};

pub fn load(path: &Path) -> anyhow::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn parse(text: &str) -> anyhow::Result<ScenarioConfig> {
    let cfg: ScenarioConfig = serde_json::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Header row plus one line per row, columns in `MetricsRow` field order.
pub fn write_metrics<W: Write>(rows: &[MetricsRow], w: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    for r in rows {
        w.serialize(r).map_err(io::Error::other)?;
    }
    w.flush()
}

pub fn metrics_csv(rows: &[MetricsRow]) -> Vec<u8> {
    let mut out = Vec::new();
    write_metrics(rows, &mut out).expect("in-memory write");
    out
}

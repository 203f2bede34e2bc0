//! Run artifacts written next to the metrics CSV.

use std::fs;
use std::path::Path;

use anyhow::Context;
use luce_core::harness::RunOutput;
use serde::Serialize;

pub const CHAIN_FILE: &str = "chain.jsonl";

fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

/// Chain, catalog, cache, complaints, maintenance log and (for the demo)
/// update confirmations of the last run.
pub fn write_artifacts(dir: &Path, out: &RunOutput) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let p = &out.last;
    let chain = dir.join(CHAIN_FILE);
    fs::write(&chain, crate::chain::to_jsonl(p.ledger().blocks()))
        .with_context(|| format!("writing {}", chain.display()))?;
    write_json(dir, "catalog.json", p.catalog())?;
    write_json(dir, "cache.json", p.catalog().cache())?;
    write_json(dir, "complaints.json", p.complaints())?;
    write_json(dir, "maintenance.json", p.maintenance_log())?;
    if let Some(demo) = &out.demo {
        write_json(dir, "updates.json", &demo.updates)?;
    }
    Ok(())
}

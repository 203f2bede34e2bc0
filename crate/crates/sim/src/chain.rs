//! Chain export: one JSON block per line.

use std::io::{self, BufRead, Write};

use luce_core::ledger::Block;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChainFileError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_jsonl<W: Write>(blocks: &[Block], mut w: W) -> io::Result<()> {
    for b in blocks {
        serde_json::to_writer(&mut w, b)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn to_jsonl(blocks: &[Block]) -> Vec<u8> {
    let mut out = Vec::new();
    write_jsonl(blocks, &mut out).expect("writing to a Vec cannot fail");
    out
}

/// Blank lines are skipped.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<Block>, ChainFileError> {
    let mut blocks = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let block = serde_json::from_str(&line).map_err(|source| ChainFileError::Parse { line: i + 1, source })?;
        blocks.push(block);
    }
    Ok(blocks)
}

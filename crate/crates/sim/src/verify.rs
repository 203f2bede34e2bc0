//! Offline checks on an exported chain.

use std::fmt;

use luce_core::catalog::CacheState;
use luce_core::contracts::replay;
use luce_core::ledger::{verify_blocks, Block};
use luce_core::protocol::{audit_outcome, audit_updates, ComplaintOutcome, UpdateAudit};
use luce_core::Address;

#[derive(Debug, Clone)]
pub struct GdprReport {
    pub contract: Address,
    /// None when no dataset contract exists at the address.
    pub audits: Option<Vec<UpdateAudit>>,
    pub outcome: Option<ComplaintOutcome>,
    pub violators: Vec<Address>,
}

impl GdprReport {
    /// Open is not a failure: deadlines are still running.
    pub fn passed(&self) -> bool {
        matches!(self.outcome, Some(ComplaintOutcome::Compliant | ComplaintOutcome::Open))
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub blocks: usize,
    pub transactions: usize,
    pub chain_ok: bool,
    /// Replay error, if re-execution disagrees with the recorded statuses.
    pub replay_error: Option<String>,
    pub cache_coherent: bool,
    pub gdpr: Option<GdprReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.chain_ok
            && self.replay_error.is_none()
            && self.cache_coherent
            && self.gdpr.as_ref().is_none_or(GdprReport::passed)
    }
}

/// Hash chain, replay of every transaction, event-derived cache against the
/// replayed state, and optionally the erasure/rectification audit of one
/// contract as of the last block.
pub fn verify(blocks: &[Block], gdpr: Option<Address>) -> VerifyReport {
    let chain_ok = verify_blocks(blocks);
    let head = blocks.last().map(|b| (b.index, b.mined_at)).unwrap_or_default();
    let (replay_error, cache_coherent, world) = match replay(blocks) {
        Ok(world) => {
            let coherent = CacheState::from_events(&world, head.0).incoherent(&world).is_empty();
            (None, coherent, Some(world))
        }
        Err(e) => (Some(e.to_string()), false, None),
    };
    let gdpr = gdpr.map(|contract| {
        let dataset = world.as_ref().and_then(|w| w.dataset(&contract));
        match dataset {
            Some(c) => {
                let audits = audit_updates(c.event_log(), c.token_period, head.1);
                let (outcome, violators) = audit_outcome(&audits, head.1);
                GdprReport { contract, audits: Some(audits), outcome: Some(outcome), violators }
            }
            None => GdprReport { contract, audits: None, outcome: None, violators: Vec::new() },
        }
    });
    VerifyReport {
        blocks: blocks.len(),
        transactions: blocks.iter().map(|b| b.txs.len()).sum(),
        chain_ok,
        replay_error,
        cache_coherent,
        gdpr,
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "blocks: {}, transactions: {}", self.blocks, self.transactions)?;
        writeln!(f, "hash chain: {}", ok(self.chain_ok))?;
        match &self.replay_error {
            None => writeln!(f, "replay: ok")?,
            Some(e) => writeln!(f, "replay: FAILED ({e})")?,
        }
        writeln!(f, "cache coherence: {}", ok(self.cache_coherent))?;
        if let Some(g) = &self.gdpr {
            match (&g.audits, g.outcome) {
                (Some(audits), Some(outcome)) => {
                    writeln!(f, "contract {}: {} update(s), outcome {:?}", g.contract, audits.len(), outcome)?;
                    for a in audits {
                        let resolved = a.recipients.values().filter(|s| s.is_resolved()).count();
                        writeln!(
                            f,
                            "  version {} ({:?}) requested {} deadline {}: {}/{} resolved",
                            a.version,
                            a.kind,
                            a.requested_at,
                            a.deadline,
                            resolved,
                            a.recipients.len()
                        )?;
                    }
                    for v in &g.violators {
                        writeln!(f, "  violator {v}")?;
                    }
                }
                _ => writeln!(f, "contract {}: not a dataset contract", g.contract)?,
            }
        }
        write!(f, "result: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use luce_core::harness::{run, Experiment, ScenarioConfig};

    fn demo_blocks() -> (Vec<Block>, Address) {
        let cfg = crate::scenario::parse(include_str!("../scenarios/demo.json")).unwrap();
        let out = run(&cfg).unwrap();
        let contract = out.last.catalog().entries().next().unwrap().contract;
        (out.last.ledger().blocks().to_vec(), contract)
    }

    #[test]
    fn demo_chain_passes_with_audit() {
        let (blocks, contract) = demo_blocks();
        let r = verify(&blocks, Some(contract));
        assert!(r.passed(), "{r}");
        let g = r.gdpr.unwrap();
        assert_eq!(g.outcome, Some(ComplaintOutcome::Compliant));
        assert!(!g.audits.unwrap().is_empty());
    }

    #[test]
    fn unknown_contract_fails() {
        let (blocks, _) = demo_blocks();
        let r = verify(&blocks, Some(Address([9; 20])));
        assert!(r.chain_ok && !r.passed());
    }

    #[test]
    fn tampered_chain_fails() {
        let cfg = ScenarioConfig { params: Some(vec![5]), replications: 1, ..ScenarioConfig::new(Experiment::SameDataset) };
        let mut blocks = run(&cfg).unwrap().last.ledger().blocks().to_vec();
        blocks[3].txs[0].nonce += 1;
        let r = verify(&blocks, None);
        assert!(!r.chain_ok && !r.passed());
    }

    #[test]
    fn empty_chain_fails() {
        assert!(!verify(&[], None).passed());
    }
}

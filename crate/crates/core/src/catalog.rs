//! Metadata repository (searchable dataset directory) and the state cache
//! rebuilt from contract events.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contracts::{EventKind, TokenState, World};
use crate::ledger::Ledger;
use crate::primitives::{Address, SimTime};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Descriptor {
    pub title: String,
    pub description: String,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub dataset_id: String,
    pub descriptor: Descriptor,
    pub license_type: String,
    pub contract: Address,
}

impl CatalogEntry {
    /// Conjunctive, case-insensitive substring match over title, description
    /// and keywords. An empty query matches everything.
    pub fn matches(&self, query: &str) -> bool {
        let haystacks: Vec<String> = core::iter::once(&self.descriptor.title)
            .chain(core::iter::once(&self.descriptor.description))
            .chain(self.descriptor.keywords.iter())
            .map(|s| s.to_lowercase())
            .collect();
        query
            .split_whitespace()
            .map(str::to_lowercase)
            .all(|term| haystacks.iter().any(|h| h.contains(&term)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("dataset id `{0}` already published")]
    DuplicateId(String),
    #[error("no dataset contract at {0}")]
    UnknownContract(Address),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    entries: BTreeMap<String, CatalogEntry>,
    #[serde(skip)]
    cache: CacheState,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn publish_entry(&mut self, entry: CatalogEntry, world: &World) -> Result<(), CatalogError> {
        if self.entries.contains_key(&entry.dataset_id) {
            return Err(CatalogError::DuplicateId(entry.dataset_id));
        }
        if world.dataset(&entry.contract).is_none() {
            return Err(CatalogError::UnknownContract(entry.contract));
        }
        self.entries.insert(entry.dataset_id.clone(), entry);
        Ok(())
    }

    /// Entries matching every query term, ordered by dataset id.
    pub fn search(&self, query: &str) -> Vec<&CatalogEntry> {
        self.entries.values().filter(|e| e.matches(query)).collect()
    }

    pub fn get(&self, dataset_id: &str) -> Option<&CatalogEntry> {
        self.entries.get(dataset_id)
    }

    pub fn by_contract(&self, contract: &Address) -> Option<&CatalogEntry> {
        self.entries.values().find(|e| e.contract == *contract)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Rebuilds the cache from contract events up to the chain head.
    pub fn sync(&mut self, ledger: &Ledger<World>) -> &CacheState {
        self.cache = CacheState::from_events(ledger.machine(), ledger.head().index);
        &self.cache
    }

    pub fn cache(&self) -> &CacheState {
        &self.cache
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSnapshot {
    pub token_id: u64,
    /// Stored state; expiry is evaluated lazily from `expires_at`.
    pub state: TokenState,
    pub expires_at: SimTime,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractSnapshot {
    pub version: u64,
    pub requester_count: usize,
    pub tokens: BTreeMap<Address, TokenSnapshot>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheState {
    pub contracts: BTreeMap<Address, ContractSnapshot>,
    pub last_synced_block: u64,
}

impl CacheState {
    /// Derived from event logs only.
    pub fn from_events(world: &World, head: u64) -> Self {
        let mut contracts = BTreeMap::new();
        for c in world.datasets() {
            let mut snap = ContractSnapshot { version: 1, ..Default::default() };
            for e in c.event_log() {
                let num = |k: &str| e.get(k).and_then(|v| v.parse::<u64>().ok());
                match e.kind {
                    EventKind::Published => {
                        if let Some(v) = num("version") {
                            snap.version = v;
                        }
                    }
                    EventKind::UpdateRequested => {
                        if let Some(v) = num("newVersion") {
                            snap.version = v;
                        }
                    }
                    EventKind::RequesterAdded => {
                        snap.tokens.insert(
                            e.actor,
                            TokenSnapshot {
                                token_id: num("tokenId").unwrap_or(0),
                                state: TokenState::Active,
                                expires_at: SimTime(num("expiresAt").unwrap_or(0)),
                            },
                        );
                    }
                    EventKind::TokenRenewed => {
                        if let Some(t) = snap.tokens.get_mut(&e.actor) {
                            t.expires_at = SimTime(num("expiresAt").unwrap_or(0));
                        }
                    }
                    EventKind::TokenRevoked => {
                        if let Some(t) = snap.tokens.get_mut(&e.actor) {
                            t.state = TokenState::Revoked;
                        }
                    }
                    EventKind::Unsubscribed => {
                        if let Some(t) = snap.tokens.get_mut(&e.actor) {
                            t.state = TokenState::Deleted;
                        }
                    }
                    EventKind::LicenseSet | EventKind::LinkServed | EventKind::UpdateConfirmed => {}
                }
            }
            snap.requester_count = snap.tokens.len();
            contracts.insert(c.address, snap);
        }
        CacheState { contracts, last_synced_block: head }
    }

    /// Read straight from contract state, for coherence checks.
    pub fn direct(world: &World, head: u64) -> Self {
        let contracts = world
            .datasets()
            .map(|c| {
                let tokens = c
                    .requesters
                    .iter()
                    .map(|(a, e)| {
                        (
                            *a,
                            TokenSnapshot {
                                token_id: e.token.token_id,
                                state: e.token.state,
                                expires_at: e.token.expires_at,
                            },
                        )
                    })
                    .collect();
                (
                    c.address,
                    ContractSnapshot { version: c.version, requester_count: c.requesters.len(), tokens },
                )
            })
            .collect();
        CacheState { contracts, last_synced_block: head }
    }

    /// Contracts whose cached snapshot differs from a direct read.
    pub fn incoherent(&self, world: &World) -> Vec<Address> {
        let direct = CacheState::direct(world, self.last_synced_block);
        let mut out: Vec<Address> = direct
            .contracts
            .iter()
            .filter(|(a, snap)| self.contracts.get(*a) != Some(*snap))
            .map(|(a, _)| *a)
            .collect();
        out.extend(self.contracts.keys().filter(|a| !direct.contracts.contains_key(*a)));
        out
    }
}

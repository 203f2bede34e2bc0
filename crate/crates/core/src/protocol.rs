//! Actor workflows on top of the ledger: sharing a dataset, acquiring and
//! maintaining access, and the data-subject rights flow with its audit.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{CacheState, Catalog, CatalogEntry, CatalogError, Descriptor};
use crate::contracts::{
    AccessToken, Call, ContractError, ContractEvent, EventFilter, EventKind, License, Output, Role,
    TokenState, UpdateKind, World, DEFAULT_TOKEN_PERIOD,
};
use crate::costmodel::{action, GasSchedule};
use crate::datastore::{apply_erase, apply_rectify, DataStore, DatastoreError, Fields, RecordSet};
use crate::encoding::split_list;
use crate::ledger::{Ledger, LedgerError, MiningConfig, TxStatus};
use crate::primitives::{Address, Digest, SimTime};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Datastore(#[from] DatastoreError),
    #[error("unknown data subject")]
    UnknownSubject,
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("{0} has no requester agent")]
    UnknownRequester(Address),
    #[error("{0} holds no subscription to this dataset")]
    NotSubscribed(Address),
    #[error("invalid protocol configuration: {0}")]
    InvalidConfig(&'static str),
}

type Result<T> = core::result::Result<T, ProtocolError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub token_period: SimTime,
    /// How long before expiry a requester asks for renewal.
    pub renew_lead: SimTime,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig { token_period: DEFAULT_TOKEN_PERIOD, renew_lead: SimTime::from_hours(1) }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.token_period <= self.renew_lead {
            return Err(ProtocolError::InvalidConfig("token period must exceed the renewal lead time"));
        }
        Ok(())
    }
}

/// Misbehaviour switches for simulated requesters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Behavior {
    /// Never confirms updates, so the next renewal revokes the token.
    pub ignore_updates: bool,
    /// Never renews, so the token lapses at expiry.
    pub never_renew: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subscription {
    pub dataset_id: String,
    pub token: AccessToken,
    pub link: String,
    /// The requester's local copy of the dataset.
    pub local: RecordSet,
    pub local_version: u64,
    pub pending_version: Option<u64>,
    pub next_renewal: Option<SimTime>,
    /// Set once the subscription can no longer be maintained.
    pub terminal: Option<TokenState>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RequesterAgent {
    pub behavior: Behavior,
    pub subscriptions: BTreeMap<Address, Subscription>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaintenanceOutcome {
    Confirmed { version: u64 },
    Renewed { expires_at: SimTime },
    Revoked,
    Expired,
    Rejected { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaintenanceEntry {
    pub at: SimTime,
    pub requester: Address,
    pub contract: Address,
    pub outcome: MaintenanceOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct SharedDataset {
    contract: Address,
    link: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct ProviderState {
    datasets: BTreeMap<String, SharedDataset>,
    /// (subject identity, dataset id) -> anonymized id. Never leaves the provider.
    subjects: BTreeMap<(String, String), String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequesterUse {
    pub requester: Address,
    pub purpose: String,
    pub token_state: TokenState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub dataset_id: String,
    pub contract: Address,
    pub requesters: Vec<RequesterUse>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectReport {
    pub subject_identity: String,
    pub entries: Vec<ReportEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RecipientStatus {
    Confirmed,
    Revoked,
    Unsubscribed,
    /// The token expired before the deadline without being renewed.
    Lapsed,
    Outstanding,
}

impl RecipientStatus {
    pub fn is_resolved(self) -> bool {
        self != RecipientStatus::Outstanding
    }
}

/// Propagation state of one update request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateAudit {
    pub version: u64,
    pub kind: UpdateKind,
    pub requested_at: SimTime,
    pub deadline: SimTime,
    pub recipients: BTreeMap<Address, RecipientStatus>,
}

impl UpdateAudit {
    pub fn resolved(&self) -> bool {
        self.recipients.values().all(|s| s.is_resolved())
    }

    /// Recipients still unresolved once the deadline has passed.
    pub fn violators(&self, now: SimTime) -> Vec<Address> {
        if now <= self.deadline {
            return Vec::new();
        }
        self.recipients
            .iter()
            .filter(|(_, s)| **s == RecipientStatus::Outstanding)
            .map(|(a, _)| *a)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComplaintOutcome {
    Open,
    Compliant,
    NonCompliant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Complaint {
    pub complaint_id: u64,
    pub subject_identity: String,
    pub dataset_id: String,
    pub filed_at: SimTime,
    pub outcome: ComplaintOutcome,
    pub violators: Vec<Address>,
}

/// What a provider reports back to a subject after an erase or rectify.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateConfirmation {
    pub contract: Address,
    pub new_hash: Digest,
    pub audit: UpdateAudit,
    pub completed_at: SimTime,
}

fn parse_u64(e: &ContractEvent, key: &str) -> Option<u64> {
    e.get(key).and_then(|v| v.parse().ok())
}

fn recipient_status(
    events: &[ContractEvent],
    who: &Address,
    version: u64,
    t: SimTime,
    deadline: SimTime,
    now: SimTime,
) -> RecipientStatus {
    let in_window = |e: &&ContractEvent| e.actor == *who && e.at >= t && e.at <= deadline && e.at <= now;
    let mut window = events.iter().filter(in_window);
    let holds_version = |e: &ContractEvent| {
        matches!(e.kind, EventKind::UpdateConfirmed | EventKind::RequesterAdded)
            && parse_u64(e, "version").is_some_and(|v| v >= version)
    };
    if window.clone().any(holds_version) {
        return RecipientStatus::Confirmed;
    }
    if window.clone().any(|e| e.kind == EventKind::TokenRevoked) {
        return RecipientStatus::Revoked;
    }
    if window.any(|e| e.kind == EventKind::Unsubscribed) {
        return RecipientStatus::Unsubscribed;
    }
    let horizon = now.min(deadline);
    let expiry = events
        .iter()
        .filter(|e| e.actor == *who && e.at <= horizon)
        .filter(|e| matches!(e.kind, EventKind::RequesterAdded | EventKind::TokenRenewed))
        .filter_map(|e| parse_u64(e, "expiresAt"))
        .next_back();
    match expiry {
        Some(x) if SimTime(x) < horizon => RecipientStatus::Lapsed,
        _ => RecipientStatus::Outstanding,
    }
}

/// Audits every update request in a contract's event log.
///
/// A recipient is resolved once, within `period` of the request, it confirmed
/// the new version (or subscribed afresh to it), had its token revoked,
/// unsubscribed, or let its token lapse without renewal.
pub fn audit_updates(events: &[ContractEvent], period: SimTime, now: SimTime) -> Vec<UpdateAudit> {
    events
        .iter()
        .filter(|e| e.kind == EventKind::UpdateRequested)
        .map(|u| {
            let version = parse_u64(u, "newVersion").unwrap_or(0);
            let kind = u.get("kind").and_then(|k| k.parse().ok()).unwrap_or(UpdateKind::Erase);
            let deadline = u.at + period;
            let recipients = split_list(u.get("recipients").unwrap_or(""))
                .unwrap_or_default()
                .iter()
                .filter_map(|a| a.parse::<Address>().ok())
                .map(|r| (r, recipient_status(events, &r, version, u.at, deadline, now)))
                .collect();
            UpdateAudit { version, kind, requested_at: u.at, deadline, recipients }
        })
        .collect()
}

/// Overall verdict: non-compliant if anyone missed a deadline, open while
/// some deadline is still running, compliant otherwise.
pub fn audit_outcome(audits: &[UpdateAudit], now: SimTime) -> (ComplaintOutcome, Vec<Address>) {
    let violators: BTreeSet<Address> = audits.iter().flat_map(|a| a.violators(now)).collect();
    if !violators.is_empty() {
        return (ComplaintOutcome::NonCompliant, violators.into_iter().collect());
    }
    if audits.iter().all(UpdateAudit::resolved) {
        (ComplaintOutcome::Compliant, Vec::new())
    } else {
        (ComplaintOutcome::Open, Vec::new())
    }
}

/// Requester list of one contract rebuilt from its events alone.
pub fn requesters_from_events(events: &[ContractEvent], now: SimTime) -> Vec<RequesterUse> {
    let mut tokens: BTreeMap<Address, (String, AccessToken)> = BTreeMap::new();
    for e in events {
        match e.kind {
            EventKind::RequesterAdded => {
                let token = AccessToken {
                    token_id: parse_u64(e, "tokenId").unwrap_or(0),
                    owner: e.actor,
                    contract: Address::ZERO,
                    issued_at: e.at,
                    expires_at: SimTime(parse_u64(e, "expiresAt").unwrap_or(0)),
                    state: TokenState::Active,
                };
                tokens.insert(e.actor, (e.get("purpose").unwrap_or("").to_string(), token));
            }
            EventKind::TokenRenewed => {
                if let Some((_, t)) = tokens.get_mut(&e.actor) {
                    t.expires_at = SimTime(parse_u64(e, "expiresAt").unwrap_or(0));
                }
            }
            EventKind::TokenRevoked => {
                if let Some((_, t)) = tokens.get_mut(&e.actor) {
                    t.state = TokenState::Revoked;
                }
            }
            EventKind::Unsubscribed => {
                if let Some((_, t)) = tokens.get_mut(&e.actor) {
                    t.state = TokenState::Deleted;
                }
            }
            _ => {}
        }
    }
    tokens
        .into_iter()
        .map(|(requester, (purpose, t))| RequesterUse { requester, purpose, token_state: t.state_at(now) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Task {
    Confirm,
    Renew,
}

/// The whole platform: ledger with contracts, catalog, provider storage and
/// the simulated actors.
#[derive(Clone)]
pub struct Platform {
    ledger: Ledger<World>,
    catalog: Catalog,
    store: DataStore,
    config: ProtocolConfig,
    providers: BTreeMap<Address, ProviderState>,
    agents: BTreeMap<Address, RequesterAgent>,
    queue: BTreeSet<(SimTime, Task, Address, Address)>,
    observed_height: usize,
    log: Vec<MaintenanceEntry>,
    complaints: Vec<Complaint>,
}

impl Platform {
    pub fn new(mining: MiningConfig, schedule: GasSchedule, config: ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let ledger = Ledger::new(mining, schedule, World::new())?;
        let observed_height = ledger.blocks().len();
        Ok(Platform {
            ledger,
            catalog: Catalog::new(),
            store: DataStore::new(),
            config,
            providers: BTreeMap::new(),
            agents: BTreeMap::new(),
            queue: BTreeSet::new(),
            observed_height,
            log: Vec::new(),
            complaints: Vec::new(),
        })
    }

    pub fn ledger(&self) -> &Ledger<World> {
        &self.ledger
    }

    /// Bypasses the protocol. For constructing test scenarios.
    pub fn ledger_mut(&mut self) -> &mut Ledger<World> {
        &mut self.ledger
    }

    pub fn world(&self) -> &World {
        self.ledger.machine()
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn store(&self) -> &DataStore {
        &self.store
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn now(&self) -> SimTime {
        self.ledger.now()
    }

    pub fn agent(&self, requester: &Address) -> Option<&RequesterAgent> {
        self.agents.get(requester)
    }

    pub fn maintenance_log(&self) -> &[MaintenanceEntry] {
        &self.log
    }

    pub fn complaints(&self) -> &[Complaint] {
        &self.complaints
    }

    pub fn sync_cache(&mut self) -> &CacheState {
        self.catalog.sync(&self.ledger)
    }

    pub fn set_behavior(&mut self, requester: &Address, behavior: Behavior) -> Result<()> {
        self.agents
            .get_mut(requester)
            .ok_or(ProtocolError::UnknownRequester(*requester))?
            .behavior = behavior;
        Ok(())
    }

    /// Submits one call and mines it.
    pub fn transact(&mut self, sender: Address, target: Address, call: Call) -> Result<Output> {
        let mut out = self.transact_batch(vec![(sender, target, call)])?;
        Ok(out.pop().expect("one result per call")?)
    }

    /// Submits calls in order, then mines until all are included.
    pub fn transact_batch(
        &mut self,
        calls: Vec<(Address, Address, Call)>,
    ) -> Result<Vec<core::result::Result<Output, ContractError>>> {
        let mut ids = Vec::with_capacity(calls.len());
        let mut failure = None;
        for (sender, target, call) in &calls {
            match self.ledger.submit_call(*sender, *target, call) {
                Ok(r) => ids.push(r.tx_id),
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        self.mine();
        if let Some(e) = failure {
            return Err(e.into());
        }
        Ok(ids
            .iter()
            .map(|id| self.ledger.outcome(id).cloned().expect("mined transactions have outcomes"))
            .collect())
    }

    fn mine(&mut self) {
        self.ledger.mine_all();
        self.observe_updates();
    }

    /// Notifies requester agents of update requests mined since the last look.
    fn observe_updates(&mut self) {
        let blocks = self.ledger.blocks();
        let world = self.ledger.machine();
        let mut notes = Vec::new();
        for b in &blocks[self.observed_height..] {
            for tx in b.txs.iter().filter(|t| t.status == TxStatus::Mined && t.action == action::UPDATE_DATA) {
                let Some(c) = world.dataset(&tx.target) else { continue };
                let Some(ev) = c
                    .event_log()
                    .iter()
                    .rev()
                    .find(|e| e.tx_ref == tx.tx_id && e.kind == EventKind::UpdateRequested)
                else {
                    continue;
                };
                let version = parse_u64(ev, "newVersion").unwrap_or(0);
                for r in split_list(ev.get("recipients").unwrap_or("")).unwrap_or_default() {
                    if let Ok(addr) = r.parse::<Address>() {
                        notes.push((ev.at, addr, tx.target, version));
                    }
                }
            }
        }
        self.observed_height = blocks.len();
        for (at, requester, contract, version) in notes {
            let Some(agent) = self.agents.get_mut(&requester) else { continue };
            if agent.behavior.ignore_updates {
                continue;
            }
            if let Some(sub) = agent.subscriptions.get_mut(&contract) {
                if sub.terminal.is_none() {
                    sub.pending_version = Some(sub.pending_version.map_or(version, |p| p.max(version)));
                    self.queue.insert((at, Task::Confirm, requester, contract));
                }
            }
        }
    }

    /// Registers one new account.
    pub fn register(&mut self, role: Role, identity: &str) -> Result<Address> {
        Ok(self.register_many(&[(role, identity.to_string())])?.remove(0))
    }

    /// Registers new accounts, all in one block.
    pub fn register_many(&mut self, users: &[(Role, String)]) -> Result<Vec<Address>> {
        let registry = self.world().registry_address();
        let addrs: Vec<Address> = users.iter().map(|_| self.ledger.create_account()).collect();
        let calls = users
            .iter()
            .zip(&addrs)
            .map(|((role, identity), a)| (*a, registry, Call::Register { role: *role, identity: identity.clone() }))
            .collect();
        for r in self.transact_batch(calls)? {
            r?;
        }
        for ((role, _), a) in users.iter().zip(&addrs) {
            match role {
                Role::DataRequester => {
                    self.agents.insert(*a, RequesterAgent::default());
                }
                Role::DataProvider => {
                    self.providers.insert(*a, ProviderState::default());
                }
                _ => {}
            }
        }
        Ok(addrs)
    }

    /// Deploys a contract for `records`, stores them, publishes hash and
    /// license on-ledger and lists the dataset in the catalog. On failure no
    /// catalog entry is made and stored data is discarded.
    pub fn share_dataset(
        &mut self,
        provider: Address,
        dataset_id: &str,
        records: RecordSet,
        descriptor: Descriptor,
        license: License,
    ) -> Result<(Address, String)> {
        self.process_due()?;
        if self.catalog.get(dataset_id).is_some() {
            return Err(CatalogError::DuplicateId(dataset_id.to_string()).into());
        }
        let token_period = self.config.token_period;
        let contract = match self.transact(provider, Address::ZERO, Call::Deploy { token_period })? {
            Output::Deployed(a) => a,
            other => unreachable!("deploy returned {other:?}"),
        };
        let (link, hash) = self.store.store(provider, contract, records, false)?;
        let publish = Call::PublishData { descriptor: descriptor.title.clone(), link: link.clone(), hash };
        let license_type = license.license_type.clone();
        let outcome = self
            .transact_batch(vec![(provider, contract, publish), (provider, contract, Call::SetLicense(license))])
            .and_then(|rs| rs.into_iter().try_for_each(|r| r.map(|_| ())).map_err(Into::into))
            .and_then(|()| {
                let entry = CatalogEntry { dataset_id: dataset_id.to_string(), descriptor, license_type, contract };
                self.catalog.publish_entry(entry, self.ledger.machine()).map_err(Into::into)
            });
        if let Err(e) = outcome {
            self.store.remove(&link);
            return Err(e);
        }
        self.providers
            .entry(provider)
            .or_default()
            .datasets
            .insert(dataset_id.to_string(), SharedDataset { contract, link });
        Ok((contract, dataset_id.to_string()))
    }

    /// Records, on the provider side only, which anonymized id a subject has in a dataset.
    pub fn map_subject(&mut self, provider: &Address, subject_identity: &str, dataset_id: &str, anon_id: &str) {
        self.providers
            .entry(*provider)
            .or_default()
            .subjects
            .insert((subject_identity.to_string(), dataset_id.to_string()), anon_id.to_string());
    }

    /// License check, subscription, link retrieval and download.
    pub fn acquire(&mut self, requester: Address, dataset_id: &str, purpose: &str) -> Result<(AccessToken, RecordSet)> {
        self.process_due()?;
        let contract = self
            .catalog
            .get(dataset_id)
            .ok_or_else(|| ProtocolError::UnknownDataset(dataset_id.to_string()))?
            .contract;
        let license = match self.transact(requester, contract, Call::GetLicense)? {
            Output::License(l) => l,
            other => unreachable!("getLicense returned {other:?}"),
        };
        if !license.permits(purpose) {
            return Err(ContractError::PurposeIncompatible.into());
        }
        let subscribe = Call::AddDataRequester { purpose: purpose.to_string(), license_accepted: true };
        let mut results = self
            .transact_batch(vec![(requester, contract, subscribe), (requester, contract, Call::GetLink)])?
            .into_iter();
        let token = match results.next().expect("two results")? {
            Output::Token(t) => t,
            other => unreachable!("addDataRequester returned {other:?}"),
        };
        let link = match results.next().expect("two results")? {
            Output::Link(l) => l,
            other => unreachable!("getLink returned {other:?}"),
        };
        let now = self.ledger.now();
        let c = self.world().dataset(&contract).expect("catalogued contract exists");
        let version = c.version;
        let records = self.store.fetch(&link, &requester, &token, c, now)?;
        self.subscribe_agent(requester, contract, dataset_id, token, link, records.clone(), version);
        Ok((token, records))
    }

    #[allow(clippy::too_many_arguments)]
    fn subscribe_agent(
        &mut self,
        requester: Address,
        contract: Address,
        dataset_id: &str,
        token: AccessToken,
        link: String,
        local: RecordSet,
        local_version: u64,
    ) {
        let now = self.ledger.now();
        let lead = self.config.renew_lead;
        let agent = self.agents.entry(requester).or_default();
        let next_renewal = (!agent.behavior.never_renew).then(|| token.expires_at.saturating_sub(lead).max(now));
        agent.subscriptions.insert(
            contract,
            Subscription {
                dataset_id: dataset_id.to_string(),
                token,
                link,
                local,
                local_version,
                pending_version: None,
                next_renewal,
                terminal: None,
            },
        );
        if let Some(at) = next_renewal {
            self.queue.insert((at, Task::Renew, requester, contract));
        }
    }

    /// Submits every request's getLicense, addDataRequester and getLink
    /// without waiting for any of them to be mined, then mines and downloads.
    /// The license check is left to the contract.
    pub fn acquire_unconfirmed(
        &mut self,
        requests: &[(Address, String, String)],
    ) -> Result<Vec<Result<(AccessToken, RecordSet)>>> {
        self.process_due()?;
        let mut calls = Vec::with_capacity(requests.len() * 3);
        let mut contracts = Vec::with_capacity(requests.len());
        for (requester, dataset_id, purpose) in requests {
            let contract = self
                .catalog
                .get(dataset_id)
                .ok_or_else(|| ProtocolError::UnknownDataset(dataset_id.clone()))?
                .contract;
            contracts.push(contract);
            let subscribe = Call::AddDataRequester { purpose: purpose.clone(), license_accepted: true };
            calls.push((*requester, contract, Call::GetLicense));
            calls.push((*requester, contract, subscribe));
            calls.push((*requester, contract, Call::GetLink));
        }
        let results = self.transact_batch(calls)?;
        let now = self.ledger.now();
        let mut out = Vec::with_capacity(requests.len());
        for (((requester, dataset_id, _), contract), r) in requests.iter().zip(contracts).zip(results.chunks(3)) {
            let attempt = (|| {
                r[0].clone()?;
                let Output::Token(token) = r[1].clone()? else { unreachable!() };
                let Output::Link(link) = r[2].clone()? else { unreachable!() };
                let c = self.ledger.machine().dataset(&contract).expect("catalogued contract exists");
                let records = self.store.fetch(&link, requester, &token, c, now)?;
                Ok::<_, ProtocolError>((token, link, records, c.version))
            })();
            out.push(attempt.map(|(token, link, records, version)| {
                self.subscribe_agent(*requester, contract, dataset_id, token, link, records.clone(), version);
                (token, records)
            }));
        }
        Ok(out)
    }

    /// Downloads a dataset with the requester's current token.
    pub fn fetch_as(&self, requester: &Address, dataset_id: &str) -> Result<RecordSet> {
        let contract = self
            .catalog
            .get(dataset_id)
            .ok_or_else(|| ProtocolError::UnknownDataset(dataset_id.to_string()))?
            .contract;
        let sub = self
            .agents
            .get(requester)
            .and_then(|a| a.subscriptions.get(&contract))
            .ok_or(ProtocolError::NotSubscribed(*requester))?;
        let c = self.world().dataset(&contract).expect("catalogued contract exists");
        Ok(self.store.fetch(&sub.link, requester, &sub.token, c, self.ledger.now())?)
    }

    /// Runs every agent task due at or before the current time.
    pub fn process_due(&mut self) -> Result<()> {
        while self.step(self.ledger.now())? {}
        Ok(())
    }

    /// Runs agent tasks in time order up to `until`, then sets the clock there.
    /// Returns the log entries produced.
    pub fn run_until(&mut self, until: SimTime) -> Result<Vec<MaintenanceEntry>> {
        let start = self.log.len();
        while self.step(until)? {}
        self.ledger.advance_to(until);
        Ok(self.log[start..].to_vec())
    }

    /// Keeps all agents running until `until`; returns `requester`'s entries.
    pub fn maintain(&mut self, requester: &Address, until: SimTime) -> Result<Vec<MaintenanceEntry>> {
        if !self.agents.contains_key(requester) {
            return Err(ProtocolError::UnknownRequester(*requester));
        }
        let mut entries = self.run_until(until)?;
        entries.retain(|e| e.requester == *requester);
        Ok(entries)
    }

    /// Executes the earliest batch of due tasks, if it is due by `limit`.
    fn step(&mut self, limit: SimTime) -> Result<bool> {
        let Some(&(due, ..)) = self.queue.first() else { return Ok(false) };
        if due > limit {
            return Ok(false);
        }
        self.ledger.advance_to(due);
        let now = self.ledger.now();

        let mut batch = Vec::new();
        while let Some(&(at, task, requester, contract)) = self.queue.first() {
            if at > now {
                break;
            }
            self.queue.pop_first();
            let Some(sub) = self.agents.get(&requester).and_then(|a| a.subscriptions.get(&contract)) else {
                continue;
            };
            if sub.terminal.is_some() {
                continue;
            }
            let call = match task {
                Task::Confirm => match sub.pending_version {
                    Some(version) => Call::ConfirmUpdate { version },
                    None => continue,
                },
                Task::Renew if sub.next_renewal == Some(at) => Call::RenewToken,
                Task::Renew => continue,
            };
            batch.push((task, requester, contract, call));
        }
        if batch.is_empty() {
            return Ok(true);
        }
        let calls = batch.iter().map(|(_, r, c, call)| (*r, *c, call.clone())).collect();
        let results = self.transact_batch(calls)?;
        let at = self.ledger.now();
        for ((task, requester, contract, call), result) in batch.into_iter().zip(results) {
            let outcome = match task {
                Task::Confirm => {
                    let Call::ConfirmUpdate { version } = call else { unreachable!() };
                    self.after_confirm(requester, contract, version, result)
                }
                Task::Renew => self.after_renew(requester, contract, result),
            };
            self.log.push(MaintenanceEntry { at, requester, contract, outcome });
        }
        Ok(true)
    }

    fn after_confirm(
        &mut self,
        requester: Address,
        contract: Address,
        version: u64,
        result: core::result::Result<Output, ContractError>,
    ) -> MaintenanceOutcome {
        let now = self.ledger.now();
        let world = self.ledger.machine();
        let sub = self
            .agents
            .get_mut(&requester)
            .and_then(|a| a.subscriptions.get_mut(&contract))
            .expect("task belongs to a subscription");
        if sub.pending_version.is_some_and(|p| p <= version) {
            sub.pending_version = None;
        }
        match result {
            Ok(_) => {
                // Replace the local copy with the updated dataset.
                let c = world.dataset(&contract).expect("contract exists");
                if let Ok(records) = self.store.fetch(&sub.link, &requester, &sub.token, c, now) {
                    sub.local = records;
                    sub.local_version = version;
                }
                MaintenanceOutcome::Confirmed { version }
            }
            Err(e) => MaintenanceOutcome::Rejected { reason: e.to_string() },
        }
    }

    fn after_renew(
        &mut self,
        requester: Address,
        contract: Address,
        result: core::result::Result<Output, ContractError>,
    ) -> MaintenanceOutcome {
        let now = self.ledger.now();
        let lead = self.config.renew_lead;
        let sub = self
            .agents
            .get_mut(&requester)
            .and_then(|a| a.subscriptions.get_mut(&contract))
            .expect("task belongs to a subscription");
        sub.next_renewal = None;
        match result {
            Ok(Output::Renewal { token, renewed: true }) => {
                sub.token = token;
                let next = token.expires_at.saturating_sub(lead).max(now);
                sub.next_renewal = Some(next);
                self.queue.insert((next, Task::Renew, requester, contract));
                MaintenanceOutcome::Renewed { expires_at: token.expires_at }
            }
            Ok(Output::Renewal { token, renewed: false }) | Ok(Output::Token(token)) => {
                sub.token = token;
                sub.terminal = Some(TokenState::Revoked);
                MaintenanceOutcome::Revoked
            }
            Ok(other) => unreachable!("renewToken returned {other:?}"),
            Err(ContractError::TokenRevoked) => {
                sub.terminal = Some(TokenState::Revoked);
                MaintenanceOutcome::Revoked
            }
            Err(ContractError::TokenExpired) => {
                sub.terminal = Some(TokenState::Expired);
                MaintenanceOutcome::Expired
            }
            Err(e) => {
                sub.terminal = Some(TokenState::Deleted);
                MaintenanceOutcome::Rejected { reason: e.to_string() }
            }
        }
    }

    fn subject_identity(&self, subject: &Address) -> Result<String> {
        match self.world().registry().get(subject) {
            Some(r) if r.role == Role::DataSubject => Ok(r.identity.clone()),
            _ => Err(ProtocolError::UnknownSubject),
        }
    }

    /// Which of the subject's datasets are used, by whom and for what.
    pub fn subject_report(&self, subject: &Address, providers: &[Address]) -> Result<SubjectReport> {
        let identity = self.subject_identity(subject)?;
        let now = self.ledger.now();
        let mut entries = Vec::new();
        for p in providers {
            let Some(state) = self.providers.get(p) else { continue };
            for (ident, dataset_id) in state.subjects.keys() {
                if *ident != identity {
                    continue;
                }
                let Some(shared) = state.datasets.get(dataset_id) else { continue };
                let Some(c) = self.world().dataset(&shared.contract) else { continue };
                let requesters = c
                    .requesters
                    .iter()
                    .map(|(a, e)| RequesterUse {
                        requester: *a,
                        purpose: e.purpose.clone(),
                        token_state: e.token.state_at(now),
                    })
                    .collect();
                entries.push(ReportEntry { dataset_id: dataset_id.clone(), contract: shared.contract, requesters });
            }
        }
        entries.sort_by(|a, b| a.dataset_id.cmp(&b.dataset_id));
        Ok(SubjectReport { subject_identity: identity, entries })
    }

    /// Erases the subject's record and waits for requesters to follow.
    pub fn request_erasure(
        &mut self,
        subject: &Address,
        provider: &Address,
        dataset_id: &str,
    ) -> Result<UpdateConfirmation> {
        let (identity, anon_id, shared) = self.locate_subject(subject, provider, dataset_id)?;
        let current = self.store.records(&shared.link).ok_or(ProtocolError::UnknownSubject)?;
        let (next, hash) = apply_erase(current, &anon_id).map_err(|_| ProtocolError::UnknownSubject)?;
        let confirmation = self.propagate(provider, &shared, UpdateKind::Erase, &anon_id, next, hash)?;
        if let Some(state) = self.providers.get_mut(provider) {
            state.subjects.remove(&(identity, dataset_id.to_string()));
        }
        Ok(confirmation)
    }

    /// Rectifies the subject's record and waits for requesters to follow.
    pub fn request_rectification(
        &mut self,
        subject: &Address,
        provider: &Address,
        dataset_id: &str,
        new_fields: &Fields,
    ) -> Result<UpdateConfirmation> {
        let (_, anon_id, shared) = self.locate_subject(subject, provider, dataset_id)?;
        let current = self.store.records(&shared.link).ok_or(ProtocolError::UnknownSubject)?;
        let (next, hash) =
            apply_rectify(current, &anon_id, new_fields).map_err(|_| ProtocolError::UnknownSubject)?;
        self.propagate(provider, &shared, UpdateKind::Rectify, &anon_id, next, hash)
    }

    fn locate_subject(
        &mut self,
        subject: &Address,
        provider: &Address,
        dataset_id: &str,
    ) -> Result<(String, String, SharedDataset)> {
        self.process_due()?;
        let identity = self.subject_identity(subject)?;
        let state = self
            .providers
            .get(provider)
            .ok_or_else(|| ProtocolError::UnknownDataset(dataset_id.to_string()))?;
        let shared = state
            .datasets
            .get(dataset_id)
            .cloned()
            .ok_or_else(|| ProtocolError::UnknownDataset(dataset_id.to_string()))?;
        let anon_id = state
            .subjects
            .get(&(identity.clone(), dataset_id.to_string()))
            .cloned()
            .ok_or(ProtocolError::UnknownSubject)?;
        Ok((identity, anon_id, shared))
    }

    fn propagate(
        &mut self,
        provider: &Address,
        shared: &SharedDataset,
        kind: UpdateKind,
        anon_id: &str,
        next: RecordSet,
        new_hash: Digest,
    ) -> Result<UpdateConfirmation> {
        let call = Call::UpdateData { new_hash, kind, anon_ids: vec![anon_id.to_string()] };
        let version = match self.transact(*provider, shared.contract, call)? {
            Output::Version(v) => v,
            other => unreachable!("updateData returned {other:?}"),
        };
        self.store.replace(&shared.link, provider, next)?;

        let find = |p: &Platform| {
            let c = p.world().dataset(&shared.contract).expect("contract exists");
            audit_updates(c.event_log(), c.token_period, p.now())
                .into_iter()
                .find(|a| a.version == version)
                .expect("update event recorded")
        };
        let deadline = find(self).deadline;
        // Poll the contract after every block until all recipients resolved.
        loop {
            if find(self).resolved() {
                break;
            }
            if !self.step(deadline)? {
                self.ledger.advance_to(deadline);
                break;
            }
        }
        Ok(UpdateConfirmation { contract: shared.contract, new_hash, audit: find(self), completed_at: self.now() })
    }

    /// Files a complaint and has the authority audit the dataset's event log.
    pub fn file_and_audit(&mut self, subject: &Address, authority: &Address, dataset_id: &str) -> Result<Complaint> {
        self.process_due()?;
        if self.world().registry().role_of(authority)? != Role::SupervisoryAuthority {
            return Err(ContractError::NotAuthority.into());
        }
        let subject_identity = self.subject_identity(subject)?;
        let contract = self
            .catalog
            .get(dataset_id)
            .ok_or_else(|| ProtocolError::UnknownDataset(dataset_id.to_string()))?
            .contract;
        let now = self.now();
        let events = self.world().events(&contract, authority, &EventFilter::default())?;
        let period = self.world().dataset(&contract).expect("catalogued contract exists").token_period;
        let (outcome, violators) = audit_outcome(&audit_updates(&events, period, now), now);
        let complaint = Complaint {
            complaint_id: self.complaints.len() as u64 + 1,
            subject_identity,
            dataset_id: dataset_id.to_string(),
            filed_at: now,
            outcome,
            violators,
        };
        self.complaints.push(complaint.clone());
        Ok(complaint)
    }
}

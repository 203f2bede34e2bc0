//! Oracles, generators and models shared by the property tests here and the
//! acceptance run in `luce-sim`.

#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::prelude::*;
use sha2::{Digest as _, Sha256};

use luce_core::catalog::{Catalog, CatalogEntry, Descriptor};
use luce_core::contracts::{AccessToken, Call, ContractError, License, Output, Role, UpdateKind, World};
use luce_core::costmodel::GasSchedule;
use luce_core::datastore::{hash_records, DataStore, DatastoreError, RecordSet, TokenInvalidReason};
use luce_core::harness::{anon_id, synthetic_records};
use luce_core::ledger::{Ledger, MiningConfig};
use luce_core::protocol::{Behavior, Platform, ProtocolConfig, RecipientStatus};
use luce_core::{Address, Digest, SimTime};

pub fn oracle_escape(s: &str, key: bool) -> String {
    let mut out = String::new();
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '.' | '=' if key => {
                out.push('\\');
                out.push(ch);
            }
            c => out.push(c),
        }
    }
    out
}

pub fn oracle_hash(records: &RecordSet) -> [u8; 32] {
    let mut triples: Vec<(&str, &str, &str)> = Vec::new();
    for (id, fields) in &records.records {
        for (k, v) in fields {
            triples.push((id, k, v));
        }
    }
    triples.sort();
    let lines: Vec<String> = triples
        .iter()
        .map(|(id, k, v)| format!("{}.{}={}", oracle_escape(id, true), oracle_escape(k, true), oracle_escape(v, false)))
        .collect();
    Sha256::digest(lines.join("\n").as_bytes()).into()
}

pub fn record_set_with(min_fields: usize) -> impl Strategy<Value = RecordSet> {
    let text = "[a-zA-Z0-9 .=\\\\\n]{0,8}";
    prop::collection::btree_map(text, prop::collection::btree_map(text, text, min_fields..4), 0..6)
        .prop_map(|records| RecordSet { records, version: 1 })
}

pub fn record_set() -> impl Strategy<Value = RecordSet> {
    record_set_with(0)
}

pub fn check_hash(rs: &RecordSet) -> Result<(), TestCaseError> {
    prop_assert_eq!(hash_records(rs).0, oracle_hash(rs));
    Ok(())
}

pub fn naive_search<'a>(entries: &'a [CatalogEntry], query: &str) -> Vec<&'a str> {
    let contains = |hay: &str, needle: &str| {
        let (h, n) = (hay.as_bytes(), needle.as_bytes());
        n.is_empty() || (n.len() <= h.len() && (0..=h.len() - n.len()).any(|i| h[i..i + n.len()].eq_ignore_ascii_case(n)))
    };
    let mut hits: Vec<&str> = entries
        .iter()
        .filter(|e| {
            query.split(' ').filter(|t| !t.is_empty()).all(|t| {
                contains(&e.descriptor.title, t)
                    || contains(&e.descriptor.description, t)
                    || e.descriptor.keywords.iter().any(|k| contains(k, t))
            })
        })
        .map(|e| e.dataset_id.as_str())
        .collect();
    hits.sort();
    hits
}

/// Deploys `n` empty contracts so catalog entries have something to point at.
pub fn world_with_contracts(n: usize) -> (World, Vec<Address>) {
    let mut ledger = Ledger::new(MiningConfig::default(), GasSchedule::default(), World::new()).unwrap();
    let p = ledger.create_account();
    let registry = ledger.machine().registry_address();
    ledger.submit_call(p, registry, &Call::Register { role: Role::DataProvider, identity: "p".into() }).unwrap();
    let ids: Vec<_> = (0..n)
        .map(|_| ledger.submit_call(p, Address::ZERO, &Call::Deploy { token_period: SimTime::from_days(1) }).unwrap().tx_id)
        .collect();
    ledger.mine_all();
    let addrs = ids
        .iter()
        .map(|id| match ledger.outcome(id) {
            Some(Ok(Output::Deployed(a))) => *a,
            other => panic!("{other:?}"),
        })
        .collect();
    (ledger.machine().clone(), addrs)
}

pub fn corpus() -> impl Strategy<Value = Vec<(String, String, Vec<String>)>> {
    let word = prop::sample::select(vec!["Oncology", "genomics", "cardiac", "ECG", "imaging", "cohort", "rna", "Trial"]);
    let phrase = prop::collection::vec(word.clone(), 0..4).prop_map(|w| w.join(" "));
    prop::collection::vec((phrase.clone(), phrase, prop::collection::vec(word.prop_map(String::from), 0..3)), 0..12)
}

pub fn search_query() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["onc", "GEN", "ecg", "cohort", "x", "ia", "trial"]), 0..3)
        .prop_map(|q| q.join(" "))
}

/// Publishes `docs` into a fresh catalog and compares a search with the scan.
pub fn check_search(docs: Vec<(String, String, Vec<String>)>, query: &str) -> Result<(), TestCaseError> {
    let (world, addrs) = world_with_contracts(1);
    let mut catalog = Catalog::new();
    let mut entries = Vec::new();
    for (i, (title, description, keywords)) in docs.into_iter().enumerate() {
        let e = CatalogEntry {
            dataset_id: format!("ds-{:02}", (i * 7) % 13),
            descriptor: Descriptor { title, description, keywords },
            license_type: "CC0".into(),
            contract: addrs[0],
        };
        if catalog.publish_entry(e.clone(), &world).is_ok() {
            entries.push(e);
        }
    }
    let got: Vec<&str> = catalog.search(query).iter().map(|e| e.dataset_id.as_str()).collect();
    prop_assert_eq!(got, naive_search(&entries, query));
    Ok(())
}

// Token gating: contract and datastore decisions against a model built only
// from call outputs.

pub const PERIOD: SimTime = SimTime::from_days(2);

#[derive(Debug, Clone)]
pub enum Op {
    Subscribe { who: usize, c: usize, purpose_ok: bool, accept: bool },
    GetLink { who: usize, c: usize },
    Renew { who: usize, c: usize },
    Unsubscribe { who: usize, c: usize },
    Update { c: usize },
    Confirm { who: usize, c: usize },
    Advance { hours: u64 },
    Fetch { who: usize, c: usize, holder: usize, token_c: usize },
}

pub fn op() -> impl Strategy<Value = Op> {
    let who = 0..20usize;
    let c = 0..3usize;
    prop_oneof![
        3 => (who.clone(), c.clone(), any::<bool>(), any::<bool>())
            .prop_map(|(who, c, purpose_ok, accept)| Op::Subscribe { who, c, purpose_ok, accept }),
        3 => (who.clone(), c.clone()).prop_map(|(who, c)| Op::GetLink { who, c }),
        2 => (who.clone(), c.clone()).prop_map(|(who, c)| Op::Renew { who, c }),
        1 => (who.clone(), c.clone()).prop_map(|(who, c)| Op::Unsubscribe { who, c }),
        1 => c.clone().prop_map(|c| Op::Update { c }),
        1 => (who.clone(), c.clone()).prop_map(|(who, c)| Op::Confirm { who, c }),
        2 => (0..60u64).prop_map(|hours| Op::Advance { hours }),
        3 => (who.clone(), c.clone(), who, c).prop_map(|(who, c, holder, token_c)| Op::Fetch { who, c, holder, token_c }),
    ]
}

#[derive(Debug, Clone, Copy)]
pub struct ModelToken {
    token: AccessToken,
    revoked: bool,
    deleted: bool,
    confirmed: u64,
}

pub struct Gating {
    pub ledger: Ledger<World>,
    store: DataStore,
    users: Vec<Address>,
    roles: Vec<Option<Role>>,
    contracts: Vec<Address>,
    links: Vec<String>,
    versions: Vec<u64>,
    tokens: BTreeMap<(usize, usize), ModelToken>,
}

/// Accounts 0..3 provide contracts 0..3; 3..16 request; 16 is a subject, 17
/// an authority; 18 and 19 never register.
pub fn gating_setup(seed: u64) -> Gating {
    let mut ledger = Ledger::new(MiningConfig::default().with_seed(seed), GasSchedule::default(), World::new()).unwrap();
    let registry = ledger.machine().registry_address();
    let users: Vec<Address> = (0..20).map(|_| ledger.create_account()).collect();
    let roles: Vec<Option<Role>> = (0..20)
        .map(|i| match i {
            0..=2 => Some(Role::DataProvider),
            3..=15 => Some(Role::DataRequester),
            16 => Some(Role::DataSubject),
            17 => Some(Role::SupervisoryAuthority),
            _ => None,
        })
        .collect();
    for (u, r) in users.iter().zip(&roles) {
        if let Some(role) = r {
            ledger.submit_call(*u, registry, &Call::Register { role: *role, identity: format!("{u}") }).unwrap();
        }
    }
    let deploys: Vec<_> = (0..3)
        .map(|i| ledger.submit_call(users[i], Address::ZERO, &Call::Deploy { token_period: PERIOD }).unwrap().tx_id)
        .collect();
    ledger.mine_all();
    let contracts: Vec<Address> = deploys
        .iter()
        .map(|id| match ledger.outcome(id) {
            Some(Ok(Output::Deployed(a))) => *a,
            other => panic!("{other:?}"),
        })
        .collect();
    let mut store = DataStore::new();
    let mut links = Vec::new();
    for i in 0..3 {
        let (link, hash) = store.store(users[i], contracts[i], synthetic_records(0..3), false).unwrap();
        let publish = Call::PublishData { descriptor: "d".into(), link: link.clone(), hash };
        ledger.submit_call(users[i], contracts[i], &publish).unwrap();
        let lic = License::new("CC-BY", "t", ["research"]);
        ledger.submit_call(users[i], contracts[i], &Call::SetLicense(lic)).unwrap();
        links.push(link);
    }
    ledger.mine_all();
    Gating { ledger, store, users, roles, contracts, links, versions: vec![1; 3], tokens: BTreeMap::new() }
}

pub enum Expect {
    Ok,
    Err(ContractError),
}

impl Gating {
    fn exec(&mut self, who: usize, c: usize, call: Call) -> (Result<Output, ContractError>, SimTime) {
        let id = self.ledger.submit_call(self.users[who], self.contracts[c], &call).unwrap().tx_id;
        let at = self.ledger.mine_next().unwrap().mined_at;
        (self.ledger.outcome(&id).unwrap().clone(), at)
    }

    /// Expected access decision for `who` on contract `c` at `at`.
    fn access(&self, who: usize, c: usize, at: SimTime) -> Expect {
        if self.roles[who].is_none() {
            return Expect::Err(ContractError::NotRegistered);
        }
        match self.tokens.get(&(who, c)) {
            None => Expect::Err(ContractError::NoToken),
            Some(t) if t.deleted => Expect::Err(ContractError::NoToken),
            Some(t) if t.revoked => Expect::Err(ContractError::TokenRevoked),
            Some(t) if at > t.token.expires_at => Expect::Err(ContractError::TokenExpired),
            Some(_) => Expect::Ok,
        }
    }

    pub fn step(&mut self, op: &Op) -> Result<(), TestCaseError> {
        match *op {
            Op::Subscribe { who, c, purpose_ok, accept } => {
                let purpose = if purpose_ok { "research" } else { "marketing" }.to_string();
                let (out, _) = self.exec(who, c, Call::AddDataRequester { purpose, license_accepted: accept });
                if let Ok(Output::Token(token)) = out {
                    prop_assert_eq!(self.roles[who], Some(Role::DataRequester));
                    prop_assert!(purpose_ok && accept);
                    let confirmed = self.versions[c];
                    self.tokens.insert((who, c), ModelToken { token, revoked: false, deleted: false, confirmed });
                }
            }
            Op::GetLink { who, c } => {
                let (out, at) = self.exec(who, c, Call::GetLink);
                match (self.access(who, c, at), out) {
                    (Expect::Ok, Ok(Output::Link(l))) => prop_assert_eq!(&l, &self.links[c]),
                    (Expect::Err(e), Err(got)) => prop_assert_eq!(e, got),
                    (_, got) => prop_assert!(false, "getLink for {} on {}: unexpected {:?}", who, c, got),
                }
            }
            Op::Renew { who, c } => {
                let (out, at) = self.exec(who, c, Call::RenewToken);
                match (self.access(who, c, at), out) {
                    (Expect::Ok, Ok(Output::Renewal { token, renewed })) => {
                        let t = self.tokens.get_mut(&(who, c)).unwrap();
                        prop_assert_eq!(renewed, t.confirmed == self.versions[c]);
                        t.token = token;
                        t.revoked = !renewed;
                        if renewed {
                            prop_assert_eq!(token.expires_at, at + PERIOD);
                        }
                    }
                    (Expect::Err(e), Err(got)) => prop_assert_eq!(e, got),
                    (_, got) => prop_assert!(false, "renew: unexpected {:?}", got),
                }
            }
            Op::Unsubscribe { who, c } => {
                let (out, _) = self.exec(who, c, Call::Unsubscribe);
                if out.is_ok() {
                    let t = self.tokens.get_mut(&(who, c));
                    prop_assert!(t.as_ref().is_some_and(|t| !t.deleted));
                    t.unwrap().deleted = true;
                }
            }
            Op::Update { c } => {
                let hash = Digest::of(format!("{c}-{}", self.versions[c]).as_bytes());
                let call = Call::UpdateData { new_hash: hash, kind: UpdateKind::Rectify, anon_ids: vec![anon_id(0)] };
                let (out, _) = self.exec(c, c, call);
                prop_assert!(out.is_ok(), "{:?}", out);
                self.versions[c] += 1;
            }
            Op::Confirm { who, c } => {
                let version = self.versions[c];
                let (out, _) = self.exec(who, c, Call::ConfirmUpdate { version });
                if out.is_ok() {
                    self.tokens.get_mut(&(who, c)).unwrap().confirmed = version;
                }
            }
            Op::Advance { hours } => {
                let t = self.ledger.now() + SimTime::from_hours(hours);
                self.ledger.advance_to(t);
            }
            Op::Fetch { who, c, holder, token_c } => {
                let Some(held) = self.tokens.get(&(holder, token_c)).map(|t| t.token) else { return Ok(()) };
                let now = self.ledger.now();
                let contract = self.ledger.machine().dataset(&self.contracts[c]).unwrap();
                let got = self.store.fetch(&self.links[c], &self.users[who], &held, contract, now);
                let reason = if token_c != c {
                    Some(TokenInvalidReason::WrongContract)
                } else if holder != who {
                    Some(TokenInvalidReason::NotOwner)
                } else {
                    match self.access(who, c, now) {
                        Expect::Err(ContractError::TokenRevoked) => Some(TokenInvalidReason::Revoked),
                        Expect::Err(ContractError::TokenExpired) => Some(TokenInvalidReason::Expired),
                        Expect::Err(_) => Some(TokenInvalidReason::NoToken),
                        Expect::Ok => None,
                    }
                };
                match (reason, got) {
                    (None, Ok(rs)) => prop_assert_eq!(rs, synthetic_records(0..3)),
                    (Some(r), Err(DatastoreError::TokenInvalid(g))) => prop_assert_eq!(r, g),
                    (r, g) => prop_assert!(false, "fetch expected {:?}, got {:?}", r, g),
                }
            }
        }
        Ok(())
    }
}

pub fn gating_case() -> impl Strategy<Value = (u64, Vec<Op>)> {
    (any::<u64>(), prop::collection::vec(op(), 1..40))
}

pub fn check_gating(seed: u64, ops: &[Op]) -> Result<(), TestCaseError> {
    let mut g = gating_setup(seed);
    for op in ops {
        g.step(op)?;
    }
    prop_assert!(g.ledger.verify_chain());
    Ok(())
}

// Erasure bound with a mix of compliant and update-ignoring requesters.

#[derive(Debug, Clone)]
pub struct ErasureCase {
    pub seed: u64,
    /// One flag per requester: true if it ignores updates.
    pub ignoring: Vec<bool>,
    pub erase_after_hours: u64,
    pub subject: u32,
}

pub fn erasure_case(max_requesters: usize) -> impl Strategy<Value = ErasureCase> {
    (any::<u64>(), prop::collection::vec(any::<bool>(), 1..=max_requesters), 0u64..(24 * 30), 0u32..4)
        .prop_map(|(seed, ignoring, erase_after_hours, subject)| ErasureCase { seed, ignoring, erase_after_hours, subject })
}

pub fn check_erasure(case: &ErasureCase) -> Result<(), TestCaseError> {
    let ErasureCase { seed, ref ignoring, erase_after_hours, subject } = *case;
    let mut p = Platform::new(MiningConfig::default().with_seed(seed), GasSchedule::default(), ProtocolConfig::default()).unwrap();
    let provider = p.register(Role::DataProvider, "hospital").unwrap();
    let subjects: Vec<_> = (0..4).map(|i| p.register(Role::DataSubject, &format!("s{i}")).unwrap()).collect();
    p.share_dataset(provider, "ds", synthetic_records(0..4), Descriptor {
        title: "t".into(), description: "d".into(), keywords: vec![],
    }, License::new("CC-BY", "t", ["research"])).unwrap();
    for i in 0..4 {
        p.map_subject(&provider, &format!("s{i}"), "ds", &anon_id(i));
    }
    let mut requesters = Vec::new();
    for (i, ignore) in ignoring.iter().enumerate() {
        let r = p.register(Role::DataRequester, &format!("r{i}")).unwrap();
        p.set_behavior(&r, Behavior { ignore_updates: *ignore, never_renew: false }).unwrap();
        p.acquire(r, "ds", "research").unwrap();
        requesters.push(r);
    }
    p.run_until(p.now() + SimTime::from_hours(erase_after_hours)).unwrap();
    let contract = p.catalog().get("ds").unwrap().contract;
    let active: Vec<Address> = p.world().dataset(&contract).unwrap().active_requesters(p.now()).copied().collect();

    let conf = p.request_erasure(&subjects[subject as usize], &provider, "ds").unwrap();
    let recipients: Vec<Address> = conf.audit.recipients.keys().copied().collect();
    prop_assert_eq!(&recipients, &active);
    for (r, status) in &conf.audit.recipients {
        let i = requesters.iter().position(|x| x == r).unwrap();
        let expected = if ignoring[i] { RecipientStatus::Revoked } else { RecipientStatus::Confirmed };
        prop_assert_eq!(*status, expected);
    }
    prop_assert!(conf.completed_at <= conf.audit.deadline);

    p.run_until(conf.audit.deadline).unwrap();
    for r in &requesters {
        if let Ok(rs) = p.fetch_as(r, "ds") {
            prop_assert!(!rs.contains(&anon_id(subject)));
        }
    }
    let cache = p.sync_cache().clone();
    prop_assert!(cache.incoherent(p.world()).is_empty());
    prop_assert!(p.ledger().verify_chain());
    Ok(())
}

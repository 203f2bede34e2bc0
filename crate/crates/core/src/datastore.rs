//! Off-chain dataset storage with token-checked retrieval.
//!
//! A dataset is a [`RecordSet`] keyed by anonymized subject id. Its provenance
//! digest is SHA-256 over the canonical text: one `anonId.field=value` line per
//! field, records sorted by id and fields by name, joined by `\n`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contracts::{AccessDenied, AccessToken, DatasetContract};
use crate::primitives::{Address, Digest, SimTime};

pub type Fields = BTreeMap<String, String>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSet {
    pub records: BTreeMap<String, Fields>,
    pub version: u64,
}

impl RecordSet {
    pub fn new() -> Self {
        RecordSet { records: BTreeMap::new(), version: 1 }
    }

    pub fn with_record<I, K, V>(mut self, anon_id: &str, fields: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        self.records.insert(
            anon_id.to_string(),
            fields.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        );
        self
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, anon_id: &str) -> bool {
        self.records.contains_key(anon_id)
    }

    /// The hashing pre-image: one `anonId.field=value` line per field, sorted.
    /// A record without fields contributes no line.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (anon_id, fields) in &self.records {
            for (name, value) in fields {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&escape_key(anon_id));
                out.push('.');
                out.push_str(&escape_key(name));
                out.push('=');
                out.push_str(&escape(value));
            }
        }
        out
    }
}

/// Keeps line structure unambiguous; a no-op for text without `\` or newlines.
fn escape(s: &str) -> String {
    if !s.contains(['\\', '\n']) {
        return s.to_string();
    }
    s.replace('\\', "\\\\").replace('\n', "\\n")
}

/// Ids and field names additionally escape their separators.
fn escape_key(s: &str) -> String {
    if !s.contains(['\\', '\n', '.', '=']) {
        return s.to_string();
    }
    escape(s).replace('.', "\\.").replace('=', "\\=")
}

pub fn hash_records(records: &RecordSet) -> Digest {
    Digest::of(records.canonical_text().as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokenInvalidReason {
    NoToken,
    Expired,
    Revoked,
    /// The token is bound to a different contract than the one owning the link.
    WrongContract,
    /// The caller does not own the token.
    NotOwner,
    /// A newer token has been issued to the same requester.
    Superseded,
}

impl From<AccessDenied> for TokenInvalidReason {
    fn from(d: AccessDenied) -> Self {
        match d {
            AccessDenied::NoToken => TokenInvalidReason::NoToken,
            AccessDenied::Expired => TokenInvalidReason::Expired,
            AccessDenied::Revoked => TokenInvalidReason::Revoked,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatastoreError {
    #[error("no record with anonymized id `{0}`")]
    UnknownAnonId(String),
    #[error("token rejected: {0:?}")]
    TokenInvalid(TokenInvalidReason),
    #[error("unknown locator `{0}`")]
    UnknownLink(String),
    #[error("empty record set")]
    EmptyRecordSet,
    #[error("only the storing provider may replace a dataset")]
    NotOwner,
}

/// Merges `new_fields` into one record. The returned set carries the next version.
pub fn apply_rectify(
    records: &RecordSet,
    anon_id: &str,
    new_fields: &Fields,
) -> Result<(RecordSet, Digest), DatastoreError> {
    let mut next = records.clone();
    let fields = next
        .records
        .get_mut(anon_id)
        .ok_or_else(|| DatastoreError::UnknownAnonId(anon_id.to_string()))?;
    for (k, v) in new_fields {
        fields.insert(k.clone(), v.clone());
    }
    next.version = records.version + 1;
    let digest = hash_records(&next);
    Ok((next, digest))
}

pub fn apply_erase(records: &RecordSet, anon_id: &str) -> Result<(RecordSet, Digest), DatastoreError> {
    let mut next = records.clone();
    next.records
        .remove(anon_id)
        .ok_or_else(|| DatastoreError::UnknownAnonId(anon_id.to_string()))?;
    next.version = records.version + 1;
    let digest = hash_records(&next);
    Ok((next, digest))
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Stored {
    provider: Address,
    contract: Address,
    records: RecordSet,
}

/// Provider-side storage. Locators look like `luce-store://<contract>/<key>`.
#[derive(Debug, Clone, Default)]
pub struct DataStore {
    entries: BTreeMap<String, Stored>,
    next_key: u64,
}

impl DataStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn store(
        &mut self,
        provider: Address,
        contract: Address,
        records: RecordSet,
        allow_empty: bool,
    ) -> Result<(String, Digest), DatastoreError> {
        if records.is_empty() && !allow_empty {
            return Err(DatastoreError::EmptyRecordSet);
        }
        self.next_key += 1;
        let link = format!("luce-store://{}/{}", contract, self.next_key);
        let digest = hash_records(&records);
        self.entries.insert(link.clone(), Stored { provider, contract, records });
        Ok((link, digest))
    }

    pub fn replace(&mut self, link: &str, provider: &Address, records: RecordSet) -> Result<Digest, DatastoreError> {
        let entry = self
            .entries
            .get_mut(link)
            .ok_or_else(|| DatastoreError::UnknownLink(link.to_string()))?;
        if entry.provider != *provider {
            return Err(DatastoreError::NotOwner);
        }
        let digest = hash_records(&records);
        entry.records = records;
        Ok(digest)
    }

    pub fn remove(&mut self, link: &str) {
        self.entries.remove(link);
    }

    /// Provider's own view, no token needed.
    pub fn records(&self, link: &str) -> Option<&RecordSet> {
        self.entries.get(link).map(|s| &s.records)
    }

    pub fn contract_of(&self, link: &str) -> Option<Address> {
        self.entries.get(link).map(|s| s.contract)
    }

    pub fn links(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Returns the whole dataset iff the owning contract would serve its link
    /// to `caller` at `now` and `token` is that caller's current token.
    pub fn fetch(
        &self,
        link: &str,
        caller: &Address,
        token: &AccessToken,
        contract: &DatasetContract,
        now: SimTime,
    ) -> Result<RecordSet, DatastoreError> {
        let stored = self
            .entries
            .get(link)
            .ok_or_else(|| DatastoreError::UnknownLink(link.to_string()))?;
        let invalid = DatastoreError::TokenInvalid;
        if token.contract != stored.contract || contract.address != stored.contract {
            return Err(invalid(TokenInvalidReason::WrongContract));
        }
        if token.owner != *caller {
            return Err(invalid(TokenInvalidReason::NotOwner));
        }
        let entry = contract
            .check_access(caller, now)
            .map_err(|d| invalid(d.into()))?;
        if entry.token.token_id != token.token_id {
            return Err(invalid(TokenInvalidReason::Superseded));
        }
        Ok(stored.records.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::{TokenState, DEFAULT_TOKEN_PERIOD};
    use alloc::vec::Vec;

    fn three() -> RecordSet {
        RecordSet::new()
            .with_record("s-001", [("age", "54"), ("dx", "C50")])
            .with_record("s-002", [("age", "61"), ("dx", "C34")])
            .with_record("s-017", [("age", "47"), ("dx", "C18")])
    }

    /// Independent pre-image: format each line directly, sort, join.
    fn oracle(rs: &RecordSet) -> Digest {
        let mut lines: Vec<String> = Vec::new();
        for (id, fields) in &rs.records {
            for (k, v) in fields {
                lines.push(format!("{id}.{k}={v}"));
            }
        }
        lines.sort();
        Digest::of(lines.join("\n").as_bytes())
    }

    #[test]
    fn empty_set_hashes_empty_string() {
        assert_eq!(hash_records(&RecordSet::new()), Digest::of(b""));
    }

    #[test]
    fn known_fixture_matches_oracle() {
        let rs = RecordSet::new()
            .with_record("b", [("z", "1"), ("a", "2")])
            .with_record("a", [("x", "y")]);
        assert_eq!(rs.canonical_text(), "a.x=y\nb.a=2\nb.z=1");
        assert_eq!(hash_records(&rs), oracle(&rs));
        // python3: hashlib.sha256(b"a.x=y\nb.a=2\nb.z=1").hexdigest()
        assert_eq!(
            hash_records(&rs).to_hex(),
            "b05bd79627102efcf8d44ff41e34de6522541f66070702a954f94622448c1fc7"
        );
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let a = RecordSet::new().with_record("x", [("p", "1"), ("q", "2")]).with_record("y", [("r", "3")]);
        let b = RecordSet::new().with_record("y", [("r", "3")]).with_record("x", [("q", "2"), ("p", "1")]);
        assert_eq!(hash_records(&a), hash_records(&b));
    }

    #[test]
    fn rectify_changes_hash_unless_identical() {
        let rs = three();
        let change: Fields = [("age".to_string(), "55".to_string())].into_iter().collect();
        let (next, h) = apply_rectify(&rs, "s-001", &change).unwrap();
        assert_ne!(h, hash_records(&rs));
        assert_eq!(h, oracle(&next));
        assert_eq!(next.version, 2);

        let same: Fields = [("age".to_string(), "54".to_string())].into_iter().collect();
        let (_, h) = apply_rectify(&rs, "s-001", &same).unwrap();
        assert_eq!(h, hash_records(&rs));

        assert_eq!(
            apply_rectify(&rs, "s-999", &same),
            Err(DatastoreError::UnknownAnonId("s-999".into()))
        );
    }

    #[test]
    fn erase_removes_one_record() {
        let rs = three();
        let (next, h) = apply_erase(&rs, "s-017").unwrap();
        assert_eq!(next.len(), 2);
        assert!(!next.contains("s-017"));
        assert_eq!(h, oracle(&next));
        assert_eq!(
            apply_erase(&next, "s-017"),
            Err(DatastoreError::UnknownAnonId("s-017".into()))
        );
    }

    #[test]
    fn erasing_all_in_any_order_gives_empty_hash() {
        let ids = ["s-001", "s-002", "s-017"];
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for p in perms {
            let mut rs = three();
            for i in p {
                rs = apply_erase(&rs, ids[i]).unwrap().0;
            }
            assert_eq!(hash_records(&rs), Digest::of(b""));
        }
    }

    #[test]
    fn store_same_content_twice() {
        let mut s = DataStore::new();
        let p = Address([1; 20]);
        let c = Address([2; 20]);
        let (l1, h1) = s.store(p, c, three(), false).unwrap();
        let (l2, h2) = s.store(p, c, three(), false).unwrap();
        assert_eq!(h1, h2);
        assert_ne!(l1, l2);
        assert_eq!(h1.to_hex().len(), 64);
        assert!(l1.starts_with(&format!("luce-store://{c}/")));
        assert_eq!(s.store(p, c, RecordSet::new(), false), Err(DatastoreError::EmptyRecordSet));
        let (_, h) = s.store(p, c, RecordSet::new(), true).unwrap();
        assert_eq!(h, Digest::of(b""));
    }

    fn contract_with(owner: Address, addr: Address, expires: SimTime, state: TokenState) -> (DatasetContract, AccessToken) {
        let mut c = DatasetContract::new(addr, Address([1; 20]), DEFAULT_TOKEN_PERIOD);
        let token = AccessToken {
            token_id: 1,
            owner,
            contract: addr,
            issued_at: SimTime::ZERO,
            expires_at: expires,
            state,
        };
        c.requesters.insert(
            owner,
            crate::contracts::RequesterEntry {
                purpose: "research".into(),
                token,
                confirmed_version: 1,
                last_renewal_at: SimTime::ZERO,
            },
        );
        (c, token)
    }

    #[test]
    fn fetch_checks_token() {
        let provider = Address([1; 20]);
        let contract_addr = Address([2; 20]);
        let req = Address([3; 20]);
        let mut s = DataStore::new();
        let (link, _) = s.store(provider, contract_addr, three(), false).unwrap();
        let expiry = DEFAULT_TOKEN_PERIOD;
        let (c, tok) = contract_with(req, contract_addr, expiry, TokenState::Active);

        assert_eq!(s.fetch(&link, &req, &tok, &c, SimTime::from_secs(5)).unwrap(), three());
        assert_eq!(
            s.fetch(&link, &req, &tok, &c, expiry + SimTime(1)),
            Err(DatastoreError::TokenInvalid(TokenInvalidReason::Expired))
        );
        assert_eq!(
            s.fetch(&link, &Address([4; 20]), &tok, &c, SimTime::ZERO),
            Err(DatastoreError::TokenInvalid(TokenInvalidReason::NotOwner))
        );

        let other = Address([9; 20]);
        let (c2, tok2) = contract_with(req, other, expiry, TokenState::Active);
        assert_eq!(
            s.fetch(&link, &req, &tok2, &c2, SimTime::ZERO),
            Err(DatastoreError::TokenInvalid(TokenInvalidReason::WrongContract))
        );

        let (c3, tok3) = contract_with(req, contract_addr, expiry, TokenState::Revoked);
        assert_eq!(
            s.fetch(&link, &req, &tok3, &c3, SimTime::ZERO),
            Err(DatastoreError::TokenInvalid(TokenInvalidReason::Revoked))
        );
        assert!(matches!(
            s.fetch("luce-store://nowhere/1", &req, &tok, &c, SimTime::ZERO),
            Err(DatastoreError::UnknownLink(_))
        ));
    }
}

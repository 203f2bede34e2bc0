//! On-ledger contracts: the user registry, one dataset contract per shared
//! dataset, and a minimal key/value baseline contract.
//!
//! Every state change happens inside [`World::execute`], i.e. while a block is
//! being mined. Read-only views (`resolve`, `events`, access checks) take the
//! current simulated time explicitly.

mod call;
mod dataset;
mod registry;
mod world;

pub use call::{Call, Output};
pub use dataset::{AccessDenied, DatasetContract, RequesterEntry};
pub use registry::{Registration, UserRegistry};
pub use world::{replay, ReplayError, World};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{Address, Digest, SimTime};

/// Default token period: two simulated weeks.
pub const DEFAULT_TOKEN_PERIOD: SimTime = SimTime::from_days(14);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    DataProvider,
    DataRequester,
    DataSubject,
    SupervisoryAuthority,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::DataProvider => "DataProvider",
            Role::DataRequester => "DataRequester",
            Role::DataSubject => "DataSubject",
            Role::SupervisoryAuthority => "SupervisoryAuthority",
        })
    }
}

impl FromStr for Role {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "DataProvider" => Role::DataProvider,
            "DataRequester" => Role::DataRequester,
            "DataSubject" => Role::DataSubject,
            "SupervisoryAuthority" => Role::SupervisoryAuthority,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct License {
    pub license_type: String,
    pub terms: String,
    pub permitted_purposes: BTreeSet<String>,
}

impl License {
    pub fn new<I, S>(license_type: &str, terms: &str, purposes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        License {
            license_type: license_type.into(),
            terms: terms.into(),
            permitted_purposes: purposes.into_iter().map(Into::into).collect(),
        }
    }

    pub fn permits(&self, purpose: &str) -> bool {
        self.permitted_purposes.contains(purpose)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TokenState {
    Active,
    Expired,
    Revoked,
    Deleted,
}

impl fmt::Display for TokenState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for TokenState {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "Active" => TokenState::Active,
            "Expired" => TokenState::Expired,
            "Revoked" => TokenState::Revoked,
            "Deleted" => TokenState::Deleted,
            _ => return Err(()),
        })
    }
}

/// Access credential for one (contract, owner) pair.
///
/// `state` is the stored state. A stored `Active` token whose `expires_at` has
/// passed is effectively `Expired`; see [`AccessToken::state_at`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessToken {
    pub token_id: u64,
    pub owner: Address,
    pub contract: Address,
    pub issued_at: SimTime,
    pub expires_at: SimTime,
    pub state: TokenState,
}

impl AccessToken {
    pub fn state_at(&self, now: SimTime) -> TokenState {
        match self.state {
            TokenState::Active if now > self.expires_at => TokenState::Expired,
            s => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UpdateKind {
    Rectify,
    Erase,
}

impl fmt::Display for UpdateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for UpdateKind {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "Rectify" => Ok(UpdateKind::Rectify),
            "Erase" => Ok(UpdateKind::Erase),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Published,
    LicenseSet,
    RequesterAdded,
    LinkServed,
    UpdateRequested,
    UpdateConfirmed,
    TokenRenewed,
    TokenRevoked,
    Unsubscribed,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for EventKind {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        use EventKind::*;
        Ok(match s {
            "Published" => Published,
            "LicenseSet" => LicenseSet,
            "RequesterAdded" => RequesterAdded,
            "LinkServed" => LinkServed,
            "UpdateRequested" => UpdateRequested,
            "UpdateConfirmed" => UpdateConfirmed,
            "TokenRenewed" => TokenRenewed,
            "TokenRevoked" => TokenRevoked,
            "Unsubscribed" => Unsubscribed,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractEvent {
    pub kind: EventKind,
    pub actor: Address,
    pub payload: BTreeMap<String, String>,
    pub tx_ref: Digest,
    pub at: SimTime,
}

impl ContractEvent {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.payload.get(key).map(String::as_str)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventFilter {
    pub kind: Option<EventKind>,
    pub actor: Option<Address>,
    pub from: Option<SimTime>,
    pub until: Option<SimTime>,
}

impl EventFilter {
    pub fn kind(kind: EventKind) -> Self {
        EventFilter { kind: Some(kind), ..Default::default() }
    }

    pub fn actor(actor: Address) -> Self {
        EventFilter { actor: Some(actor), ..Default::default() }
    }

    pub fn matches(&self, e: &ContractEvent) -> bool {
        self.kind.is_none_or(|k| k == e.kind)
            && self.actor.is_none_or(|a| a == e.actor)
            && self.from.is_none_or(|t| e.at >= t)
            && self.until.is_none_or(|t| e.at <= t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("caller is not registered")]
    NotRegistered,
    #[error("address already registered")]
    AlreadyRegistered,
    #[error("identity reference must be non-empty")]
    EmptyIdentity,
    #[error("caller is not a supervisory authority")]
    NotAuthority,
    #[error("address is not registered")]
    UnknownAddress,
    #[error("caller has the wrong role for this operation")]
    WrongRole,
    #[error("no contract at target address")]
    UnknownContract,
    #[error("caller is not the dataset provider")]
    NotOwner,
    #[error("dataset hash must be non-zero")]
    ZeroHash,
    #[error("dataset already published")]
    AlreadyPublished,
    #[error("license must permit at least one purpose")]
    EmptyPurposes,
    #[error("no license has been set")]
    NoLicense,
    #[error("license terms were not accepted")]
    LicenseNotAccepted,
    #[error("purpose is not permitted by the license")]
    PurposeIncompatible,
    #[error("requester already holds an active token")]
    AlreadySubscribed,
    #[error("no token held")]
    NoToken,
    #[error("token expired")]
    TokenExpired,
    #[error("token revoked")]
    TokenRevoked,
    #[error("new hash equals current hash")]
    SameHash,
    #[error("confirmation for version {given} but current version is {current}")]
    StaleVersion { given: u64, current: u64 },
    #[error("version {given} does not exist (current is {current})")]
    UnknownVersion { given: u64, current: u64 },
    #[error("no requester entry")]
    NoEntry,
}

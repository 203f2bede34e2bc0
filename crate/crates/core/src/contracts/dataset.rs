use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    AccessToken, ContractError, ContractEvent, EventFilter, EventKind, License, Role, TokenState,
    UpdateKind, UserRegistry,
};
use crate::encoding::join_list;
use crate::ledger::ExecContext;
use crate::primitives::{Address, Digest, SimTime};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequesterEntry {
    pub purpose: String,
    pub token: AccessToken,
    pub confirmed_version: u64,
    pub last_renewal_at: SimTime,
}

/// Why a requester cannot currently use a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccessDenied {
    NoToken,
    Expired,
    Revoked,
}

impl From<AccessDenied> for ContractError {
    fn from(d: AccessDenied) -> Self {
        match d {
            AccessDenied::NoToken => ContractError::NoToken,
            AccessDenied::Expired => ContractError::TokenExpired,
            AccessDenied::Revoked => ContractError::TokenRevoked,
        }
    }
}

/// State of one dataset's contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetContract {
    pub address: Address,
    pub provider: Address,
    pub dataset_hash: Digest,
    pub descriptor: String,
    pub link: String,
    pub license: Option<License>,
    pub version: u64,
    pub token_period: SimTime,
    pub requesters: BTreeMap<Address, RequesterEntry>,
    events: Vec<ContractEvent>,
    next_token_id: u64,
    /// When false, renewal never revokes. Only used to construct violation traces.
    pub enforce_update_confirmation: bool,
}

fn event(kind: EventKind, ctx: &ExecContext, payload: BTreeMap<String, String>) -> ContractEvent {
    ContractEvent { kind, actor: ctx.sender, payload, tx_ref: ctx.tx_id, at: ctx.now }
}

macro_rules! payload {
    ($($k:expr => $v:expr),* $(,)?) => {{
        #[allow(unused_mut)]
        let mut m = BTreeMap::new();
        $( m.insert(String::from($k), $v.to_string()); )*
        m
    }};
}

impl DatasetContract {
    pub fn new(address: Address, provider: Address, token_period: SimTime) -> Self {
        DatasetContract {
            address,
            provider,
            dataset_hash: Digest::ZERO,
            descriptor: String::new(),
            link: String::new(),
            license: None,
            version: 1,
            token_period,
            requesters: BTreeMap::new(),
            events: Vec::new(),
            next_token_id: 1,
            enforce_update_confirmation: true,
        }
    }

    pub fn event_log(&self) -> &[ContractEvent] {
        &self.events
    }

    pub fn events(
        &self,
        registry: &UserRegistry,
        caller: &Address,
        filter: &EventFilter,
    ) -> Result<Vec<ContractEvent>, ContractError> {
        registry.require(caller)?;
        Ok(self.events.iter().filter(|e| filter.matches(e)).cloned().collect())
    }

    /// The entry of a requester that currently may use the dataset.
    pub fn check_access(&self, caller: &Address, now: SimTime) -> Result<&RequesterEntry, AccessDenied> {
        let entry = self.requesters.get(caller).ok_or(AccessDenied::NoToken)?;
        match entry.token.state_at(now) {
            TokenState::Active => Ok(entry),
            TokenState::Expired => Err(AccessDenied::Expired),
            TokenState::Revoked => Err(AccessDenied::Revoked),
            TokenState::Deleted => Err(AccessDenied::NoToken),
        }
    }

    /// Requesters whose token is effectively active at `now`.
    pub fn active_requesters(&self, now: SimTime) -> impl Iterator<Item = &Address> {
        self.requesters
            .iter()
            .filter(move |(_, e)| e.token.state_at(now) == TokenState::Active)
            .map(|(a, _)| a)
    }

    fn require_owner(&self, registry: &UserRegistry, caller: &Address) -> Result<(), ContractError> {
        registry.require(caller)?;
        if *caller != self.provider {
            return Err(ContractError::NotOwner);
        }
        Ok(())
    }

    pub(crate) fn publish_data(
        &mut self,
        registry: &UserRegistry,
        ctx: &ExecContext,
        descriptor: String,
        link: String,
        hash: Digest,
    ) -> Result<(), ContractError> {
        self.require_owner(registry, &ctx.sender)?;
        if !self.dataset_hash.is_zero() {
            return Err(ContractError::AlreadyPublished);
        }
        if hash.is_zero() {
            return Err(ContractError::ZeroHash);
        }
        self.events.push(event(
            EventKind::Published,
            ctx,
            payload! { "hash" => hash, "link" => &link, "version" => self.version },
        ));
        self.dataset_hash = hash;
        self.descriptor = descriptor;
        self.link = link;
        Ok(())
    }

    pub(crate) fn set_license(
        &mut self,
        registry: &UserRegistry,
        ctx: &ExecContext,
        license: License,
    ) -> Result<(), ContractError> {
        self.require_owner(registry, &ctx.sender)?;
        if license.permitted_purposes.is_empty() {
            return Err(ContractError::EmptyPurposes);
        }
        self.events.push(event(
            EventKind::LicenseSet,
            ctx,
            payload! {
                "licenseType" => &license.license_type,
                "purposes" => join_list(&license.permitted_purposes),
            },
        ));
        self.license = Some(license);
        Ok(())
    }

    pub(crate) fn get_license(&self, registry: &UserRegistry, caller: &Address) -> Result<License, ContractError> {
        registry.require(caller)?;
        self.license.clone().ok_or(ContractError::NoLicense)
    }

    pub(crate) fn add_data_requester(
        &mut self,
        registry: &UserRegistry,
        ctx: &ExecContext,
        purpose: String,
        license_accepted: bool,
    ) -> Result<AccessToken, ContractError> {
        registry.require_role(&ctx.sender, Role::DataRequester)?;
        let license = self.license.as_ref().ok_or(ContractError::NoLicense)?;
        if !license_accepted {
            return Err(ContractError::LicenseNotAccepted);
        }
        if !license.permits(&purpose) {
            return Err(ContractError::PurposeIncompatible);
        }
        // Expired, revoked or deleted entries are replaced by a fresh subscription.
        if self.check_access(&ctx.sender, ctx.now).is_ok() {
            return Err(ContractError::AlreadySubscribed);
        }
        let token = AccessToken {
            token_id: self.next_token_id,
            owner: ctx.sender,
            contract: self.address,
            issued_at: ctx.now,
            expires_at: ctx.now + self.token_period,
            state: TokenState::Active,
        };
        self.next_token_id += 1;
        self.events.push(event(
            EventKind::RequesterAdded,
            ctx,
            payload! {
                "purpose" => &purpose,
                "tokenId" => token.token_id,
                "expiresAt" => token.expires_at.millis(),
                "version" => self.version,
            },
        ));
        self.requesters.insert(
            ctx.sender,
            RequesterEntry {
                purpose,
                token,
                confirmed_version: self.version,
                last_renewal_at: ctx.now,
            },
        );
        Ok(token)
    }

    pub(crate) fn get_link(&mut self, registry: &UserRegistry, ctx: &ExecContext) -> Result<String, ContractError> {
        registry.require(&ctx.sender)?;
        let token_id = self.check_access(&ctx.sender, ctx.now)?.token.token_id;
        self.events.push(event(EventKind::LinkServed, ctx, payload! { "tokenId" => token_id }));
        Ok(self.link.clone())
    }

    /// The compliance checkpoint: renews only if every update was confirmed.
    pub(crate) fn renew_token(
        &mut self,
        registry: &UserRegistry,
        ctx: &ExecContext,
    ) -> Result<(AccessToken, bool), ContractError> {
        registry.require(&ctx.sender)?;
        self.check_access(&ctx.sender, ctx.now)?;
        let version = self.version;
        let period = self.token_period;
        let enforce = self.enforce_update_confirmation;
        let entry = self.requesters.get_mut(&ctx.sender).expect("checked above");
        if entry.confirmed_version == version || !enforce {
            entry.token.expires_at = ctx.now + period;
            entry.last_renewal_at = ctx.now;
            let token = entry.token;
            self.events.push(event(
                EventKind::TokenRenewed,
                ctx,
                payload! { "tokenId" => token.token_id, "expiresAt" => token.expires_at.millis() },
            ));
            Ok((token, true))
        } else {
            entry.token.state = TokenState::Revoked;
            let token = entry.token;
            let confirmed = entry.confirmed_version;
            self.events.push(event(
                EventKind::TokenRevoked,
                ctx,
                payload! {
                    "tokenId" => token.token_id,
                    "confirmedVersion" => confirmed,
                    "version" => version,
                },
            ));
            Ok((token, false))
        }
    }

    pub(crate) fn update_data(
        &mut self,
        registry: &UserRegistry,
        ctx: &ExecContext,
        new_hash: Digest,
        kind: UpdateKind,
        anon_ids: Vec<String>,
    ) -> Result<u64, ContractError> {
        self.require_owner(registry, &ctx.sender)?;
        if new_hash == self.dataset_hash {
            return Err(ContractError::SameHash);
        }
        if new_hash.is_zero() {
            return Err(ContractError::ZeroHash);
        }
        let recipients: Vec<String> = self.active_requesters(ctx.now).map(|a| a.to_hex()).collect();
        self.version += 1;
        self.dataset_hash = new_hash;
        self.events.push(event(
            EventKind::UpdateRequested,
            ctx,
            payload! {
                "kind" => kind,
                "anonIds" => join_list(&anon_ids),
                "newVersion" => self.version,
                "newHash" => new_hash,
                "recipients" => join_list(&recipients),
            },
        ));
        Ok(self.version)
    }

    pub(crate) fn confirm_update(
        &mut self,
        registry: &UserRegistry,
        ctx: &ExecContext,
        version: u64,
    ) -> Result<(), ContractError> {
        registry.require(&ctx.sender)?;
        let current = self.version;
        let entry = self
            .requesters
            .get_mut(&ctx.sender)
            .filter(|e| e.token.state != TokenState::Deleted)
            .ok_or(ContractError::NoEntry)?;
        if version < current {
            return Err(ContractError::StaleVersion { given: version, current });
        }
        if version > current {
            return Err(ContractError::UnknownVersion { given: version, current });
        }
        entry.confirmed_version = version;
        self.events.push(event(EventKind::UpdateConfirmed, ctx, payload! { "version" => version }));
        Ok(())
    }

    pub(crate) fn unsubscribe(&mut self, registry: &UserRegistry, ctx: &ExecContext) -> Result<(), ContractError> {
        registry.require(&ctx.sender)?;
        let entry = self
            .requesters
            .get_mut(&ctx.sender)
            .filter(|e| e.token.state != TokenState::Deleted)
            .ok_or(ContractError::NoToken)?;
        entry.token.state = TokenState::Deleted;
        let token_id = entry.token.token_id;
        self.events.push(event(EventKind::Unsubscribed, ctx, payload! { "tokenId" => token_id }));
        Ok(())
    }
}

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::costmodel::action;
use crate::encoding::{Canonical, DecodeError};
use crate::ledger::Encode;
use crate::primitives::{Address, Digest, SimTime};

use super::{AccessToken, License, Role, UpdateKind};

/// A contract invocation carried by a transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Call {
    Register { role: Role, identity: String },
    Deploy { token_period: SimTime },
    PublishData { descriptor: String, link: String, hash: Digest },
    SetLicense(License),
    GetLicense,
    AddDataRequester { purpose: String, license_accepted: bool },
    GetLink,
    RenewToken,
    UpdateData { new_hash: Digest, kind: UpdateKind, anon_ids: Vec<String> },
    ConfirmUpdate { version: u64 },
    Unsubscribe,
    BaselineSet { key: Address, value: u64 },
}

/// Value returned by a successful call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Output {
    Registered,
    Deployed(Address),
    Ack,
    License(License),
    Token(AccessToken),
    Link(String),
    /// `renewed == false` means the token was revoked at this checkpoint.
    Renewal { token: AccessToken, renewed: bool },
    Version(u64),
}

impl Encode for Call {
    fn action(&self) -> &'static str {
        match self {
            Call::Register { .. } => action::REGISTER,
            Call::Deploy { .. } => action::DEPLOY,
            Call::PublishData { .. } => action::PUBLISH_DATA,
            Call::SetLicense(_) => action::SET_LICENSE,
            Call::GetLicense => action::GET_LICENSE,
            Call::AddDataRequester { .. } => action::ADD_DATA_REQUESTER,
            Call::GetLink => action::GET_LINK,
            Call::RenewToken => action::RENEW_TOKEN,
            Call::UpdateData { .. } => action::UPDATE_DATA,
            Call::ConfirmUpdate { .. } => action::CONFIRM_UPDATE,
            Call::Unsubscribe => action::UNSUBSCRIBE,
            Call::BaselineSet { .. } => action::BASELINE_SET,
        }
    }

    fn encode(&self) -> Vec<u8> {
        let c = Canonical::new();
        let c = match self {
            Call::Register { role, identity } => c.field("identity", identity).field("role", role),
            Call::Deploy { token_period } => c.field("tokenPeriodMs", token_period.millis()),
            Call::PublishData { descriptor, link, hash } => c
                .field("descriptor", descriptor)
                .field("hash", hash)
                .field("link", link),
            Call::SetLicense(l) => c
                .field("licenseType", &l.license_type)
                .list("purposes", &l.permitted_purposes)
                .field("terms", &l.terms),
            Call::GetLicense | Call::GetLink | Call::RenewToken | Call::Unsubscribe => c,
            Call::AddDataRequester { purpose, license_accepted } => c
                .field("licenseAccepted", license_accepted)
                .field("purpose", purpose),
            Call::UpdateData { new_hash, kind, anon_ids } => c
                .list("anonIds", anon_ids)
                .field("kind", kind)
                .field("newHash", new_hash),
            Call::ConfirmUpdate { version } => c.field("version", version),
            Call::BaselineSet { key, value } => c.field("key", key).field("value", value),
        };
        c.to_bytes()
    }
}

impl Call {
    pub fn decode(name: &str, payload: &[u8]) -> Result<Call, DecodeError> {
        let c = Canonical::parse(payload)?;
        let expect = |n: usize| {
            if c.len() == n {
                Ok(())
            } else {
                Err(DecodeError::InvalidValue("field count"))
            }
        };
        let call = match name {
            action::REGISTER => {
                expect(2)?;
                Call::Register { role: c.parse_field("role")?, identity: c.get("identity")?.to_string() }
            }
            action::DEPLOY => {
                expect(1)?;
                Call::Deploy { token_period: SimTime(c.parse_field("tokenPeriodMs")?) }
            }
            action::PUBLISH_DATA => {
                expect(3)?;
                Call::PublishData {
                    descriptor: c.get("descriptor")?.to_string(),
                    link: c.get("link")?.to_string(),
                    hash: c.parse_field("hash")?,
                }
            }
            action::SET_LICENSE => {
                expect(3)?;
                Call::SetLicense(License {
                    license_type: c.get("licenseType")?.to_string(),
                    terms: c.get("terms")?.to_string(),
                    permitted_purposes: c.get_list("purposes")?.into_iter().collect(),
                })
            }
            action::GET_LICENSE => {
                expect(0)?;
                Call::GetLicense
            }
            action::ADD_DATA_REQUESTER => {
                expect(2)?;
                Call::AddDataRequester {
                    purpose: c.get("purpose")?.to_string(),
                    license_accepted: c.parse_field("licenseAccepted")?,
                }
            }
            action::GET_LINK => {
                expect(0)?;
                Call::GetLink
            }
            action::RENEW_TOKEN => {
                expect(0)?;
                Call::RenewToken
            }
            action::UPDATE_DATA => {
                expect(3)?;
                Call::UpdateData {
                    new_hash: c.parse_field("newHash")?,
                    kind: c.parse_field("kind")?,
                    anon_ids: c.get_list("anonIds")?,
                }
            }
            action::CONFIRM_UPDATE => {
                expect(1)?;
                Call::ConfirmUpdate { version: c.parse_field("version")? }
            }
            action::UNSUBSCRIBE => {
                expect(0)?;
                Call::Unsubscribe
            }
            action::BASELINE_SET => {
                expect(2)?;
                Call::BaselineSet { key: c.parse_field("key")?, value: c.parse_field("value")? }
            }
            other => return Err(DecodeError::UnknownAction(other.to_string())),
        };
        Ok(call)
    }
}

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use super::{
    Call, ContractError, ContractEvent, DatasetContract, EventFilter, Output, Registration, Role,
    UserRegistry,
};
use crate::encoding::{Canonical, DecodeError};
use crate::ledger::{Block, ExecContext, StateMachine, TxStatus};
use crate::primitives::{Address, Digest};

/// All contract state on one ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct World {
    registry_address: Address,
    baseline_address: Address,
    registry: UserRegistry,
    datasets: BTreeMap<Address, DatasetContract>,
    baseline: BTreeMap<Address, u64>,
}

impl Default for World {
    fn default() -> Self {
        World {
            registry_address: Address::from_digest(&Canonical::new().field("system", "registry").digest()),
            baseline_address: Address::from_digest(&Canonical::new().field("system", "baseline").digest()),
            registry: UserRegistry::default(),
            datasets: BTreeMap::new(),
            baseline: BTreeMap::new(),
        }
    }
}

impl World {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn registry_address(&self) -> Address {
        self.registry_address
    }

    pub fn baseline_address(&self) -> Address {
        self.baseline_address
    }

    /// Address a deployment by `deployer` with transaction nonce `nonce` creates.
    pub fn contract_address(deployer: &Address, nonce: u64) -> Address {
        Address::from_digest(
            &Canonical::new().field("contract", deployer).field("nonce", nonce).digest(),
        )
    }

    pub fn registry(&self) -> &UserRegistry {
        &self.registry
    }

    pub fn dataset(&self, addr: &Address) -> Option<&DatasetContract> {
        self.datasets.get(addr)
    }

    /// Bypasses transactions. Only for constructing test scenarios.
    pub fn dataset_mut(&mut self, addr: &Address) -> Option<&mut DatasetContract> {
        self.datasets.get_mut(addr)
    }

    pub fn datasets(&self) -> impl Iterator<Item = &DatasetContract> {
        self.datasets.values()
    }

    pub fn resolve(&self, caller: &Address, target: &Address) -> Result<&Registration, ContractError> {
        self.registry.resolve(caller, target)
    }

    pub fn events(
        &self,
        contract: &Address,
        caller: &Address,
        filter: &EventFilter,
    ) -> Result<Vec<ContractEvent>, ContractError> {
        self.registry.require(caller)?;
        self.datasets
            .get(contract)
            .ok_or(ContractError::UnknownContract)?
            .events(&self.registry, caller, filter)
    }

    pub fn baseline_get(&self, caller: &Address, key: &Address) -> Result<Option<u64>, ContractError> {
        self.registry.require(caller)?;
        Ok(self.baseline.get(key).copied())
    }

    fn dataset_for(&mut self, target: &Address) -> Result<&mut DatasetContract, ContractError> {
        self.datasets.get_mut(target).ok_or(ContractError::UnknownContract)
    }
}

impl StateMachine for World {
    type Call = Call;
    type Output = Output;
    type Error = ContractError;

    fn decode(action: &str, payload: &[u8]) -> Result<Call, DecodeError> {
        Call::decode(action, payload)
    }

    fn execute(&mut self, ctx: &ExecContext, call: Call) -> Result<Output, ContractError> {
        if let Call::Register { role, identity } = call {
            if ctx.target != self.registry_address {
                return Err(ContractError::UnknownContract);
            }
            self.registry.register(ctx.sender, role, identity)?;
            return Ok(Output::Registered);
        }
        self.registry.require(&ctx.sender)?;

        match call {
            Call::Register { .. } => unreachable!("handled above"),
            Call::Deploy { token_period } => {
                self.registry.require_role(&ctx.sender, Role::DataProvider)?;
                let addr = World::contract_address(&ctx.sender, ctx.nonce);
                self.datasets.insert(addr, DatasetContract::new(addr, ctx.sender, token_period));
                Ok(Output::Deployed(addr))
            }
            Call::BaselineSet { key, value } => {
                if ctx.target != self.baseline_address {
                    return Err(ContractError::UnknownContract);
                }
                self.baseline.insert(key, value);
                Ok(Output::Ack)
            }
            call => {
                // Dataset calls borrow the registry alongside one contract.
                let registry = core::mem::take(&mut self.registry);
                let result = self.dataset_call(&registry, ctx, call);
                self.registry = registry;
                result
            }
        }
    }
}

impl World {
    fn dataset_call(&mut self, registry: &UserRegistry, ctx: &ExecContext, call: Call) -> Result<Output, ContractError> {
        let c = self.dataset_for(&ctx.target)?;
        match call {
            Call::PublishData { descriptor, link, hash } => {
                c.publish_data(registry, ctx, descriptor, link, hash).map(|_| Output::Ack)
            }
            Call::SetLicense(license) => c.set_license(registry, ctx, license).map(|_| Output::Ack),
            Call::GetLicense => c.get_license(registry, &ctx.sender).map(Output::License),
            Call::AddDataRequester { purpose, license_accepted } => c
                .add_data_requester(registry, ctx, purpose, license_accepted)
                .map(Output::Token),
            Call::GetLink => c.get_link(registry, ctx).map(Output::Link),
            Call::RenewToken => c
                .renew_token(registry, ctx)
                .map(|(token, renewed)| Output::Renewal { token, renewed }),
            Call::UpdateData { new_hash, kind, anon_ids } => c
                .update_data(registry, ctx, new_hash, kind, anon_ids)
                .map(Output::Version),
            Call::ConfirmUpdate { version } => c.confirm_update(registry, ctx, version).map(|_| Output::Ack),
            Call::Unsubscribe => c.unsubscribe(registry, ctx).map(|_| Output::Ack),
            Call::Register { .. } | Call::Deploy { .. } | Call::BaselineSet { .. } => {
                unreachable!("not a dataset call")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("block {block}, tx {tx}: {source}")]
    Malformed { block: u64, tx: Digest, source: DecodeError },
    #[error("block {block}, tx {tx}: recorded {recorded} but replay gives {replayed}")]
    StatusMismatch { block: u64, tx: Digest, recorded: TxStatus, replayed: TxStatus },
}

/// Rebuilds contract state by re-executing every transaction in order, and
/// checks each recorded status against the re-execution.
pub fn replay(blocks: &[Block]) -> Result<World, ReplayError> {
    let mut world = World::new();
    for b in blocks {
        for tx in &b.txs {
            let call = Call::decode(&tx.action, &tx.payload).map_err(|source| ReplayError::Malformed {
                block: b.index,
                tx: tx.tx_id,
                source,
            })?;
            let ctx = ExecContext {
                tx_id: tx.tx_id,
                sender: tx.sender,
                target: tx.target,
                nonce: tx.nonce,
                now: b.mined_at,
                block_index: b.index,
            };
            let replayed = match world.execute(&ctx, call) {
                Ok(_) => TxStatus::Mined,
                Err(_) => TxStatus::Rejected,
            };
            if replayed != tx.status {
                return Err(ReplayError::StatusMismatch {
                    block: b.index,
                    tx: tx.tx_id,
                    recorded: tx.status,
                    replayed,
                });
            }
        }
    }
    Ok(world)
}

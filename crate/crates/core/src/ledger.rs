//! Simulated append-only chain.
//!
//! Transactions enter a FIFO mempool and are executed against a
//! [`StateMachine`] when a block is mined. Mining advances a simulated clock by
//! a seeded latency; nothing here reads the wall clock.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::costmodel::{CostError, GasSchedule};
use crate::encoding::{Canonical, DecodeError};
use crate::primitives::{Address, Digest, SimTime};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("unknown sender {0}")]
    UnknownSender(Address),
    #[error("malformed action: {0}")]
    MalformedAction(DecodeError),
    #[error("no gas schedule entry: {0}")]
    UnscheduledAction(CostError),
    #[error("mempool is empty")]
    EmptyMempool,
    #[error("unknown transaction {0}")]
    UnknownTx(Digest),
    #[error("invalid mining configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TxStatus {
    Pending,
    Mined,
    Rejected,
}

impl fmt::Display for TxStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TxStatus::Pending => "pending",
            TxStatus::Mined => "mined",
            TxStatus::Rejected => "rejected",
        })
    }
}

fn payload_hex<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&hex::encode(bytes))
}

fn payload_from_hex<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
    let s = String::deserialize(d)?;
    hex::decode(s).map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub tx_id: Digest,
    pub sender: Address,
    pub target: Address,
    pub action: String,
    #[serde(serialize_with = "payload_hex", deserialize_with = "payload_from_hex")]
    pub payload: Vec<u8>,
    pub nonce: u64,
    pub gas_used: u64,
    pub submitted_at: SimTime,
    pub status: TxStatus,
}

impl Transaction {
    pub fn compute_id(
        sender: &Address,
        target: &Address,
        action: &str,
        payload: &[u8],
        nonce: u64,
    ) -> Digest {
        Canonical::new()
            .field("action", action)
            .field("nonce", nonce)
            .field("payload", hex::encode(payload))
            .field("sender", sender)
            .field("target", target)
            .digest()
    }

    pub fn recompute_id(&self) -> Digest {
        Self::compute_id(&self.sender, &self.target, &self.action, &self.payload, self.nonce)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub index: u64,
    pub prev_hash: Digest,
    pub txs: Vec<Transaction>,
    pub mined_at: SimTime,
    pub block_hash: Digest,
}

impl Block {
    /// Hash over index, predecessor, transaction ids, mining time, and each
    /// transaction's execution record (status, gas, submission time).
    pub fn compute_hash(&self) -> Digest {
        let receipts = self
            .txs
            .iter()
            .map(|t| format!("{}:{}:{}", t.status, t.gas_used, t.submitted_at.millis()));
        Canonical::new()
            .field("index", self.index)
            .field("minedAt", self.mined_at.millis())
            .field("prevHash", self.prev_hash)
            .list("receipts", receipts)
            .list("txs", self.txs.iter().map(|t| t.tx_id.to_hex()))
            .digest()
    }

    fn genesis() -> Block {
        let mut b = Block {
            index: 0,
            prev_hash: Digest::ZERO,
            txs: Vec::new(),
            mined_at: SimTime::ZERO,
            block_hash: Digest::ZERO,
        };
        b.block_hash = b.compute_hash();
        b
    }
}

/// True iff every hash, link, id and ordering constraint holds.
pub fn verify_blocks(blocks: &[Block]) -> bool {
    let Some(first) = blocks.first() else {
        return false;
    };
    if first.index != 0 || !first.prev_hash.is_zero() {
        return false;
    }
    let mut prev: Option<&Block> = None;
    for (i, b) in blocks.iter().enumerate() {
        if b.index != i as u64 || b.compute_hash() != b.block_hash {
            return false;
        }
        if let Some(p) = prev {
            if b.prev_hash != p.block_hash || b.mined_at <= p.mined_at {
                return false;
            }
        }
        for tx in &b.txs {
            let status_ok = match tx.status {
                TxStatus::Mined => tx.gas_used > 0,
                TxStatus::Rejected => tx.gas_used == 0,
                TxStatus::Pending => false,
            };
            if !status_ok || tx.recompute_id() != tx.tx_id || tx.submitted_at > b.mined_at {
                return false;
            }
        }
        prev = Some(b);
    }
    true
}

fn default_threads() -> u32 {
    1
}
fn default_low() -> f64 {
    10.0
}
fn default_high() -> f64 {
    20.0
}
fn default_cap() -> u32 {
    16
}
fn default_penalty() -> f64 {
    0.05
}
fn default_capacity() -> usize {
    200
}
fn default_exec() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    #[serde(default = "default_threads")]
    pub threads: u32,
    #[serde(default = "default_low")]
    pub latency_low_s: f64,
    #[serde(default = "default_high")]
    pub latency_high_s: f64,
    #[serde(default = "default_cap")]
    pub contention_cap: u32,
    #[serde(default = "default_penalty")]
    pub contention_penalty: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_capacity")]
    pub block_capacity: usize,
    /// Simulated seconds of contract execution per unit of execution gas,
    /// added to a block's latency. Zero leaves latency purely mining-bound.
    #[serde(default = "default_exec")]
    pub exec_seconds_per_gas: f64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            threads: default_threads(),
            latency_low_s: default_low(),
            latency_high_s: default_high(),
            contention_cap: default_cap(),
            contention_penalty: default_penalty(),
            seed: 0,
            block_capacity: default_capacity(),
            exec_seconds_per_gas: default_exec(),
        }
    }
}

impl MiningConfig {
    pub fn with_threads(mut self, threads: u32) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Linear up to the contention cap, then penalised per extra thread.
    pub fn speedup(&self, threads: u32) -> f64 {
        let effective = threads.min(self.contention_cap) as f64;
        let excess = threads.saturating_sub(self.contention_cap) as f64;
        effective - self.contention_penalty * excess * effective
    }

    pub fn validate(&self) -> Result<(), LedgerError> {
        if self.threads == 0 {
            return Err(LedgerError::InvalidConfig("threads must be positive"));
        }
        if self.contention_cap == 0 {
            return Err(LedgerError::InvalidConfig("contention_cap must be positive"));
        }
        if !(self.latency_low_s >= 0.0 && self.latency_low_s <= self.latency_high_s) {
            return Err(LedgerError::InvalidConfig("need 0 <= latency_low_s <= latency_high_s"));
        }
        if !self.latency_high_s.is_finite() {
            return Err(LedgerError::InvalidConfig("latency_high_s must be finite"));
        }
        if !(self.contention_penalty >= 0.0) {
            return Err(LedgerError::InvalidConfig("contention_penalty must be >= 0"));
        }
        if !(self.exec_seconds_per_gas >= 0.0 && self.exec_seconds_per_gas.is_finite()) {
            return Err(LedgerError::InvalidConfig("exec_seconds_per_gas must be >= 0"));
        }
        if self.block_capacity == 0 {
            return Err(LedgerError::InvalidConfig("block_capacity must be positive"));
        }
        if !(self.speedup(self.threads) > 0.0) {
            return Err(LedgerError::InvalidConfig("contention penalty drives speedup to zero"));
        }
        Ok(())
    }

    /// Uniform mining draw for a block, in seconds, before the thread speedup.
    ///
    /// The draw depends only on the seed and the block index, so two ledgers
    /// with the same seed see the same draw at the same height.
    pub fn mining_draw(&self, block_index: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(block_index);
        if self.latency_low_s == self.latency_high_s {
            return self.latency_low_s;
        }
        rng.random_range(self.latency_low_s..=self.latency_high_s)
    }

    /// Block latency in simulated time; at least one millisecond.
    pub fn block_latency(&self, block_index: u64, execution_gas: u64) -> SimTime {
        let secs = self.mining_draw(block_index) / self.speedup(self.threads)
            + execution_gas as f64 * self.exec_seconds_per_gas;
        let ms = (secs * 1000.0 + 0.5) as u64;
        SimTime(ms.max(1))
    }
}

/// Context handed to the state machine for one transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecContext {
    pub tx_id: Digest,
    pub sender: Address,
    pub target: Address,
    pub nonce: u64,
    pub now: SimTime,
    pub block_index: u64,
}

/// Contract logic executed at mining time.
pub trait StateMachine {
    type Call;
    type Output: Clone + fmt::Debug;
    type Error: Clone + fmt::Debug + fmt::Display;

    fn decode(action: &str, payload: &[u8]) -> Result<Self::Call, DecodeError>;

    fn execute(&mut self, ctx: &ExecContext, call: Self::Call) -> Result<Self::Output, Self::Error>;
}

/// A call that knows its action name and canonical payload.
pub trait Encode {
    fn action(&self) -> &'static str;
    fn encode(&self) -> Vec<u8>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Receipt {
    pub tx_id: Digest,
    pub status: TxStatus,
    pub block_index: Option<u64>,
    pub gas_used: u64,
}

#[derive(Debug, Clone)]
struct TxRecord<O, E> {
    status: TxStatus,
    block: Option<u64>,
    gas_used: u64,
    outcome: Option<Result<O, E>>,
}

pub struct Ledger<M: StateMachine> {
    blocks: Vec<Block>,
    mempool: VecDeque<Transaction>,
    accounts: BTreeSet<Address>,
    nonces: BTreeMap<Address, u64>,
    records: BTreeMap<Digest, TxRecord<M::Output, M::Error>>,
    clock: SimTime,
    config: MiningConfig,
    schedule: GasSchedule,
    machine: M,
    submissions: u64,
}

impl<M> Clone for Ledger<M>
where
    M: StateMachine + Clone,
    M::Output: Clone,
    M::Error: Clone,
{
    fn clone(&self) -> Self {
        Ledger {
            blocks: self.blocks.clone(),
            mempool: self.mempool.clone(),
            accounts: self.accounts.clone(),
            nonces: self.nonces.clone(),
            records: self.records.clone(),
            clock: self.clock,
            config: self.config.clone(),
            schedule: self.schedule.clone(),
            machine: self.machine.clone(),
            submissions: self.submissions,
        }
    }
}

impl<M: StateMachine> Ledger<M> {
    pub fn new(config: MiningConfig, schedule: GasSchedule, machine: M) -> Result<Self, LedgerError> {
        config.validate()?;
        Ok(Ledger {
            blocks: alloc::vec![Block::genesis()],
            mempool: VecDeque::new(),
            accounts: BTreeSet::new(),
            nonces: BTreeMap::new(),
            records: BTreeMap::new(),
            clock: SimTime::ZERO,
            config,
            schedule,
            machine,
            submissions: 0,
        })
    }

    /// Creates an externally owned account with a deterministic address.
    pub fn create_account(&mut self) -> Address {
        let n = self.accounts.len() as u64;
        let addr = Address::from_digest(&Canonical::new().field("account", n).digest());
        self.accounts.insert(addr);
        addr
    }

    pub fn is_account(&self, addr: &Address) -> bool {
        self.accounts.contains(addr)
    }

    pub fn next_nonce(&self, sender: &Address) -> u64 {
        self.nonces.get(sender).copied().unwrap_or(0)
    }

    pub fn submit(
        &mut self,
        sender: Address,
        target: Address,
        action: &str,
        payload: Vec<u8>,
    ) -> Result<Receipt, LedgerError> {
        if !self.accounts.contains(&sender) {
            return Err(LedgerError::UnknownSender(sender));
        }
        self.schedule.gas_for(action).map_err(LedgerError::UnscheduledAction)?;
        M::decode(action, &payload).map_err(LedgerError::MalformedAction)?;

        let nonce = self.next_nonce(&sender);
        self.nonces.insert(sender, nonce + 1);
        let tx_id = Transaction::compute_id(&sender, &target, action, &payload, nonce);
        self.mempool.push_back(Transaction {
            tx_id,
            sender,
            target,
            action: action.to_string(),
            payload,
            nonce,
            gas_used: 0,
            submitted_at: self.clock,
            status: TxStatus::Pending,
        });
        self.records.insert(
            tx_id,
            TxRecord { status: TxStatus::Pending, block: None, gas_used: 0, outcome: None },
        );
        self.submissions += 1;
        Ok(Receipt { tx_id, status: TxStatus::Pending, block_index: None, gas_used: 0 })
    }

    pub fn submit_call<C: Encode>(
        &mut self,
        sender: Address,
        target: Address,
        call: &C,
    ) -> Result<Receipt, LedgerError> {
        self.submit(sender, target, call.action(), call.encode())
    }

    /// Mines up to `block_capacity` pending transactions into one block.
    pub fn mine_next(&mut self) -> Result<&Block, LedgerError> {
        if self.mempool.is_empty() {
            return Err(LedgerError::EmptyMempool);
        }
        let take = self.mempool.len().min(self.config.block_capacity);
        let mut txs: Vec<Transaction> = self.mempool.drain(..take).collect();
        let index = self.blocks.len() as u64;
        let prev_hash = self.blocks[self.blocks.len() - 1].block_hash;

        // Latency depends on the work in the block, which is known from the
        // schedule before execution.
        let exec_gas: u64 = txs
            .iter()
            .map(|t| self.schedule.gas_for(&t.action).map(|g| g.execution).unwrap_or(0))
            .sum();
        let mined_at = self.clock + self.config.block_latency(index, exec_gas);
        self.clock = mined_at;

        for tx in &mut txs {
            let ctx = ExecContext {
                tx_id: tx.tx_id,
                sender: tx.sender,
                target: tx.target,
                nonce: tx.nonce,
                now: mined_at,
                block_index: index,
            };
            // decode cannot fail here: submit already checked it
            let outcome = match M::decode(&tx.action, &tx.payload) {
                Ok(call) => self.machine.execute(&ctx, call),
                Err(e) => panic!("payload accepted at submit no longer decodes: {e}"),
            };
            let (status, gas) = match &outcome {
                Ok(_) => (
                    TxStatus::Mined,
                    self.schedule.gas_for(&tx.action).map(|g| g.transaction).unwrap_or(0),
                ),
                Err(_) => (TxStatus::Rejected, 0),
            };
            tx.status = status;
            tx.gas_used = gas;
            let rec = self.records.get_mut(&tx.tx_id).expect("record created at submit");
            rec.status = status;
            rec.block = Some(index);
            rec.gas_used = gas;
            rec.outcome = Some(outcome);
        }

        let mut block = Block { index, prev_hash, txs, mined_at, block_hash: Digest::ZERO };
        block.block_hash = block.compute_hash();
        self.blocks.push(block);
        Ok(&self.blocks[self.blocks.len() - 1])
    }

    /// Mines until the mempool is empty; returns the number of blocks mined.
    pub fn mine_all(&mut self) -> usize {
        let mut n = 0;
        while self.mine_next().is_ok() {
            n += 1;
        }
        n
    }

    pub fn verify_chain(&self) -> bool {
        verify_blocks(&self.blocks)
    }

    pub fn receipt_of(&self, tx_id: &Digest) -> Result<Receipt, LedgerError> {
        let rec = self.records.get(tx_id).ok_or(LedgerError::UnknownTx(*tx_id))?;
        Ok(Receipt {
            tx_id: *tx_id,
            status: rec.status,
            block_index: rec.block,
            gas_used: rec.gas_used,
        })
    }

    /// Execution result of a mined or rejected transaction.
    pub fn outcome(&self, tx_id: &Digest) -> Option<&Result<M::Output, M::Error>> {
        self.records.get(tx_id)?.outcome.as_ref()
    }

    pub fn now(&self) -> SimTime {
        self.clock
    }

    /// Moves the clock forward; never backwards.
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.clock {
            self.clock = t;
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn head(&self) -> &Block {
        &self.blocks[self.blocks.len() - 1]
    }

    pub fn mempool_len(&self) -> usize {
        self.mempool.len()
    }

    pub fn pending(&self) -> impl Iterator<Item = &Transaction> {
        self.mempool.iter()
    }

    pub fn submissions(&self) -> u64 {
        self.submissions
    }

    /// Sum of gas over all mined transactions in the chain.
    pub fn total_gas(&self) -> u64 {
        self.blocks
            .iter()
            .flat_map(|b| b.txs.iter())
            .filter(|t| t.status == TxStatus::Mined)
            .map(|t| t.gas_used)
            .sum()
    }

    pub fn config(&self) -> &MiningConfig {
        &self.config
    }

    pub fn schedule(&self) -> &GasSchedule {
        &self.schedule
    }

    pub fn machine(&self) -> &M {
        &self.machine
    }

    /// Direct access to contract state, bypassing transactions. For test hooks.
    pub fn machine_mut(&mut self) -> &mut M {
        &mut self.machine
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Counter machine: `inc` adds `by`, `fail` always errors.
    #[derive(Default)]
    struct Counter {
        value: u64,
    }

    enum CounterCall {
        Inc(u64),
        Fail,
    }

    impl StateMachine for Counter {
        type Call = CounterCall;
        type Output = u64;
        type Error = String;

        fn decode(action: &str, payload: &[u8]) -> Result<CounterCall, DecodeError> {
            let c = Canonical::parse(payload)?;
            match action {
                "inc" => Ok(CounterCall::Inc(c.parse_field("by")?)),
                "fail" => Ok(CounterCall::Fail),
                other => Err(DecodeError::UnknownAction(other.to_string())),
            }
        }

        fn execute(&mut self, _ctx: &ExecContext, call: CounterCall) -> Result<u64, String> {
            match call {
                CounterCall::Inc(by) => {
                    self.value += by;
                    Ok(self.value)
                }
                CounterCall::Fail => Err("nope".to_string()),
            }
        }
    }

    fn schedule() -> GasSchedule {
        use crate::costmodel::GasEntry;
        GasSchedule::empty()
            .with_entry("inc", GasEntry { transaction: 21_000, execution: 0, extrapolated: false })
            .with_entry("fail", GasEntry { transaction: 30_000, execution: 9_000, extrapolated: false })
    }

    fn ledger(cfg: MiningConfig) -> Ledger<Counter> {
        Ledger::new(cfg, schedule(), Counter::default()).unwrap()
    }

    fn inc(by: u64) -> Vec<u8> {
        Canonical::new().field("by", by).to_bytes()
    }

    #[test]
    fn submit_pends_and_keeps_clock() {
        let mut l = ledger(MiningConfig::default());
        let a = l.create_account();
        let r = l.submit(a, Address::ZERO, "inc", inc(1)).unwrap();
        assert_eq!(r.status, TxStatus::Pending);
        assert_eq!(l.now(), SimTime::ZERO);
        assert_eq!(l.receipt_of(&r.tx_id).unwrap(), Receipt {
            tx_id: r.tx_id,
            status: TxStatus::Pending,
            block_index: None,
            gas_used: 0,
        });
    }

    #[test]
    fn submit_rejects_unknown_sender_and_bad_payloads() {
        let mut l = ledger(MiningConfig::default());
        let a = l.create_account();
        let stranger = Address([7; 20]);
        assert_eq!(
            l.submit(stranger, Address::ZERO, "inc", inc(1)),
            Err(LedgerError::UnknownSender(stranger))
        );
        assert!(matches!(
            l.submit(a, Address::ZERO, "inc", b"by=x".to_vec()),
            Err(LedgerError::MalformedAction(_))
        ));
        assert!(matches!(
            l.submit(a, Address::ZERO, "dec", inc(1)),
            Err(LedgerError::UnscheduledAction(_))
        ));
        assert_eq!(l.mempool_len(), 0);
    }

    #[test]
    fn mempool_preserves_order_at_scale() {
        let mut l = ledger(MiningConfig::default());
        let a = l.create_account();
        let ids: Vec<Digest> = (0..5000)
            .map(|i| l.submit(a, Address::ZERO, "inc", inc(i)).unwrap().tx_id)
            .collect();
        assert_eq!(l.mempool_len(), 5000);
        let pending: Vec<Digest> = l.pending().map(|t| t.tx_id).collect();
        assert_eq!(pending, ids);
        l.mine_all();
        let mined: Vec<Digest> =
            l.blocks().iter().flat_map(|b| b.txs.iter().map(|t| t.tx_id)).collect();
        assert_eq!(mined, ids);
        assert_eq!(l.blocks().len(), 1 + 5000 / 200);
    }

    #[test]
    fn empty_mempool_errors() {
        let mut l = ledger(MiningConfig::default());
        assert_eq!(l.mine_next().unwrap_err(), LedgerError::EmptyMempool);
    }

    #[test]
    fn single_thread_latency_within_bounds() {
        let mut l = ledger(MiningConfig::default().with_seed(42));
        let a = l.create_account();
        l.submit(a, Address::ZERO, "inc", inc(1)).unwrap();
        let at = l.mine_next().unwrap().mined_at;
        assert!(at >= SimTime::from_secs(10) && at <= SimTime::from_secs(20), "{at}");
    }

    #[test]
    fn more_threads_mine_faster_on_same_stream() {
        let one = MiningConfig::default().with_seed(42);
        let sixteen = one.clone().with_threads(16);
        assert_eq!(one.speedup(1), 1.0);
        assert_eq!(one.speedup(16), 16.0);
        for idx in 1..50 {
            assert!(sixteen.block_latency(idx, 0) < one.block_latency(idx, 0));
        }
    }

    #[test]
    fn speedup_penalised_past_cap() {
        let c = MiningConfig::default();
        assert!((c.speedup(32) - 3.2).abs() < 1e-12);
        assert!(c.speedup(32) < c.speedup(16));
        let broken = MiningConfig::default().with_threads(36);
        assert!(matches!(broken.validate(), Err(LedgerError::InvalidConfig(_))));
    }

    #[test]
    fn receipts_track_outcomes() {
        let mut l = ledger(MiningConfig::default());
        let a = l.create_account();
        let ok = l.submit(a, Address::ZERO, "inc", inc(3)).unwrap().tx_id;
        let bad = l.submit(a, Address::ZERO, "fail", Vec::new()).unwrap().tx_id;
        l.mine_next().unwrap();
        let r = l.receipt_of(&ok).unwrap();
        assert_eq!((r.status, r.block_index, r.gas_used), (TxStatus::Mined, Some(1), 21_000));
        let r = l.receipt_of(&bad).unwrap();
        assert_eq!((r.status, r.gas_used), (TxStatus::Rejected, 0));
        assert_eq!(l.outcome(&ok), Some(&Ok(3)));
        assert_eq!(
            l.receipt_of(&Digest([9; 32])),
            Err(LedgerError::UnknownTx(Digest([9; 32])))
        );
        assert_eq!(l.total_gas(), 21_000);
    }

    #[test]
    fn genesis_only_chain_verifies() {
        let l = ledger(MiningConfig::default());
        assert!(l.verify_chain());
        assert!(!verify_blocks(&[]));
    }

    #[test]
    fn tampered_payload_is_detected() {
        let mut l = ledger(MiningConfig::default());
        let a = l.create_account();
        for i in 0..3 {
            l.submit(a, Address::ZERO, "inc", inc(i)).unwrap();
            l.mine_next().unwrap();
        }
        assert!(l.verify_chain());
        let mut blocks = l.blocks().to_vec();
        blocks[2].txs[0].payload[0] ^= 0x01;
        assert!(!verify_blocks(&blocks));

        let mut blocks = l.blocks().to_vec();
        blocks[1].txs[0].gas_used += 1;
        assert!(!verify_blocks(&blocks));
    }

    #[test]
    fn same_seed_same_chain() {
        let run = || {
            let mut l = ledger(MiningConfig::default().with_seed(7));
            let a = l.create_account();
            for i in 0..10 {
                l.submit(a, Address::ZERO, "inc", inc(i)).unwrap();
                if i % 3 == 0 {
                    l.mine_next().unwrap();
                }
            }
            l.mine_all();
            l.blocks().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn execution_gas_lengthens_blocks() {
        let cfg = MiningConfig { exec_seconds_per_gas: 1e-3, ..MiningConfig::default() };
        let with = cfg.block_latency(3, 9_000).millis();
        let without = cfg.block_latency(3, 0).millis();
        assert!(with.abs_diff(without + 9_000) <= 1);
    }

    #[test]
    fn clock_is_monotone() {
        let mut l = ledger(MiningConfig::default());
        l.advance_to(SimTime::from_secs(100));
        l.advance_to(SimTime::from_secs(50));
        assert_eq!(l.now(), SimTime::from_secs(100));
    }
}

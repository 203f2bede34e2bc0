//! Scenario runner for the scaling experiments and the end-to-end demo.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Descriptor;
use crate::contracts::{Call, EventKind, License, Role, World};
use crate::costmodel::GasSchedule;
use crate::datastore::RecordSet;
use crate::encoding::Canonical;
use crate::ledger::{Ledger, MiningConfig, TxStatus};
use crate::primitives::{Address, SimTime};
use crate::protocol::{Behavior, Platform, ProtocolConfig, ProtocolError, UpdateConfirmation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// n requesters acquire one dataset, waiting for every block.
    SameDataset,
    /// n requesters each acquire a different dataset, waiting for every block.
    ManyDatasets,
    /// n requesters submit all calls at once without waiting.
    SubmitOnly,
    /// The same-dataset run at fixed n over a range of mining thread counts.
    ThreadSweep,
    /// Sharing, access, one erase flow and an audit.
    Demo,
}

impl Experiment {
    pub fn label(self) -> &'static str {
        match self {
            Experiment::SameDataset => "same_dataset",
            Experiment::ManyDatasets => "many_datasets",
            Experiment::SubmitOnly => "submit_only",
            Experiment::ThreadSweep => "thread_sweep",
            Experiment::Demo => "demo",
        }
    }

    fn default_params(self) -> Vec<u64> {
        match self {
            Experiment::SameDataset | Experiment::ManyDatasets => (1..=20).map(|i| i * 5).collect(),
            Experiment::SubmitOnly => vec![100, 500, 1000, 2000, 5000],
            Experiment::ThreadSweep => vec![100],
            Experiment::Demo => vec![0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Counts {
    pub providers: u32,
    pub requesters: u32,
    pub subjects: u32,
    pub datasets: u32,
}

impl Default for Counts {
    fn default() -> Self {
        Counts { providers: 1, requesters: 3, subjects: 10, datasets: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptAction {
    /// Subject `subject` asks the provider of dataset `dataset` to erase its record.
    Erase { subject: u32, dataset: u32 },
    /// Subject `subject` asks for the given fields of its record to be rectified.
    Rectify { subject: u32, dataset: u32, fields: BTreeMap<String, String> },
    /// Changes the behaviour of requester `requester` from then on.
    Misbehave {
        requester: u32,
        #[serde(default)]
        ignore_updates: bool,
        #[serde(default)]
        never_renew: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEvent {
    /// Simulated seconds since the start of the scenario.
    pub at_secs: u64,
    #[serde(flatten)]
    pub action: ScriptAction,
}

fn default_replications() -> u32 {
    4
}
fn default_threads() -> Vec<u32> {
    vec![1, 2, 4, 8, 16, 32]
}
fn default_token_period() -> u64 {
    crate::contracts::DEFAULT_TOKEN_PERIOD.millis()
}
fn default_renew_lead() -> u64 {
    SimTime::from_hours(1).millis()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    pub experiment: Experiment,
    #[serde(default)]
    pub counts: Counts,
    /// `mining.seed` is ignored; replication seeds derive from `seed`.
    #[serde(default)]
    pub mining: MiningConfig,
    #[serde(default = "default_token_period")]
    pub token_period_ms: u64,
    #[serde(default = "default_renew_lead")]
    pub renew_lead_ms: u64,
    #[serde(default = "default_replications")]
    pub replications: u32,
    /// Requester counts to sweep. Defaults depend on the experiment.
    #[serde(default)]
    pub params: Option<Vec<u64>>,
    /// Thread counts for the thread sweep.
    #[serde(default = "default_threads")]
    pub threads: Vec<u32>,
    #[serde(default)]
    pub event_script: Vec<ScriptEvent>,
}

impl ScenarioConfig {
    pub fn new(experiment: Experiment) -> Self {
        ScenarioConfig {
            seed: 0,
            experiment,
            counts: Counts::default(),
            mining: MiningConfig::default(),
            token_period_ms: default_token_period(),
            renew_lead_ms: default_renew_lead(),
            replications: default_replications(),
            params: None,
            threads: default_threads(),
            event_script: Vec::new(),
        }
    }

    pub fn params(&self) -> Vec<u64> {
        self.params.clone().unwrap_or_else(|| self.experiment.default_params())
    }

    fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig {
            token_period: SimTime::from_millis(self.token_period_ms),
            renew_lead: SimTime::from_millis(self.renew_lead_ms),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |m: &str| Err(HarnessError::InvalidConfig(m.to_string()));
        self.mining.validate().map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
        self.protocol().validate().map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
        if self.replications == 0 {
            return invalid("replications must be positive");
        }
        let params = self.params();
        match self.experiment {
            Experiment::SameDataset | Experiment::ManyDatasets | Experiment::ThreadSweep => {
                if params.is_empty() || params.contains(&0) {
                    return invalid("requester counts must be positive");
                }
            }
            Experiment::SubmitOnly => {
                if params.is_empty() {
                    return invalid("need at least one requester count");
                }
            }
            Experiment::Demo => {}
        }
        if self.experiment == Experiment::ThreadSweep {
            if params.len() != 1 {
                return invalid("the thread sweep takes exactly one requester count");
            }
            if self.threads.is_empty() {
                return invalid("thread sweep needs thread counts");
            }
            for &t in &self.threads {
                self.mining
                    .clone()
                    .with_threads(t)
                    .validate()
                    .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
            }
        }
        if self.experiment == Experiment::ManyDatasets && self.counts.providers == 0 {
            return invalid("many_datasets needs at least one provider");
        }
        if self.experiment == Experiment::Demo {
            let c = self.counts;
            if c.providers == 0 || c.requesters == 0 || c.subjects == 0 || c.datasets == 0 {
                return invalid("demo needs positive providers, requesters, subjects and datasets");
            }
            for e in &self.event_script {
                let ok = match &e.action {
                    ScriptAction::Erase { subject, dataset } | ScriptAction::Rectify { subject, dataset, .. } => {
                        *subject < c.subjects && *dataset < c.datasets && subject % c.datasets == *dataset
                    }
                    ScriptAction::Misbehave { requester, .. } => *requester < c.requesters,
                };
                if !ok {
                    return invalid("event script refers to a subject, dataset or requester that does not exist");
                }
            }
        } else if !self.event_script.is_empty() {
            return invalid("event_script is only used by the demo experiment");
        }
        if self.experiment != Experiment::Demo && self.counts.subjects == 0 {
            return invalid("datasets need at least one subject");
        }
        Ok(())
    }
}

/// One line of experiment output. Column order is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub experiment: String,
    pub param_value: u64,
    pub total_simulated_seconds: f64,
    pub total_submission_ops: u64,
    pub total_gas: u64,
    pub tokens_issued: u64,
    pub tokens_revoked: u64,
    pub chain_length: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Which contract the requests go to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Path {
    Luce,
    /// Every contract call replaced one-for-one by a key-value set.
    Baseline,
}

impl Path {
    fn suffix(self) -> &'static str {
        match self {
            Path::Luce => "",
            Path::Baseline => "_baseline",
        }
    }
}

/// Seed of replication `rep`. Independent of the parameter point, so every
/// point sees the same mining draws.
pub fn replication_seed(seed: u64, rep: u32) -> u64 {
    let d = Canonical::new().field("seed", seed).field("replication", rep).digest();
    u64::from_le_bytes(d.0[..8].try_into().expect("8 bytes"))
}

pub fn metrics_of(experiment: &str, param_value: u64, ledger: &Ledger<World>) -> MetricsRow {
    let world = ledger.machine();
    let count = |kind: EventKind| {
        world.datasets().map(|c| c.event_log().iter().filter(|e| e.kind == kind).count() as u64).sum()
    };
    MetricsRow {
        experiment: experiment.to_string(),
        param_value,
        total_simulated_seconds: ledger.now().as_secs_f64(),
        total_submission_ops: ledger.submissions(),
        total_gas: ledger.total_gas(),
        tokens_issued: count(EventKind::RequesterAdded),
        tokens_revoked: count(EventKind::TokenRevoked),
        chain_length: ledger.blocks().len() as u64,
    }
}

fn mean(rows: &[MetricsRow]) -> MetricsRow {
    let n = rows.len() as u64;
    let avg = |f: fn(&MetricsRow) -> u64| (rows.iter().map(f).sum::<u64>() + n / 2) / n;
    MetricsRow {
        experiment: rows[0].experiment.clone(),
        param_value: rows[0].param_value,
        total_simulated_seconds: rows.iter().map(|r| r.total_simulated_seconds).sum::<f64>() / n as f64,
        total_submission_ops: avg(|r| r.total_submission_ops),
        total_gas: avg(|r| r.total_gas),
        tokens_issued: avg(|r| r.tokens_issued),
        tokens_revoked: avg(|r| r.tokens_revoked),
        chain_length: avg(|r| r.chain_length),
    }
}

/// Deterministic synthetic records for subjects `ids`.
pub fn synthetic_records(ids: impl IntoIterator<Item = u32>) -> RecordSet {
    const DX: [&str; 6] = ["C18", "C34", "C50", "C61", "E11", "I21"];
    ids.into_iter().fold(RecordSet::new(), |rs, i| {
        let age = format!("{}", 20 + (i * 37) % 60);
        let sex = if i % 2 == 0 { "F" } else { "M" };
        rs.with_record(&anon_id(i), [("age", age.as_str()), ("sex", sex), ("dx", DX[i as usize % DX.len()])])
    })
}

pub fn anon_id(subject: u32) -> String {
    format!("anon-{subject:05}")
}

pub fn default_license() -> License {
    License::new("CC-BY-NC", "non-commercial research use only", ["research", "education"])
}

fn descriptor(i: u32) -> Descriptor {
    Descriptor {
        title: format!("Synthetic cohort {i}"),
        description: "De-identified clinical records".to_string(),
        keywords: vec!["clinical".to_string(), "synthetic".to_string()],
    }
}

pub fn dataset_id(i: u32) -> String {
    format!("dataset-{i:04}")
}

const PURPOSE: &str = "research";

struct Setup {
    platform: Platform,
    providers: Vec<Address>,
    requesters: Vec<Address>,
}

fn setup(cfg: &ScenarioConfig, seed: u64, threads: Option<u32>, providers: u32, requesters: u64) -> Result<Setup, HarnessError> {
    let mut mining = cfg.mining.clone().with_seed(seed);
    if let Some(t) = threads {
        mining = mining.with_threads(t);
    }
    let mut platform = Platform::new(mining, GasSchedule::default(), cfg.protocol())?;
    let mut users: Vec<(Role, String)> =
        (0..providers).map(|i| (Role::DataProvider, format!("provider-{i}"))).collect();
    users.extend((0..requesters).map(|i| (Role::DataRequester, format!("requester-{i}"))));
    let addrs = platform.register_many(&users)?;
    let (p, r) = addrs.split_at(providers as usize);
    Ok(Setup { platform, providers: p.to_vec(), requesters: r.to_vec() })
}

fn baseline_sets(p: &mut Platform, sender: Address, count: usize, counter: &mut u64) -> Result<(), HarnessError> {
    let target = p.world().baseline_address();
    let calls = (0..count)
        .map(|_| {
            *counter += 1;
            (sender, target, Call::BaselineSet { key: sender, value: *counter })
        })
        .collect();
    for r in p.transact_batch(calls)? {
        r.map_err(ProtocolError::from)?;
    }
    Ok(())
}

/// Shares `datasets` datasets, then has every requester acquire one, waiting
/// for each block. Block structure is identical for both paths.
fn mined_run(
    cfg: &ScenarioConfig,
    seed: u64,
    threads: Option<u32>,
    n: u64,
    many: bool,
    path: Path,
) -> Result<Platform, HarnessError> {
    let datasets = if many { n as u32 } else { 1 };
    let providers = if many { cfg.counts.providers } else { 1 };
    let Setup { mut platform, providers, requesters } = setup(cfg, seed, threads, providers, n)?;
    let mut counter = 0;
    for d in 0..datasets {
        let provider = providers[d as usize % providers.len()];
        match path {
            Path::Luce => {
                platform.share_dataset(
                    provider,
                    &dataset_id(d),
                    synthetic_records(0..cfg.counts.subjects),
                    descriptor(d),
                    default_license(),
                )?;
            }
            Path::Baseline => {
                baseline_sets(&mut platform, provider, 1, &mut counter)?;
                baseline_sets(&mut platform, provider, 2, &mut counter)?;
            }
        }
    }
    for (i, r) in requesters.iter().enumerate() {
        let d = if many { i as u32 } else { 0 };
        match path {
            Path::Luce => {
                platform.acquire(*r, &dataset_id(d), PURPOSE)?;
            }
            Path::Baseline => {
                baseline_sets(&mut platform, *r, 1, &mut counter)?;
                baseline_sets(&mut platform, *r, 2, &mut counter)?;
            }
        }
    }
    Ok(platform)
}

/// Request-phase figures of one submission-only run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitOnlyRun {
    pub requests: u64,
    /// Transactions submitted for the requests.
    pub request_ops: u64,
    pub request_gas: u64,
    /// Execution gas of the request transactions, the contract-side work.
    pub execution_work: u64,
}

/// One submission-only run: setup, then all request transactions submitted
/// at once and mined afterwards.
pub fn submit_only_run(cfg: &ScenarioConfig, seed: u64, n: u64, path: Path) -> Result<(Platform, SubmitOnlyRun), HarnessError> {
    let Setup { mut platform, providers, requesters } = setup(cfg, seed, None, 1, n)?;
    let provider = providers[0];
    let mut counter = 0;
    match path {
        Path::Luce => {
            platform.share_dataset(
                provider,
                &dataset_id(0),
                synthetic_records(0..cfg.counts.subjects),
                descriptor(0),
                default_license(),
            )?;
        }
        Path::Baseline => {
            baseline_sets(&mut platform, provider, 1, &mut counter)?;
            baseline_sets(&mut platform, provider, 2, &mut counter)?;
        }
    }
    let first_block = platform.ledger().blocks().len();
    let ops_before = platform.ledger().submissions();
    match path {
        Path::Luce => {
            let requests: Vec<_> =
                requesters.iter().map(|r| (*r, dataset_id(0), PURPOSE.to_string())).collect();
            for r in platform.acquire_unconfirmed(&requests)? {
                r?;
            }
        }
        Path::Baseline => {
            let target = platform.world().baseline_address();
            let calls = requesters
                .iter()
                .flat_map(|r| {
                    (0..3).map(move |k| (*r, target, Call::BaselineSet { key: *r, value: k }))
                })
                .collect();
            for r in platform.transact_batch(calls)? {
                r.map_err(ProtocolError::from)?;
            }
        }
    }
    let ledger = platform.ledger();
    let schedule = ledger.schedule();
    let mined = ledger.blocks()[first_block..]
        .iter()
        .flat_map(|b| b.txs.iter())
        .filter(|t| t.status == TxStatus::Mined);
    let (mut request_gas, mut execution_work) = (0, 0);
    for t in mined {
        request_gas += t.gas_used;
        execution_work += schedule.gas_for(&t.action).map(|g| g.execution).unwrap_or(0);
    }
    let run = SubmitOnlyRun {
        requests: n,
        request_ops: ledger.submissions() - ops_before,
        request_gas,
        execution_work,
    };
    Ok((platform, run))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoReport {
    pub updates: Vec<UpdateConfirmation>,
}

/// Everything a run produced: the metric rows plus the platform of the last
/// replication run.
pub struct RunOutput {
    pub rows: Vec<MetricsRow>,
    pub last: Platform,
    pub demo: Option<DemoReport>,
}

fn replicate<F>(cfg: &ScenarioConfig, mut f: F) -> Result<(MetricsRow, Platform), HarnessError>
where
    F: FnMut(u64) -> Result<(MetricsRow, Platform), HarnessError>,
{
    let mut rows = Vec::new();
    let mut last = None;
    for rep in 0..cfg.replications {
        let (row, p) = f(replication_seed(cfg.seed, rep))?;
        rows.push(row);
        last = Some(p);
    }
    Ok((mean(&rows), last.expect("replications is positive")))
}

pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut last = None;
    let mut demo = None;
    let label = cfg.experiment.label();
    match cfg.experiment {
        Experiment::SameDataset | Experiment::ManyDatasets => {
            let many = cfg.experiment == Experiment::ManyDatasets;
            for n in cfg.params() {
                for path in [Path::Luce, Path::Baseline] {
                    let name = format!("{label}{}", path.suffix());
                    let (row, p) = replicate(cfg, |seed| {
                        let p = mined_run(cfg, seed, None, n, many, path)?;
                        Ok((metrics_of(&name, n, p.ledger()), p))
                    })?;
                    rows.push(row);
                    last = Some(p);
                }
            }
        }
        Experiment::SubmitOnly => {
            for n in cfg.params() {
                for path in [Path::Luce, Path::Baseline] {
                    let name = format!("{label}{}", path.suffix());
                    let (row, p) = replicate(cfg, |seed| {
                        let (p, _) = submit_only_run(cfg, seed, n, path)?;
                        Ok((metrics_of(&name, n, p.ledger()), p))
                    })?;
                    rows.push(row);
                    last = Some(p);
                }
            }
        }
        Experiment::ThreadSweep => {
            let n = cfg.params()[0];
            for &t in &cfg.threads {
                let (row, p) = replicate(cfg, |seed| {
                    let p = mined_run(cfg, seed, Some(t), n, false, Path::Luce)?;
                    Ok((metrics_of(label, t as u64, p.ledger()), p))
                })?;
                rows.push(row);
                last = Some(p);
            }
        }
        Experiment::Demo => {
            let (p, report) = run_demo(cfg, cfg.seed)?;
            rows.push(metrics_of(label, 0, p.ledger()));
            last = Some(p);
            demo = Some(report);
        }
    }
    Ok(RunOutput { rows, last: last.expect("at least one run"), demo })
}

/// Demo: an authority, providers, requesters and subjects; datasets shared
/// and acquired; then the event script, and an audit for every dataset a
/// subject asked to update.
pub fn run_demo(cfg: &ScenarioConfig, seed: u64) -> Result<(Platform, DemoReport), HarnessError> {
    let c = cfg.counts;
    let Setup { mut platform, providers, requesters } = setup(cfg, seed, None, c.providers, c.requesters as u64)?;
    let authority = platform.register(Role::SupervisoryAuthority, "supervisory-authority")?;
    let subject_users: Vec<(Role, String)> =
        (0..c.subjects).map(|i| (Role::DataSubject, format!("subject-{i}"))).collect();
    let subjects = platform.register_many(&subject_users)?;

    let provider_of = |d: u32| providers[d as usize % providers.len()];
    for d in 0..c.datasets {
        let members: Vec<u32> = (0..c.subjects).filter(|s| s % c.datasets == d).collect();
        let provider = provider_of(d);
        platform.share_dataset(
            provider,
            &dataset_id(d),
            synthetic_records(members.iter().copied()),
            descriptor(d),
            default_license(),
        )?;
        for s in members {
            platform.map_subject(&provider, &format!("subject-{s}"), &dataset_id(d), &anon_id(s));
        }
    }

    // Misbehaviour flags scheduled at time zero apply before access.
    let mut script = cfg.event_script.clone();
    script.sort_by_key(|e| e.at_secs);
    let (early, late): (Vec<_>, Vec<_>) = script.into_iter().partition(|e| {
        e.at_secs == 0 && matches!(e.action, ScriptAction::Misbehave { .. })
    });
    for e in &early {
        apply_misbehave(&mut platform, &requesters, &e.action)?;
    }
    for (j, r) in requesters.iter().enumerate() {
        platform.acquire(*r, &dataset_id(j as u32 % c.datasets), PURPOSE)?;
    }

    let mut updates = Vec::new();
    let mut audited = Vec::new();
    for e in late {
        platform.run_until(SimTime::from_secs(e.at_secs))?;
        match &e.action {
            ScriptAction::Misbehave { .. } => apply_misbehave(&mut platform, &requesters, &e.action)?,
            ScriptAction::Erase { subject, dataset } => {
                let s = subjects[*subject as usize];
                updates.push(platform.request_erasure(&s, &provider_of(*dataset), &dataset_id(*dataset))?);
                audited.push((s, *dataset));
            }
            ScriptAction::Rectify { subject, dataset, fields } => {
                let s = subjects[*subject as usize];
                updates.push(platform.request_rectification(
                    &s,
                    &provider_of(*dataset),
                    &dataset_id(*dataset),
                    fields,
                )?);
                audited.push((s, *dataset));
            }
        }
    }
    for (s, d) in audited {
        platform.file_and_audit(&s, &authority, &dataset_id(d))?;
    }
    platform.sync_cache();
    Ok((platform, DemoReport { updates }))
}

fn apply_misbehave(p: &mut Platform, requesters: &[Address], action: &ScriptAction) -> Result<(), HarnessError> {
    if let ScriptAction::Misbehave { requester, ignore_updates, never_renew } = action {
        let behavior = Behavior { ignore_updates: *ignore_updates, never_renew: *never_renew };
        p.set_behavior(&requesters[*requester as usize], behavior)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(experiment: Experiment, params: Vec<u64>) -> ScenarioConfig {
        ScenarioConfig { params: Some(params), replications: 2, ..ScenarioConfig::new(experiment) }
    }

    #[test]
    fn same_dataset_rows_and_tokens() {
        let out = run(&small(Experiment::SameDataset, vec![5, 10])).unwrap();
        let names: Vec<_> = out.rows.iter().map(|r| (r.experiment.as_str(), r.param_value)).collect();
        assert_eq!(
            names,
            [("same_dataset", 5), ("same_dataset_baseline", 5), ("same_dataset", 10), ("same_dataset_baseline", 10)]
        );
        assert_eq!(out.rows[0].tokens_issued, 5);
        assert_eq!(out.rows[1].tokens_issued, 0);
        // Same blocks, same draws: only contract work separates the paths.
        assert_eq!(out.rows[0].chain_length, out.rows[1].chain_length);
        assert!(out.rows[0].total_simulated_seconds > out.rows[1].total_simulated_seconds);
    }

    #[test]
    fn submit_only_zero_requests_is_zero_ops() {
        let cfg = ScenarioConfig::new(Experiment::SubmitOnly);
        let (_, run) = submit_only_run(&cfg, 1, 0, Path::Luce).unwrap();
        assert_eq!((run.request_ops, run.request_gas, run.execution_work), (0, 0, 0));
    }

    #[test]
    fn submit_only_ops_per_request_constant() {
        let cfg = ScenarioConfig::new(Experiment::SubmitOnly);
        for n in [1, 7, 30] {
            let (_, luce) = submit_only_run(&cfg, 1, n, Path::Luce).unwrap();
            let (_, base) = submit_only_run(&cfg, 1, n, Path::Baseline).unwrap();
            assert_eq!(luce.request_ops, 3 * n);
            assert_eq!(base.request_ops, 3 * n);
            assert_eq!(luce.execution_work, n * (1_112 + 84_186 + 3_316));
            assert_eq!(base.execution_work, n * 3 * 20_000);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = ScenarioConfig::new(Experiment::SameDataset);
        cfg.replications = 0;
        assert!(matches!(run(&cfg), Err(HarnessError::InvalidConfig(_))));
        let cfg = small(Experiment::SameDataset, vec![0]);
        assert!(matches!(run(&cfg), Err(HarnessError::InvalidConfig(_))));
        let mut cfg = ScenarioConfig::new(Experiment::ThreadSweep);
        cfg.threads = vec![0];
        assert!(matches!(run(&cfg), Err(HarnessError::InvalidConfig(_))));
    }

    #[test]
    fn replication_seeds_differ() {
        let seeds: Vec<_> = (0..4).map(|r| replication_seed(7, r)).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
    }
}

//! Gas schedule for every contract action and gas → ETH → USD conversion.
//!
//! ETH and USD amounts are exact decimals: a gas figure times a Gwei price is
//! representable without rounding, so reproduced cost rows compare exactly.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fixed gas charged by the chain for any transaction.
pub const BASE_TX_GAS: u64 = 21_000;

pub mod action {
    pub const DEPLOY: &str = "Deploy";
    pub const PUBLISH_DATA: &str = "publishData";
    pub const SET_LICENSE: &str = "setLicense";
    pub const ADD_DATA_REQUESTER: &str = "addDataRequester";
    pub const UPDATE_DATA: &str = "updateData";
    pub const RENEW_TOKEN: &str = "renewToken";
    pub const GET_LINK: &str = "getLink";
    pub const GET_LICENSE: &str = "getLicense";
    pub const CONFIRM_UPDATE: &str = "confirmUpdate";
    pub const UNSUBSCRIBE: &str = "unsubscribe";
    pub const REGISTER: &str = "registry.register";
    pub const BASELINE_SET: &str = "baseline.set";
}

/// Measured per-action costs, in reporting order.
/// `(action, transaction gas, execution gas)`.
pub const MEASURED_COSTS: [(&str, u64, u64); 8] = [
    (action::DEPLOY, 1_339_598, 964_030),
    (action::PUBLISH_DATA, 79_652, 56_460),
    (action::SET_LICENSE, 24_201, 2_737),
    (action::ADD_DATA_REQUESTER, 105_842, 84_186),
    (action::UPDATE_DATA, 47_756, 24_884),
    (action::RENEW_TOKEN, 16_149, 9_685),
    (action::GET_LINK, 24_780, 3_316),
    (action::GET_LICENSE, 22_384, 1_112),
];

/// Actions with no measured cost. Their transaction gas is an assumed figure.
pub const EXTRAPOLATED_COSTS: [(&str, u64); 4] = [
    (action::CONFIRM_UPDATE, 30_000),
    (action::UNSUBSCRIBE, 25_000),
    (action::REGISTER, 45_000),
    (action::BASELINE_SET, 41_000),
];

/// Previously published ETH/USD figures for the measured actions, as printed
/// (ETH, USD). Used to annotate report rows whose arithmetic disagrees.
pub const PUBLISHED_FIGURES: [(&str, &str, &str); 8] = [
    (action::DEPLOY, "0.0428671", "79.28"),
    (action::PUBLISH_DATA, "0.002548", "4.71"),
    (action::SET_LICENSE, "0.0007744", "1.43"),
    (action::ADD_DATA_REQUESTER, "0.003386", "6.26"),
    (action::UPDATE_DATA, "0.001528", "2.82"),
    (action::RENEW_TOKEN, "0.0005268", "0.97"),
    (action::GET_LINK, "0.000793", "1.46"),
    (action::GET_LICENSE, "0.000716", "1.32"),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("action `{action}`: execution gas {execution} exceeds transaction gas {transaction}")]
    ExecutionExceedsTransaction {
        action: String,
        transaction: u64,
        execution: u64,
    },
    #[error("{0} must be strictly positive")]
    NonPositiveRate(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GasEntry {
    pub transaction: u64,
    pub execution: u64,
    /// True for assumed costs that are not part of the measured table.
    #[serde(default)]
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GasSchedule {
    #[serde(default = "default_base")]
    pub base_tx_gas: u64,
    pub entries: BTreeMap<String, GasEntry>,
    /// Row order for reports. Actions missing here are reported after, by name.
    #[serde(default)]
    pub order: Vec<String>,
}

fn default_base() -> u64 {
    BASE_TX_GAS
}

impl Default for GasSchedule {
    fn default() -> Self {
        let mut entries = BTreeMap::new();
        for (name, transaction, execution) in MEASURED_COSTS {
            entries.insert(
                name.to_string(),
                GasEntry { transaction, execution, extrapolated: false },
            );
        }
        for (name, transaction) in EXTRAPOLATED_COSTS {
            entries.insert(
                name.to_string(),
                GasEntry {
                    transaction,
                    execution: transaction - BASE_TX_GAS,
                    extrapolated: true,
                },
            );
        }
        GasSchedule {
            base_tx_gas: BASE_TX_GAS,
            entries,
            order: MEASURED_COSTS.iter().map(|(n, _, _)| n.to_string()).collect(),
        }
    }
}

impl GasSchedule {
    pub fn empty() -> Self {
        GasSchedule { base_tx_gas: BASE_TX_GAS, entries: BTreeMap::new(), order: Vec::new() }
    }

    pub fn with_entry(mut self, action: &str, entry: GasEntry) -> Self {
        self.entries.insert(action.to_string(), entry);
        self
    }

    pub fn gas_for(&self, action: &str) -> Result<GasEntry, CostError> {
        self.entries
            .get(action)
            .copied()
            .ok_or_else(|| CostError::UnknownAction(action.to_string()))
    }

    pub fn contains(&self, action: &str) -> bool {
        self.entries.contains_key(action)
    }

    /// Checks `transaction >= execution` for every entry.
    ///
    /// The transaction-gas floor of `base_tx_gas` is not enforced: the measured
    /// renewToken figure (16149) sits below it.
    pub fn validate(&self) -> Result<(), CostError> {
        for (name, e) in &self.entries {
            if e.execution > e.transaction {
                return Err(CostError::ExecutionExceedsTransaction {
                    action: name.clone(),
                    transaction: e.transaction,
                    execution: e.execution,
                });
            }
        }
        Ok(())
    }

    /// Actions in report order: explicit order first, then the rest by name.
    pub fn ordered_actions(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .order
            .iter()
            .map(String::as_str)
            .filter(|a| self.entries.contains_key(*a))
            .collect();
        for name in self.entries.keys() {
            if !out.contains(&name.as_str()) {
                out.push(name);
            }
        }
        out
    }
}

/// An amount of ether.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Eth(pub Decimal);

/// An amount of US dollars, always at cent precision once produced by [`cost_usd`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Usd(pub Decimal);

impl fmt::Display for Eth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.normalize())
    }
}

impl fmt::Display for Usd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut v = self.0;
        v.rescale(2);
        write!(f, "{v}")
    }
}

impl Eth {
    /// Truncates to `digits` significant digits, e.g. 0.042867136 → 0.04286713 at 7.
    pub fn truncated_significant(self, digits: u32) -> Eth {
        let v = self.0.normalize();
        if v.is_zero() {
            return Eth(Decimal::ZERO);
        }
        // position of the leading digit relative to the decimal point
        let int_digits = {
            let mut n: i64 = 0;
            let mut x = v.abs().trunc();
            while !x.is_zero() {
                x = (x / Decimal::TEN).trunc();
                n += 1;
            }
            if n > 0 {
                n
            } else {
                let mut frac = v.abs();
                let mut zeros = 0i64;
                while frac < Decimal::ONE {
                    frac *= Decimal::TEN;
                    zeros += 1;
                }
                1 - zeros
            }
        };
        let dp = (digits as i64 - int_digits).max(0) as u32;
        Eth(v.round_dp_with_strategy(dp, RoundingStrategy::ToZero).normalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiatRates {
    pub gas_price_gwei: Decimal,
    pub eth_usd: Decimal,
}

impl Default for FiatRates {
    fn default() -> Self {
        FiatRates {
            gas_price_gwei: Decimal::from(32),
            eth_usd: Decimal::new(184_944, 2),
        }
    }
}

impl FiatRates {
    /// Both rates must be strictly positive. A zero gas price is still usable
    /// with the conversion functions; this only guards loaded configuration.
    pub fn validate(&self) -> Result<(), CostError> {
        if self.gas_price_gwei <= Decimal::ZERO {
            return Err(CostError::NonPositiveRate("gas_price_gwei"));
        }
        if self.eth_usd <= Decimal::ZERO {
            return Err(CostError::NonPositiveRate("eth_usd"));
        }
        Ok(())
    }
}

/// `gas × gasPriceGwei × 10⁻⁹` ETH.
pub fn tx_cost_eth(gas: u64, rates: &FiatRates) -> Eth {
    let gwei = Decimal::from(gas) * rates.gas_price_gwei;
    Eth(gwei * Decimal::new(1, 9))
}

/// `eth × ethUsd`, rounded half-up to cents.
pub fn cost_usd(eth: Eth, rates: &FiatRates) -> Usd {
    Usd((eth.0 * rates.eth_usd).round_dp_with_strategy(2, RoundingStrategy::MidpointAwayFromZero))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostRow {
    pub action: String,
    pub transaction_gas: u64,
    pub execution_gas: u64,
    pub eth: Eth,
    pub usd: Usd,
    /// Set when a previously published figure for this action cannot be
    /// reproduced from its own gas figure.
    pub note: Option<String>,
}

/// One row per non-extrapolated action in the schedule.
pub fn cost_report(schedule: &GasSchedule, rates: &FiatRates) -> Vec<CostRow> {
    schedule
        .ordered_actions()
        .into_iter()
        .filter_map(|name| {
            let entry = schedule.entries[name];
            if entry.extrapolated {
                return None;
            }
            let eth = tx_cost_eth(entry.transaction, rates);
            let usd = cost_usd(eth, rates);
            let note = published_mismatch(name, entry.transaction, rates);
            Some(CostRow {
                action: name.to_string(),
                transaction_gas: entry.transaction,
                execution_gas: entry.execution,
                eth,
                usd,
                note,
            })
        })
        .collect()
}

/// A published ETH figure is consistent when the exact product, cut to the
/// printed number of decimals by either truncation or rounding, equals it.
/// Only checked at the published rates and the published gas figure.
fn published_mismatch(action: &str, gas: u64, rates: &FiatRates) -> Option<String> {
    if *rates != FiatRates::default() {
        return None;
    }
    let (measured_gas, published_eth) = published_eth(action)?;
    if measured_gas != gas {
        return None;
    }
    let exact = tx_cost_eth(gas, rates).0;
    let dp = published_eth.scale();
    let trunc = exact.round_dp_with_strategy(dp, RoundingStrategy::ToZero);
    let round = exact.round_dp_with_strategy(dp, RoundingStrategy::MidpointAwayFromZero);
    if trunc == published_eth || round == published_eth {
        None
    } else {
        Some(format!(
            "inconsistent: published {published_eth} ETH does not match {gas} gas x {} Gwei = {}",
            rates.gas_price_gwei,
            exact.normalize()
        ))
    }
}

/// Published (transaction gas, ETH) for a measured action.
pub fn published_eth(action: &str) -> Option<(u64, Decimal)> {
    let gas = MEASURED_COSTS.iter().find(|(a, _, _)| *a == action)?.1;
    let eth = PUBLISHED_FIGURES.iter().find(|(a, _, _)| *a == action)?.1;
    Some((gas, eth.parse().ok()?))
}

pub fn published_usd(action: &str) -> Option<Decimal> {
    PUBLISHED_FIGURES
        .iter()
        .find(|(a, _, _)| *a == action)
        .and_then(|(_, _, usd)| usd.parse().ok())
}

/// Sum of transaction gas over a log of mined actions.
pub fn scenario_total_gas<I>(gas_used: I) -> u64
where
    I: IntoIterator<Item = u64>,
{
    gas_used.into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dec(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    #[test]
    fn gas_for_measured_actions() {
        let s = GasSchedule::default();
        let g = s.gas_for("Deploy").unwrap();
        assert_eq!((g.transaction, g.execution), (1_339_598, 964_030));
        let g = s.gas_for("addDataRequester").unwrap();
        assert_eq!((g.transaction, g.execution), (105_842, 84_186));
        let g = s.gas_for("renewToken").unwrap();
        assert_eq!((g.transaction, g.execution), (16_149, 9_685));
        assert_eq!(
            s.gas_for("mint"),
            Err(CostError::UnknownAction("mint".into()))
        );
    }

    #[test]
    fn default_schedule_is_valid() {
        GasSchedule::default().validate().unwrap();
        let bad = GasSchedule::empty()
            .with_entry("x", GasEntry { transaction: 1, execution: 2, extrapolated: false });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn eth_conversion_is_exact() {
        let r = FiatRates::default();
        assert_eq!(tx_cost_eth(1_339_598, &r).0, dec("0.042867136"));
        assert_eq!(tx_cost_eth(0, &r).0, Decimal::ZERO);
        assert_eq!(tx_cost_eth(16_149, &r).0, dec("0.000516768"));
    }

    #[test]
    fn usd_conversion_rounds_half_up_to_cents() {
        let r = FiatRates::default();
        assert_eq!(cost_usd(Eth(dec("0.0428671")), &r).to_string(), "79.28");
        assert_eq!(cost_usd(Eth(Decimal::ZERO), &r).to_string(), "0.00");
        assert_eq!(cost_usd(Eth(dec("0.003386")), &r).to_string(), "6.26");
        let one = FiatRates { gas_price_gwei: Decimal::ONE, eth_usd: Decimal::ONE };
        assert_eq!(cost_usd(Eth(dec("0.005")), &one).to_string(), "0.01");
        assert_eq!(cost_usd(Eth(dec("0.00499")), &one).to_string(), "0.00");
    }

    #[test]
    fn report_flags_only_renew_token() {
        let rows = cost_report(&GasSchedule::default(), &FiatRates::default());
        assert_eq!(rows.len(), 8);
        let flagged: Vec<_> = rows.iter().filter(|r| r.note.is_some()).collect();
        assert_eq!(flagged.len(), 1);
        assert_eq!(flagged[0].action, "renewToken");
        assert!(flagged[0].note.as_ref().unwrap().contains("0.0005268"));
        assert_eq!(flagged[0].eth.to_string(), "0.000516768");
    }

    #[test]
    fn report_excludes_extrapolated_actions() {
        let rows = cost_report(&GasSchedule::default(), &FiatRates::default());
        assert!(rows.iter().all(|r| !r.action.contains('.')
            && r.action != "confirmUpdate"
            && r.action != "unsubscribe"));
    }

    #[test]
    fn zero_gas_price_zeroes_all_costs() {
        let r = FiatRates { gas_price_gwei: Decimal::ZERO, ..FiatRates::default() };
        for row in cost_report(&GasSchedule::default(), &r) {
            assert!(row.eth.0.is_zero());
            assert!(row.usd.0.is_zero());
            assert!(row.note.is_none());
        }
    }

    #[test]
    fn single_action_schedule_gives_one_row() {
        let s = GasSchedule::empty()
            .with_entry("ping", GasEntry { transaction: 21_000, execution: 0, extrapolated: false });
        let rows = cost_report(&s, &FiatRates::default());
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].eth.0, dec("0.000672"));
    }

    #[test]
    fn usd_within_two_cents_of_published() {
        let rates = FiatRates::default();
        for row in cost_report(&GasSchedule::default(), &rates) {
            let published = published_usd(&row.action).unwrap();
            assert!((row.usd.0 - published).abs() <= dec("0.02"), "{}", row.action);
        }
    }

    #[test]
    fn significant_digit_truncation() {
        assert_eq!(Eth(dec("0.042867136")).truncated_significant(7).to_string(), "0.04286713");
        assert_eq!(Eth(dec("0.000516768")).truncated_significant(7).to_string(), "0.000516768");
        assert_eq!(Eth(dec("12.3456789")).truncated_significant(7).to_string(), "12.34567");
        assert_eq!(Eth(Decimal::ZERO).truncated_significant(7).to_string(), "0");
    }

    #[test]
    fn sharing_flow_sums() {
        let s = GasSchedule::default();
        let tx = |a| s.gas_for(a).unwrap().transaction;
        let share = [tx("Deploy"), tx("publishData"), tx("setLicense")];
        assert_eq!(scenario_total_gas(share), 1_443_451);
        assert_eq!(scenario_total_gas([]), 0);
        let with_two = share.into_iter().chain([tx("addDataRequester"); 2]);
        assert_eq!(scenario_total_gas(with_two), 1_655_135);
    }

    proptest! {
        #[test]
        fn usd_monotone_in_gas(a in 0u64..10_000_000, b in 0u64..10_000_000) {
            let r = FiatRates::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(cost_usd(tx_cost_eth(lo, &r), &r) <= cost_usd(tx_cost_eth(hi, &r), &r));
        }

        #[test]
        fn total_gas_additive(xs in proptest::collection::vec(0u64..2_000_000, 0..20),
                              ys in proptest::collection::vec(0u64..2_000_000, 0..20)) {
            let joined = xs.iter().chain(ys.iter()).copied();
            prop_assert_eq!(
                scenario_total_gas(joined),
                scenario_total_gas(xs.iter().copied()) + scenario_total_gas(ys.iter().copied())
            );
        }
    }
}

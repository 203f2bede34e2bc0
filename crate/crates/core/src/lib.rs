//! Deterministic simulation of license-accountable dataset sharing.
//!
//! Datasets are published through per-dataset contracts on a simulated,
//! hash-chained ledger. Requesters obtain time-limited access tokens for a
//! stated purpose, renew them periodically, and must confirm provider updates
//! (rectification or erasure of a subject's records) to keep access.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! wall-clock measurements live in the `luce-sim` crate.

#![no_std]

extern crate alloc;

pub mod catalog;
pub mod contracts;
pub mod costmodel;
pub mod datastore;
pub mod encoding;
pub mod harness;
pub mod ledger;
pub mod primitives;
pub mod protocol;

pub use primitives::{Address, Digest, SimTime};

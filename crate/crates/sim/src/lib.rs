//! File formats, reports and the command line for `luce-core` simulations.

pub mod chain;
pub mod cli;
pub mod costs;
pub mod export;
pub mod scenario;
pub mod verify;

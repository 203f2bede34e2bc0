//! Command line: `run`, `costs` and `verify`.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use luce_core::costmodel::{cost_report, FiatRates, GasSchedule};
use luce_core::harness::run;
use luce_core::Address;
use rust_decimal::Decimal;

use crate::{chain, costs, export, scenario, verify};

/// Exit status of a verification that ran but did not pass, or of input
/// that could not be read as a chain.
pub const VERIFY_FAILED: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "luce-sim", version, about = "Simulate license-accountable dataset sharing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its metrics as CSV.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the seed in the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the chain, catalog, cache, complaints and maintenance
        /// log of the last run here.
        #[arg(long)]
        export_dir: Option<PathBuf>,
    },
    /// Print the per-action gas and fee table.
    Costs {
        #[arg(long, default_value = "32", allow_negative_numbers = true)]
        gas_price: Decimal,
        #[arg(long, default_value = "1849.44", allow_negative_numbers = true)]
        eth_usd: Decimal,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Gas schedule JSON replacing the built-in one.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Check an exported chain: hashes, replay, cache coherence and
    /// optionally the update audit of one dataset contract.
    Verify {
        #[arg(long)]
        chain: PathBuf,
        /// Dataset contract address (0x-prefixed hex).
        #[arg(long)]
        gdpr: Option<Address>,
    },
}

pub fn execute<W: Write>(cli: Cli, out: &mut W) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { scenario: path, seed, out: csv_path, export_dir } => {
            let mut cfg = scenario::load(&path)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let result = run(&cfg)?;
            let file = File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
            scenario::write_metrics(&result.rows, file)?;
            if let Some(dir) = export_dir {
                export::write_artifacts(&dir, &result)?;
            }
            writeln!(out, "{} rows written to {}", result.rows.len(), csv_path.display())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Costs { gas_price, eth_usd, format, schedule } => {
            if gas_price.is_sign_negative() || eth_usd.is_sign_negative() {
                bail!("rates must not be negative");
            }
            let schedule = match schedule {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    let s: GasSchedule = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
                    s.validate()?;
                    s
                }
                None => GasSchedule::default(),
            };
            let rows = cost_report(&schedule, &FiatRates { gas_price_gwei: gas_price, eth_usd });
            let text = match format {
                Format::Table => costs::render_table(&rows),
                Format::Csv => costs::render_csv(&rows),
            };
            out.write_all(text.as_bytes())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { chain: path, gdpr } => {
            let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            let blocks = match chain::read_jsonl(BufReader::new(file)) {
                Ok(b) => b,
                Err(e) => {
                    writeln!(out, "unreadable chain: {e}")?;
                    writeln!(out, "result: FAIL")?;
                    return Ok(ExitCode::from(VERIFY_FAILED));
                }
            };
            let report = verify::verify(&blocks, gdpr);
            writeln!(out, "{report}")?;
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(VERIFY_FAILED) })
        }
    }
}

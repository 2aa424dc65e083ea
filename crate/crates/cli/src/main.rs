//! `urbanflow`: mobility flows from geotagged observations and multimodal
//! route comparisons for the busiest ones.

mod config;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use urbanflow::ingest::write_observations;
use urbanflow::synth::{generate, SynthConfig};

use config::Overrides;

#[derive(Debug, Parser)]
#[command(
    name = "urbanflow",
    version,
    about = "Urban mobility flows and multimodal route comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate the observation CSV and store the accepted records.
    Ingest,
    /// Link consecutive observations per user and apply the trip filters.
    Link,
    /// Cluster trip endpoints into functional zones.
    Cluster,
    /// Aggregate links into classified zone-to-zone flows.
    Flows,
    /// Enumerate multimodal route options for the busiest flows.
    Route,
    /// Compare labeled options and write CSV, JSON and SVG reports.
    Report,
    /// Render HTML maps of the labeled options.
    Map,
    /// Run every stage in order.
    All,
    /// Write a synthetic observation dataset for the offline city.
    Synth {
        /// Destination CSV file.
        output: PathBuf,
        #[arg(long, default_value_t = SynthConfig::default().users)]
        users: usize,
        #[arg(long, default_value_t = SynthConfig::default().days)]
        days: usize,
        #[arg(long, default_value_t = SynthConfig::default().hotspots)]
        hotspots: usize,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Synth {
        output,
        users,
        days,
        hotspots,
    } = &cli.command
    {
        let cfg = SynthConfig {
            seed: cli.overrides.seed.unwrap_or(SynthConfig::default().seed),
            users: *users,
            days: *days,
            hotspots: *hotspots,
            ..Default::default()
        };
        let records = generate(&cfg);
        let file = std::fs::File::create(output)
            .with_context(|| format!("cannot write {}", output.display()))?;
        write_observations(&records, std::io::BufWriter::new(file))?;
        println!(
            "synth: {} observations written to {}",
            records.len(),
            output.display()
        );
        return Ok(());
    }
    let cfg = cli.overrides.resolve()?;
    match cli.command {
        Command::Ingest => stages::cmd_ingest(&cfg).map(drop),
        Command::Link => stages::cmd_link(&cfg).map(drop),
        Command::Cluster => stages::cmd_cluster(&cfg).map(drop),
        Command::Flows => stages::cmd_flows(&cfg).map(drop),
        Command::Route => stages::cmd_route(&cfg).map(drop),
        Command::Report => stages::cmd_report(&cfg),
        Command::Map => stages::cmd_map(&cfg).map(drop),
        Command::All => stages::cmd_all(&cfg),
        Command::Synth { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

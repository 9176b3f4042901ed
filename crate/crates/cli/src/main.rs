//! `paris-cba`: costs and benefits of holding warming to 1.5 or 2.0 °C.

mod chart;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{ImpactsArgs, KayaArgs, NpvArgs};
use config::{Options, RunConfig, OUT_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "paris-cba",
    version,
    about = "Costs and benefits of the 1.5 and 2.0 °C temperature targets"
)]
struct Cli {
    #[command(flatten)]
    options: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decompose emissions growth into population, income, energy and carbon intensity
    Kaya(KayaArgs),
    /// Run a scenario through the climate model; with --target, also cut it to stay below the target
    Simulate,
    /// Emission reduction per unit carbon price across models and studies
    Efficacy,
    /// Fit impact functions and histogram the estimates at a common warming
    Impacts(ImpactsArgs),
    /// Cost and benefit paths with uncertainty ranges
    Cba,
    /// Net benefit percentiles from Monte Carlo draws
    Netben,
    /// Net present values, certainty-equivalent gains and the discount-rate frontier
    Npv(NpvArgs),
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let env_out = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let cfg = RunConfig::resolve(&cli.options, env_out)?;
    match &cli.command {
        Command::Kaya(args) => commands::kaya(&cfg, args),
        Command::Simulate => commands::simulate(&cfg),
        Command::Efficacy => commands::efficacy(&cfg),
        Command::Impacts(args) => commands::impacts(&cfg, args),
        Command::Cba => commands::cba(&cfg),
        Command::Netben => commands::netben(&cfg),
        Command::Npv(args) => commands::npv(&cfg, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_follow_the_subcommand() {
        let cli = Cli::try_parse_from(["paris-cba", "cba", "--target", "1.5", "--draws", "10"]).unwrap();
        assert_eq!(cli.options.draws, Some(10));
        assert!(matches!(cli.command, Command::Cba));
    }

    #[test]
    fn unknown_subcommand_and_bad_values_fail_to_parse() {
        assert!(Cli::try_parse_from(["paris-cba", "plot"]).is_err());
        assert!(Cli::try_parse_from(["paris-cba", "cba", "--target", "3"]).is_err());
        assert!(Cli::try_parse_from(["paris-cba", "kaya", "--period", "2021-2011"]).is_err());
    }
}

//! `ipd`: batch front end for tournaments, evolution runs and machine
//! analysis.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error.

mod commands;
mod files;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ipd",
    version,
    about = "Iterated prisoner's dilemma with finite-state-machine strategies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Round-robin tournament with median ranking.
    Tournament(TournamentArgs),
    /// Elitist evolutionary search over machines.
    Evolve(EvolveArgs),
    /// Remove unreachable states from a machine.
    Prune(PruneArgs),
    /// Decide whether two machines behave identically.
    Equiv(EquivArgs),
    /// Print a per-turn action and state trace of one match.
    Trace(TraceArgs),
    /// Memory-one cooperation rates from a history dump.
    Rates(RatesArgs),
}

#[derive(Args, Debug)]
pub struct TournamentArgs {
    /// Comma-separated names; `@file.fsm` adds a machine file.
    #[arg(long)]
    pub roster: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub turns: usize,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ranking CSV destination.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Cooperation-rate CSV destination.
    #[arg(long)]
    pub coop_report: Option<std::path::PathBuf>,
    /// Match history dump destination.
    #[arg(long)]
    pub history: Option<std::path::PathBuf>,
    /// Also play every entrant against itself.
    #[arg(long)]
    pub self_matches: bool,
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[arg(long, default_value_t = 40)]
    pub population: usize,
    #[arg(long, default_value_t = 10)]
    pub bottleneck: usize,
    #[arg(long, default_value_t = 0.1)]
    pub mutation_rate: f64,
    #[arg(long, default_value_t = 500)]
    pub generations: usize,
    #[arg(long, default_value_t = 10)]
    pub states: usize,
    #[arg(long, default_value_t = 20)]
    pub turns: usize,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Opponents, comma-separated; defaults to the built-in roster.
    #[arg(long)]
    pub roster: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed genome: a machine file or built-in machine name. Repeatable.
    #[arg(long = "seed-fsm")]
    pub seed_fsm: Vec<String>,
    /// Generation log, written one flushed line per generation.
    #[arg(long)]
    pub log: Option<std::path::PathBuf>,
    /// Continue from the last record of an existing --log.
    #[arg(long, requires = "log")]
    pub resume: bool,
    /// Destination for the best machine found.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Name given to evolved genomes.
    #[arg(long, default_value = "EvolvedFSM")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct PruneArgs {
    #[arg(long = "in")]
    pub input: String,
    #[arg(long)]
    pub out: std::path::PathBuf,
    /// Name for the pruned machine. By default a trailing state count in
    /// the name is updated.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Args, Debug)]
pub struct EquivArgs {
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    /// Compare only this many moves instead of deciding exactly.
    #[arg(long)]
    pub horizon: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(long, default_value_t = 20)]
    pub turns: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

#[derive(Args, Debug)]
pub struct RatesArgs {
    /// History dump written by `tournament --history`.
    #[arg(long = "in")]
    pub input: std::path::PathBuf,
    #[arg(long)]
    pub player: String,
    /// Optional CSV destination.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Tournament(a) => commands::tournament(a),
        Command::Evolve(a) => commands::evolve(a),
        Command::Prune(a) => commands::prune(a),
        Command::Equiv(a) => commands::equiv(a),
        Command::Trace(a) => commands::trace(a),
        Command::Rates(a) => commands::rates(a),
    };
    match result {
        Ok(written) => {
            for path in written {
                println!("# wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            match &e {
                CliError::Usage(m) | CliError::Data(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

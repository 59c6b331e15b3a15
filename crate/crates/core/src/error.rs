use thiserror::Error;

use crate::fsm::{StateId, Violation};

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("invalid action {0:?}, expected C or D")]
    BadAction(String),
    #[error("payoffs (t={t}, r={r}, p={p}, s={s}) must satisfy t > r > p > s and 2r > t + s")]
    BadPayoffs { t: f64, r: f64, p: f64, s: f64 },
    #[error("a match needs at least one turn")]
    ZeroTurns,
    #[error("noise {0} outside [0, 1]")]
    BadNoise(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum FsmError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid machine: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("state {0} is not part of the machine")]
    UnknownState(StateId),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum ZooError {
    #[error("unknown strategy {name:?}; available: {}", .available.join(", "))]
    UnknownStrategy {
        name: String,
        available: Vec<String>,
    },
    #[error("strategy name {0:?} is already registered")]
    DuplicateName(String),
    #[error("built-in machine {name} does not match its golden checksum")]
    ChecksumMismatch { name: String },
    #[error("built-in machine {name}: {source}")]
    BadBuiltin { name: String, source: FsmError },
}

#[derive(Debug, Error)]
pub enum TournamentError {
    #[error("a tournament needs at least two entrants, got {0}")]
    RosterTooSmall(usize),
    #[error("entrant {0:?} appears more than once")]
    DuplicateEntrant(String),
    #[error("at least one repetition is required")]
    ZeroRepetitions,
    #[error(transparent)]
    Zoo(#[from] ZooError),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("invalid evolution parameters: {0}")]
    BadParams(String),
    #[error("seed genome {name} has {states} states, more than the configured {limit}")]
    SeedTooLarge {
        name: String,
        states: usize,
        limit: usize,
    },
    #[error("{count} seed genomes exceed the population size {population}")]
    TooManySeeds { count: usize, population: usize },
    #[error(transparent)]
    Zoo(#[from] ZooError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Fsm(#[from] FsmError),
    #[error("generation log: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq)]
#[error("history line {line}: {message}")]
pub struct HistoryError {
    pub line: usize,
    pub message: String,
}

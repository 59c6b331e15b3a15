//! Iterated prisoner's dilemma engine built around finite-state-machine
//! strategies.
//!
//! - [`game`]: stage game and match engine
//! - [`fsm`]: machine representation, text format, interpreter
//! - [`analysis`]: reachability pruning and behavioral equivalence
//! - [`zoo`]: built-in strategies and the name registry
//! - [`tournament`]: round robins, median ranking, cooperation profiles
//! - [`evolution`]: elitist mutation-only search over machines

pub mod analysis;
pub mod error;
pub mod evolution;
pub mod fsm;
pub mod game;
pub mod seed;
pub mod tournament;
pub mod zoo;

pub use analysis::{
    behaviorally_equivalent, distinguishing_sequence, prune_unreachable, reachable_states, Horizon,
    ReachabilityReport,
};
pub use error::{EvolutionError, FsmError, GameError, HistoryError, TournamentError, ZooError};
pub use evolution::{
    evolve, evolve_with, fitness, generation_deltas, mutate_fsm, EvolutionOutcome, EvolutionParams,
    GenerationRecord,
};
pub use fsm::{
    fsm_step, parse_fsm, serialize_fsm, validate_fsm, FsmDraft, FsmPlayer, FsmSpec, StateId,
    Transition, TransitionEntry, Violation,
};
pub use game::{
    payoff_pair, play_match, play_match_traced, Action, MatchConfig, MatchRecord, PayoffMatrix,
    Strategy, TurnTrace,
};
pub use tournament::{
    cooperation_rates, median_ranking, run_tournament, write_ranking_csv, CooperationReport,
    MatchEntry, TournamentConfig, TournamentResult,
};
pub use zoo::{
    builtin_strategy, roster_default, Registry, StrategyFactory, StrategyId, StrategyKind,
};

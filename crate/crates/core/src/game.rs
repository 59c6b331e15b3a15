//! Stage game, match engine and match histories.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::GameError;
use crate::fsm::StateId;
use crate::seed::{combine, rng_from_seed};

/// A move in the prisoner's dilemma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    C,
    D,
}

impl Action {
    pub const BOTH: [Action; 2] = [Action::C, Action::D];

    pub fn flip(self) -> Action {
        match self {
            Action::C => Action::D,
            Action::D => Action::C,
        }
    }

    /// Row index used by tables keyed on an action (C = 0, D = 1).
    pub fn index(self) -> usize {
        match self {
            Action::C => 0,
            Action::D => 1,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Action::C => 'C',
            Action::D => 'D',
        }
    }

    pub fn from_char(c: char) -> Option<Action> {
        match c {
            'C' => Some(Action::C),
            'D' => Some(Action::D),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Action {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "C" => Ok(Action::C),
            "D" => Ok(Action::D),
            other => Err(GameError::BadAction(other.to_string())),
        }
    }
}

/// Renders a sequence of actions as a `C`/`D` string.
pub fn actions_to_string(actions: &[Action]) -> String {
    actions.iter().map(|a| a.as_char()).collect()
}

/// Parses a `C`/`D` string.
pub fn actions_from_str(s: &str) -> Result<Vec<Action>, GameError> {
    s.chars()
        .map(|c| Action::from_char(c).ok_or_else(|| GameError::BadAction(c.to_string())))
        .collect()
}

/// Stage-game payoffs: temptation, reward, punishment, sucker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffMatrix {
    t: f64,
    r: f64,
    p: f64,
    s: f64,
}

impl PayoffMatrix {
    /// Requires `t > r > p > s` and `2r > t + s`.
    pub fn new(t: f64, r: f64, p: f64, s: f64) -> Result<Self, GameError> {
        if !(t > r && r > p && p > s) || 2.0 * r <= t + s {
            return Err(GameError::BadPayoffs { t, r, p, s });
        }
        Ok(PayoffMatrix { t, r, p, s })
    }

    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Payoffs of one stage game, from the point of view of `own`.
    pub fn payoff_pair(&self, own: Action, opp: Action) -> (f64, f64) {
        match (own, opp) {
            (Action::C, Action::C) => (self.r, self.r),
            (Action::C, Action::D) => (self.s, self.t),
            (Action::D, Action::C) => (self.t, self.s),
            (Action::D, Action::D) => (self.p, self.p),
        }
    }
}

impl Default for PayoffMatrix {
    /// The conventional (5, 3, 1, 0).
    fn default() -> Self {
        PayoffMatrix {
            t: 5.0,
            r: 3.0,
            p: 1.0,
            s: 0.0,
        }
    }
}

/// Free-function form of [`PayoffMatrix::payoff_pair`].
pub fn payoff_pair(own: Action, opp: Action, m: &PayoffMatrix) -> (f64, f64) {
    m.payoff_pair(own, opp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    turns: usize,
    noise: f64,
    seed: u64,
}

impl MatchConfig {
    pub fn new(turns: usize, noise: f64, seed: u64) -> Result<Self, GameError> {
        if turns == 0 {
            return Err(GameError::ZeroTurns);
        }
        if !(0.0..=1.0).contains(&noise) {
            return Err(GameError::BadNoise(noise));
        }
        Ok(MatchConfig { turns, noise, seed })
    }

    pub fn turns(&self) -> usize {
        self.turns
    }
    pub fn noise(&self) -> f64 {
        self.noise
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(self, seed: u64) -> Self {
        MatchConfig { seed, ..self }
    }
}

/// Both players' recorded actions and payoff totals for one match.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchRecord {
    pub actions_a: Vec<Action>,
    pub actions_b: Vec<Action>,
    pub payoff_a: f64,
    pub payoff_b: f64,
}

impl MatchRecord {
    pub fn turns(&self) -> usize {
        self.actions_a.len()
    }

    /// Totals recomputed from the action sequences.
    pub fn recompute_payoffs(&self, m: &PayoffMatrix) -> (f64, f64) {
        self.actions_a
            .iter()
            .zip(&self.actions_b)
            .fold((0.0, 0.0), |(pa, pb), (&a, &b)| {
                let (sa, sb) = m.payoff_pair(a, b);
                (pa + sa, pb + sb)
            })
    }

    /// The same match seen from player b's side.
    pub fn mirrored(&self) -> MatchRecord {
        MatchRecord {
            actions_a: self.actions_b.clone(),
            actions_b: self.actions_a.clone(),
            payoff_a: self.payoff_b,
            payoff_b: self.payoff_a,
        }
    }
}

/// A player in a match. Instances carry per-match memory and are never
/// shared between concurrent matches.
///
/// Strategies see only the recorded history; the match length is never
/// revealed to them.
pub trait Strategy: Send {
    fn name(&self) -> &str;

    /// Restores the state the strategy had before its opening move.
    fn reset(&mut self);

    fn opening(&mut self, rng: &mut ChaCha8Rng) -> Action;

    /// Move for the next turn given the previous turn's recorded actions.
    fn respond(&mut self, own_last: Action, opp_last: Action, rng: &mut ChaCha8Rng) -> Action;

    /// Current automaton state, for strategies that have one.
    fn current_state(&self) -> Option<StateId> {
        None
    }
}

/// One turn of a traced match.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnTrace {
    pub turn: usize,
    pub state_a: Option<StateId>,
    pub state_b: Option<StateId>,
    pub action_a: Action,
    pub action_b: Action,
}

/// Plays one match.
///
/// Each player owns a random stream derived from `cfg.seed` and its side
/// (a = 0, b = 1); the stream feeds both the strategy's own draws and the
/// noise flips applied to its chosen action.
pub fn play_match(
    a: &mut dyn Strategy,
    b: &mut dyn Strategy,
    cfg: &MatchConfig,
    m: &PayoffMatrix,
) -> MatchRecord {
    run_match(a, b, cfg, m, None)
}

/// Like [`play_match`] but also returns the per-turn state/action trace.
pub fn play_match_traced(
    a: &mut dyn Strategy,
    b: &mut dyn Strategy,
    cfg: &MatchConfig,
    m: &PayoffMatrix,
) -> (MatchRecord, Vec<TurnTrace>) {
    let mut trace = Vec::with_capacity(cfg.turns());
    let record = run_match(a, b, cfg, m, Some(&mut trace));
    (record, trace)
}

fn run_match(
    a: &mut dyn Strategy,
    b: &mut dyn Strategy,
    cfg: &MatchConfig,
    m: &PayoffMatrix,
    mut trace: Option<&mut Vec<TurnTrace>>,
) -> MatchRecord {
    a.reset();
    b.reset();
    let mut rng_a = rng_from_seed(combine(cfg.seed, 0));
    let mut rng_b = rng_from_seed(combine(cfg.seed, 1));
    let noise = cfg.noise;

    let mut actions_a = Vec::with_capacity(cfg.turns);
    let mut actions_b = Vec::with_capacity(cfg.turns);
    let (mut payoff_a, mut payoff_b) = (0.0, 0.0);

    for turn in 0..cfg.turns {
        let (chosen_a, chosen_b) = if turn == 0 {
            (a.opening(&mut rng_a), b.opening(&mut rng_b))
        } else {
            let (la, lb) = (actions_a[turn - 1], actions_b[turn - 1]);
            (a.respond(la, lb, &mut rng_a), b.respond(lb, la, &mut rng_b))
        };
        let played_a = apply_noise(chosen_a, noise, &mut rng_a);
        let played_b = apply_noise(chosen_b, noise, &mut rng_b);

        let (sa, sb) = m.payoff_pair(played_a, played_b);
        payoff_a += sa;
        payoff_b += sb;
        actions_a.push(played_a);
        actions_b.push(played_b);

        if let Some(t) = trace.as_deref_mut() {
            t.push(TurnTrace {
                turn: turn + 1,
                state_a: a.current_state(),
                state_b: b.current_state(),
                action_a: played_a,
                action_b: played_b,
            });
        }
    }

    MatchRecord {
        actions_a,
        actions_b,
        payoff_a,
        payoff_b,
    }
}

fn apply_noise(action: Action, noise: f64, rng: &mut ChaCha8Rng) -> Action {
    // No draw at zero noise, so noiseless matches leave the stream to the
    // strategies alone.
    if noise > 0.0 && rng.gen::<f64>() < noise {
        action.flip()
    } else {
        action
    }
}

//! Built-in strategies and the registry that resolves names to players.
//!
//! The registry holds the hand-designed and evolved machines (shipped as
//! golden `.fsm` files and checked against their SHA-256 digests when the
//! registry is built) plus a small field of classic opponents.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::ZooError;
use crate::fsm::{parse_fsm, serialize_fsm, FsmDraft, FsmPlayer, FsmSpec};
use crate::game::{Action, Strategy};

/// Golden machine files with their SHA-256 digests.
const GOLDEN_MACHINES: &[(&str, &str, &str)] = &[
    (
        "FirstPrac",
        include_str!("../strategies/firstprac.fsm"),
        "23e24bc26f60cbaee1cd446f613b4ac56dcf493526a28beee5597bf46cf2acf3",
    ),
    (
        "SecondPrac",
        include_str!("../strategies/secondprac.fsm"),
        "37f70116307369d98fb8d01da935e74d8440cdee586aaec7b446acc09d6c308c",
    ),
    (
        "SecondPrac2",
        include_str!("../strategies/secondprac2.fsm"),
        "6516310220306a5efbc5f26177f6d530d85f9ec1124ed6684344928bc5d86438",
    ),
    (
        "SecondPrac3",
        include_str!("../strategies/secondprac3.fsm"),
        "6e1c1600e83d56aafd1e87d4f252c01810ea574b9d035a774a03deefff3118fd",
    ),
    (
        "FourthPrac",
        include_str!("../strategies/fourthprac.fsm"),
        "e32b588174816d7e45114cc341b753e2f082e5ee86dc90024b40349efa10b4d7",
    ),
    (
        "EvolvedFSM8",
        include_str!("../strategies/evolvedfsm8.fsm"),
        "3e5cf0a39f89ebf0d6886a15ed5ec4876307b2eb9b0b3db9546169113007bc21",
    ),
    (
        "EvolvedFSM6",
        include_str!("../strategies/evolvedfsm6.fsm"),
        "8efe56ff7cb424f3b8048a466b305ea1d4a275639981909725baa200d7818afb",
    ),
];

/// Canonical text of a built-in machine, byte for byte as shipped.
pub fn golden_text(name: &str) -> Option<&'static str> {
    GOLDEN_MACHINES
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, text, _)| *text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Fsm,
    Behavioral,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StrategyId {
    pub name: String,
    pub kind: StrategyKind,
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Classic history-driven strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Behavior {
    Cooperator,
    Defector,
    TitForTat,
    /// Defects only after two consecutive opponent defections.
    TitForTwoTats,
    /// Cooperates until the opponent's first defection, then defects forever.
    Grudger,
    /// C, D, C, D, ...
    Alternator,
    /// Repeats its last move after a t or r payoff (the opponent cooperated),
    /// switches otherwise.
    WinStayLoseShift,
}

impl Behavior {
    pub fn name(self) -> &'static str {
        match self {
            Behavior::Cooperator => "Cooperator",
            Behavior::Defector => "Defector",
            Behavior::TitForTat => "TitForTat",
            Behavior::TitForTwoTats => "TitForTwoTats",
            Behavior::Grudger => "Grudger",
            Behavior::Alternator => "Alternator",
            Behavior::WinStayLoseShift => "WinStayLoseShift",
        }
    }

    pub const ALL: [Behavior; 7] = [
        Behavior::Cooperator,
        Behavior::Defector,
        Behavior::TitForTat,
        Behavior::TitForTwoTats,
        Behavior::Grudger,
        Behavior::Alternator,
        Behavior::WinStayLoseShift,
    ];

    /// The same strategy written as a machine of at most two states.
    pub fn as_fsm(self) -> FsmSpec {
        use Action::{C, D};
        let d = FsmDraft::new(self.name(), 1, C);
        let d = match self {
            Behavior::Cooperator => d.row(1, (1, C), (1, C)),
            Behavior::Defector => FsmDraft::new(self.name(), 1, D).row(1, (1, D), (1, D)),
            Behavior::TitForTat => d.row(1, (1, C), (1, D)),
            Behavior::TitForTwoTats => d.row(1, (1, C), (2, C)).row(2, (1, C), (2, D)),
            Behavior::Grudger => d.row(1, (1, C), (2, D)).row(2, (2, D), (2, D)),
            Behavior::Alternator => d.row(1, (2, D), (2, D)).row(2, (1, C), (1, C)),
            // State = own last move.
            Behavior::WinStayLoseShift => d.row(1, (1, C), (2, D)).row(2, (2, D), (1, C)),
        };
        d.build().expect("classic encodings are valid")
    }
}

#[derive(Debug, Clone)]
pub struct BehavioralPlayer {
    behavior: Behavior,
    opp_prev: Option<Action>,
    grudge: bool,
}

impl BehavioralPlayer {
    pub fn new(behavior: Behavior) -> Self {
        BehavioralPlayer {
            behavior,
            opp_prev: None,
            grudge: false,
        }
    }
}

impl Strategy for BehavioralPlayer {
    fn name(&self) -> &str {
        self.behavior.name()
    }

    fn reset(&mut self) {
        self.opp_prev = None;
        self.grudge = false;
    }

    fn opening(&mut self, _: &mut ChaCha8Rng) -> Action {
        self.reset();
        match self.behavior {
            Behavior::Defector => Action::D,
            _ => Action::C,
        }
    }

    fn respond(&mut self, own_last: Action, opp_last: Action, _: &mut ChaCha8Rng) -> Action {
        use Action::{C, D};
        let two_back = self.opp_prev.replace(opp_last);
        match self.behavior {
            Behavior::Cooperator => C,
            Behavior::Defector => D,
            Behavior::TitForTat => opp_last,
            Behavior::TitForTwoTats => {
                if opp_last == D && two_back == Some(D) {
                    D
                } else {
                    C
                }
            }
            Behavior::Grudger => {
                self.grudge |= opp_last == D;
                if self.grudge {
                    D
                } else {
                    C
                }
            }
            Behavior::Alternator => own_last.flip(),
            Behavior::WinStayLoseShift => {
                if opp_last == C {
                    own_last
                } else {
                    own_last.flip()
                }
            }
        }
    }
}

/// Cooperates with a fixed probability each turn.
#[derive(Debug, Clone)]
pub struct RandomPlayer {
    name: String,
    p_cooperate: f64,
}

impl RandomPlayer {
    pub fn new(p_cooperate: f64) -> Self {
        RandomPlayer {
            name: format!("Random({p_cooperate})"),
            p_cooperate,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Action {
        if rng.gen::<f64>() < self.p_cooperate {
            Action::C
        } else {
            Action::D
        }
    }
}

impl Strategy for RandomPlayer {
    fn name(&self) -> &str {
        &self.name
    }
    fn reset(&mut self) {}
    fn opening(&mut self, rng: &mut ChaCha8Rng) -> Action {
        self.draw(rng)
    }
    fn respond(&mut self, _: Action, _: Action, rng: &mut ChaCha8Rng) -> Action {
        self.draw(rng)
    }
}

/// Produces fresh players of one strategy.
#[derive(Debug, Clone)]
pub enum StrategyFactory {
    Fsm(Arc<FsmSpec>),
    Behavioral(Behavior),
    Random { p_cooperate: f64 },
}

impl StrategyFactory {
    pub fn instantiate(&self) -> Box<dyn Strategy> {
        match self {
            StrategyFactory::Fsm(spec) => Box::new(FsmPlayer::new(Arc::clone(spec))),
            StrategyFactory::Behavioral(b) => Box::new(BehavioralPlayer::new(*b)),
            StrategyFactory::Random { p_cooperate } => Box::new(RandomPlayer::new(*p_cooperate)),
        }
    }

    pub fn kind(&self) -> StrategyKind {
        match self {
            StrategyFactory::Fsm(_) => StrategyKind::Fsm,
            StrategyFactory::Behavioral(_) => StrategyKind::Behavioral,
            StrategyFactory::Random { .. } => StrategyKind::Stochastic,
        }
    }

    pub fn fsm(&self) -> Option<&Arc<FsmSpec>> {
        match self {
            StrategyFactory::Fsm(spec) => Some(spec),
            _ => None,
        }
    }
}

/// Lookup key: lowercase ASCII alphanumerics only, so `titfortat`,
/// `TitForTat` and `Tit-For-Tat` all resolve to the same entry.
fn lookup_key(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

#[derive(Debug, Clone)]
struct Entry {
    id: StrategyId,
    key: String,
    factory: StrategyFactory,
}

/// Name to strategy map, in registration order.
#[derive(Debug, Clone)]
pub struct Registry {
    entries: Vec<Entry>,
}

impl Registry {
    /// The built-in roster. Fails if any golden machine file was altered.
    pub fn builtin() -> Result<Registry, ZooError> {
        let mut reg = Registry {
            entries: Vec::new(),
        };
        for b in Behavior::ALL {
            reg.insert(b.name().to_string(), StrategyFactory::Behavioral(b))?;
        }
        reg.insert(
            RandomPlayer::new(0.5).name,
            StrategyFactory::Random { p_cooperate: 0.5 },
        )?;
        for (name, text, digest) in GOLDEN_MACHINES {
            let spec = load_golden(name, text, digest)?;
            reg.insert(name.to_string(), StrategyFactory::Fsm(Arc::new(spec)))?;
        }
        Ok(reg)
    }

    /// Adds a user machine under its own name.
    pub fn register_fsm(&mut self, spec: FsmSpec) -> Result<StrategyId, ZooError> {
        let name = spec.name().to_string();
        self.insert(name, StrategyFactory::Fsm(Arc::new(spec)))
    }

    fn insert(&mut self, name: String, factory: StrategyFactory) -> Result<StrategyId, ZooError> {
        let key = lookup_key(&name);
        if key.is_empty() || self.entries.iter().any(|e| e.key == key) {
            return Err(ZooError::DuplicateName(name));
        }
        let id = StrategyId {
            name,
            kind: factory.kind(),
        };
        self.entries.push(Entry {
            id: id.clone(),
            key,
            factory,
        });
        Ok(id)
    }

    fn find(&self, name: &str) -> Result<&Entry, ZooError> {
        let key = lookup_key(name);
        // `random` is shorthand for the fair coin.
        let key = if key == "random" {
            "random05".to_string()
        } else {
            key
        };
        self.entries
            .iter()
            .find(|e| e.key == key)
            .ok_or_else(|| ZooError::UnknownStrategy {
                name: name.to_string(),
                available: self.names(),
            })
    }

    pub fn get(&self, name: &str) -> Result<&StrategyFactory, ZooError> {
        self.find(name).map(|e| &e.factory)
    }

    /// The registered id for a (possibly differently spelled) name.
    pub fn resolve(&self, name: &str) -> Result<StrategyId, ZooError> {
        self.find(name).map(|e| e.id.clone())
    }

    pub fn fsm(&self, name: &str) -> Result<Arc<FsmSpec>, ZooError> {
        match self.get(name)? {
            StrategyFactory::Fsm(spec) => Ok(Arc::clone(spec)),
            _ => Err(ZooError::UnknownStrategy {
                name: name.to_string(),
                available: self
                    .entries
                    .iter()
                    .filter(|e| e.id.kind == StrategyKind::Fsm)
                    .map(|e| e.id.name.clone())
                    .collect(),
            }),
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.name.clone()).collect()
    }

    pub fn ids(&self) -> impl Iterator<Item = &StrategyId> {
        self.entries.iter().map(|e| &e.id)
    }
}

fn load_golden(name: &str, text: &str, digest: &str) -> Result<FsmSpec, ZooError> {
    let actual: String = Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    if actual != digest {
        return Err(ZooError::ChecksumMismatch {
            name: name.to_string(),
        });
    }
    let spec = parse_fsm(text).map_err(|source| ZooError::BadBuiltin {
        name: name.to_string(),
        source,
    })?;
    if spec.name() != name || serialize_fsm(&spec) != text {
        return Err(ZooError::ChecksumMismatch {
            name: name.to_string(),
        });
    }
    Ok(spec)
}

/// Factory for a built-in strategy by name.
pub fn builtin_strategy(name: &str) -> Result<StrategyFactory, ZooError> {
    Registry::builtin()?.get(name).cloned()
}

/// The desk-scale field: classic opponents followed by every built-in
/// machine.
pub fn roster_default() -> Vec<StrategyId> {
    let mut roster: Vec<StrategyId> = Behavior::ALL
        .iter()
        .map(|b| StrategyId {
            name: b.name().to_string(),
            kind: StrategyKind::Behavioral,
        })
        .collect();
    roster.push(StrategyId {
        name: "Random(0.5)".to_string(),
        kind: StrategyKind::Stochastic,
    });
    roster.extend(GOLDEN_MACHINES.iter().map(|(name, _, _)| StrategyId {
        name: name.to_string(),
        kind: StrategyKind::Fsm,
    }));
    roster
}

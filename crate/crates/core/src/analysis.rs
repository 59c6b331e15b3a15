//! Reachability pruning and behavioral equivalence of machines.

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::fsm::{FsmSpec, StateId};
use crate::game::Action;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilityReport {
    pub reachable: BTreeSet<StateId>,
    pub unreachable: BTreeSet<StateId>,
}

/// Breadth-first closure from the start state over both opponent actions.
pub fn reachable_states(spec: &FsmSpec) -> ReachabilityReport {
    let mut reachable = BTreeSet::new();
    let mut queue = VecDeque::new();
    reachable.insert(spec.start_state());
    queue.push_back(spec.start_state());
    while let Some(s) = queue.pop_front() {
        for opp in Action::BOTH {
            let next = spec.step(s, opp).expect("valid machine").next;
            if reachable.insert(next) {
                queue.push_back(next);
            }
        }
    }
    let unreachable = spec.states().filter(|s| !reachable.contains(s)).collect();
    ReachabilityReport {
        reachable,
        unreachable,
    }
}

/// Drops every state the machine can never enter. Ids, start state and all
/// kept rows are unchanged.
pub fn prune_unreachable(spec: &FsmSpec) -> FsmSpec {
    spec.restricted_to(&reachable_states(spec).reachable)
}

/// How far to compare two machines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    /// Every finite opponent sequence. Decided on the product automaton,
    /// which has at most `|a| * |b|` reachable pairs.
    Exact,
    /// The first `n` moves of each machine (the opening plus `n - 1`
    /// responses). Must be at least 1.
    Turns(usize),
}

/// True iff `a` and `b` play identically against every opponent sequence
/// within the horizon.
pub fn behaviorally_equivalent(a: &FsmSpec, b: &FsmSpec, horizon: Horizon) -> bool {
    distinguishing_sequence(a, b, horizon).is_none()
}

/// A shortest opponent action sequence after which `a` and `b` play
/// different moves, or `None` if there is none within the horizon. An
/// empty sequence means the opening moves differ.
pub fn distinguishing_sequence(a: &FsmSpec, b: &FsmSpec, horizon: Horizon) -> Option<Vec<Action>> {
    let limit = match horizon {
        Horizon::Exact => usize::MAX,
        Horizon::Turns(n) => {
            assert!(n >= 1, "horizon must cover at least one move");
            n
        }
    };
    if a.initial_action() != b.initial_action() {
        return Some(Vec::new());
    }

    type Pair = (StateId, StateId);
    let start: Pair = (a.start_state(), b.start_state());
    // pair -> (predecessor, opponent action that led here)
    let mut parent: HashMap<Pair, Option<(Pair, Action)>> = HashMap::new();
    parent.insert(start, None);
    let mut queue = VecDeque::from([(start, 1usize)]);

    let path_to = |parent: &HashMap<Pair, Option<(Pair, Action)>>, mut at: Pair| {
        let mut seq = Vec::new();
        while let Some(Some((prev, opp))) = parent.get(&at) {
            seq.push(*opp);
            at = *prev;
        }
        seq.reverse();
        seq
    };

    while let Some((pair, moves)) = queue.pop_front() {
        if moves >= limit {
            continue;
        }
        for opp in Action::BOTH {
            let ta = a.step(pair.0, opp).expect("valid machine");
            let tb = b.step(pair.1, opp).expect("valid machine");
            if ta.own != tb.own {
                let mut seq = path_to(&parent, pair);
                seq.push(opp);
                return Some(seq);
            }
            let next = (ta.next, tb.next);
            if let Entry::Vacant(e) = parent.entry(next) {
                e.insert(Some((pair, opp)));
                queue.push_back((next, moves + 1));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsm::FsmDraft;
    use Action::{C, D};

    fn constant(name: &str, a: Action) -> FsmSpec {
        FsmDraft::new(name, 1, a)
            .row(1, (1, a), (1, a))
            .build()
            .unwrap()
    }

    #[test]
    fn single_state_is_reachable() {
        let r = reachable_states(&constant("Cooperator", C));
        assert_eq!(r.reachable, BTreeSet::from([StateId(1)]));
        assert!(r.unreachable.is_empty());
    }

    #[test]
    fn openings_distinguish_at_horizon_one() {
        let c = constant("Cooperator", C);
        let d = constant("Defector", D);
        assert!(!behaviorally_equivalent(&c, &d, Horizon::Turns(1)));
        assert_eq!(
            distinguishing_sequence(&c, &d, Horizon::Exact),
            Some(vec![])
        );
    }

    #[test]
    fn late_difference_needs_long_horizon() {
        // Counts opponent defections; defects on the third.
        let slow = FsmDraft::new("Slow", 1, C)
            .row(1, (1, C), (2, C))
            .row(2, (2, C), (3, C))
            .row(3, (3, C), (3, D))
            .build()
            .unwrap();
        let coop = constant("Cooperator", C);
        assert!(behaviorally_equivalent(&slow, &coop, Horizon::Turns(3)));
        assert!(!behaviorally_equivalent(&slow, &coop, Horizon::Turns(4)));
        assert_eq!(
            distinguishing_sequence(&slow, &coop, Horizon::Exact),
            Some(vec![D, D, D])
        );
    }

    #[test]
    fn renumbered_machine_is_equivalent() {
        let a = FsmDraft::new("A", 1, C)
            .row(1, (1, C), (2, D))
            .row(2, (1, C), (2, D))
            .build()
            .unwrap();
        let b = FsmDraft::new("B", 7, C)
            .row(7, (7, C), (3, D))
            .row(3, (7, C), (3, D))
            .build()
            .unwrap();
        assert!(behaviorally_equivalent(&a, &b, Horizon::Exact));
    }
}

//! Finite-state-machine strategies.
//!
//! A machine starts in `start_state` and plays `initial_action` on the first
//! turn. On every later turn it reads the opponent's previous action, follows
//! the transition for `(current state, opponent action)` and plays the
//! action attached to that transition. Transition labels are therefore
//! "opponent action / own action".
//!
//! Text format, one statement per line, `#` starts a comment:
//!
//! ```text
//! fsm TitForTat
//! start 1 C
//! 1 C -> 1 C
//! 1 D -> 1 D
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::error::FsmError;
use crate::game::{Action, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u32);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Where a transition leads and what the machine plays when taking it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub next: StateId,
    pub own: Action,
}

/// One row of a transition table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionEntry {
    pub state: StateId,
    pub opp: Action,
    pub next: StateId,
    pub own: Action,
}

impl TransitionEntry {
    pub fn new(state: u32, opp: Action, next: u32, own: Action) -> Self {
        TransitionEntry {
            state: StateId(state),
            opp,
            next: StateId(next),
            own,
        }
    }
}

/// A broken invariant of a machine description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingTransition {
        state: StateId,
        opp: Action,
    },
    DanglingTarget {
        state: StateId,
        opp: Action,
        target: StateId,
    },
    DuplicateTransition {
        state: StateId,
        opp: Action,
    },
    StartNotInStates(StateId),
    ZeroStateId,
    BadName(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingTransition { state, opp } => {
                write!(f, "missing transition {state}/{opp}")
            }
            Violation::DanglingTarget { state, opp, target } => {
                write!(f, "dangling target {state}/{opp}\u{2192}{target}")
            }
            Violation::DuplicateTransition { state, opp } => {
                write!(f, "duplicate transition {state}/{opp}")
            }
            Violation::StartNotInStates(s) => write!(f, "start state {s} is not a state"),
            Violation::ZeroStateId => write!(f, "state ids must be positive"),
            Violation::BadName(n) => write!(f, "invalid machine name {n:?}"),
        }
    }
}

/// Characters a machine name may not contain. They are separators in the
/// ranking, history and generation-log formats.
const RESERVED_NAME_CHARS: &[char] = &[',', '|', ';', '#'];

/// Names are single tokens free of the separators used by the file formats.
pub fn name_is_valid(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || RESERVED_NAME_CHARS.contains(&c))
}

/// An unchecked machine description, as read from text or assembled by
/// hand. [`FsmDraft::build`] turns it into an [`FsmSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct FsmDraft {
    pub name: String,
    pub start_state: StateId,
    pub initial_action: Action,
    pub entries: Vec<TransitionEntry>,
}

impl FsmDraft {
    pub fn new(name: impl Into<String>, start_state: u32, initial_action: Action) -> Self {
        FsmDraft {
            name: name.into(),
            start_state: StateId(start_state),
            initial_action,
            entries: Vec::new(),
        }
    }

    pub fn entry(mut self, state: u32, opp: Action, next: u32, own: Action) -> Self {
        self.entries
            .push(TransitionEntry::new(state, opp, next, own));
        self
    }

    /// Adds both rows of one state: `(next, own)` on opponent C, then on D.
    pub fn row(self, state: u32, on_c: (u32, Action), on_d: (u32, Action)) -> Self {
        self.entry(state, Action::C, on_c.0, on_c.1)
            .entry(state, Action::D, on_d.0, on_d.1)
    }

    pub fn build(self) -> Result<FsmSpec, FsmError> {
        validate_fsm(&self).map_err(FsmError::Invalid)?;
        let mut table: BTreeMap<StateId, [Option<Transition>; 2]> = BTreeMap::new();
        for e in &self.entries {
            table.entry(e.state).or_default()[e.opp.index()] = Some(Transition {
                next: e.next,
                own: e.own,
            });
        }
        let table = table
            .into_iter()
            .map(|(s, [c, d])| (s, [c.expect("validated"), d.expect("validated")]))
            .collect();
        Ok(FsmSpec {
            name: self.name,
            start_state: self.start_state,
            initial_action: self.initial_action,
            table,
        })
    }
}

/// Returns every invariant the draft violates. The state set is the set of
/// states that have at least one outgoing row.
pub fn validate_fsm(draft: &FsmDraft) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    if !name_is_valid(&draft.name) {
        violations.push(Violation::BadName(draft.name.clone()));
    }

    let states: BTreeSet<StateId> = draft.entries.iter().map(|e| e.state).collect();
    if states.contains(&StateId(0))
        || draft.start_state == StateId(0)
        || draft.entries.iter().any(|e| e.next == StateId(0))
    {
        violations.push(Violation::ZeroStateId);
    }
    if !states.contains(&draft.start_state) {
        violations.push(Violation::StartNotInStates(draft.start_state));
    }

    let mut seen = BTreeSet::new();
    for e in &draft.entries {
        if !seen.insert((e.state, e.opp)) {
            violations.push(Violation::DuplicateTransition {
                state: e.state,
                opp: e.opp,
            });
        }
        if !states.contains(&e.next) && e.next != StateId(0) {
            violations.push(Violation::DanglingTarget {
                state: e.state,
                opp: e.opp,
                target: e.next,
            });
        }
    }
    for &s in &states {
        for opp in Action::BOTH {
            if !seen.contains(&(s, opp)) {
                violations.push(Violation::MissingTransition { state: s, opp });
            }
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// A complete deterministic strategy automaton. Always valid: every state
/// has a row for both opponent actions and every target is a state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FsmSpec {
    name: String,
    start_state: StateId,
    initial_action: Action,
    table: BTreeMap<StateId, [Transition; 2]>,
}

impl FsmSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn start_state(&self) -> StateId {
        self.start_state
    }

    pub fn initial_action(&self) -> Action {
        self.initial_action
    }

    /// States in ascending order.
    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.table.keys().copied()
    }

    pub fn num_states(&self) -> usize {
        self.table.len()
    }

    pub fn contains_state(&self, s: StateId) -> bool {
        self.table.contains_key(&s)
    }

    pub fn step(&self, state: StateId, opp: Action) -> Result<Transition, FsmError> {
        self.table
            .get(&state)
            .map(|row| row[opp.index()])
            .ok_or(FsmError::UnknownState(state))
    }

    /// All rows in canonical order: states ascending, C before D.
    pub fn entries(&self) -> impl Iterator<Item = TransitionEntry> + '_ {
        self.table.iter().flat_map(|(&state, row)| {
            Action::BOTH.into_iter().map(move |opp| TransitionEntry {
                state,
                opp,
                next: row[opp.index()].next,
                own: row[opp.index()].own,
            })
        })
    }

    /// Equality of everything except the name.
    pub fn same_machine(&self, other: &FsmSpec) -> bool {
        self.start_state == other.start_state
            && self.initial_action == other.initial_action
            && self.table == other.table
    }

    pub fn renamed(&self, name: impl Into<String>) -> Result<FsmSpec, FsmError> {
        let name = name.into();
        if !name_is_valid(&name) {
            return Err(FsmError::Invalid(vec![Violation::BadName(name)]));
        }
        Ok(FsmSpec {
            name,
            ..self.clone()
        })
    }

    pub fn to_draft(&self) -> FsmDraft {
        FsmDraft {
            name: self.name.clone(),
            start_state: self.start_state,
            initial_action: self.initial_action,
            entries: self.entries().collect(),
        }
    }

    /// Keeps only the listed states. Callers guarantee closure (every
    /// target of a kept state is kept, start included).
    pub(crate) fn restricted_to(&self, keep: &BTreeSet<StateId>) -> FsmSpec {
        FsmSpec {
            name: self.name.clone(),
            start_state: self.start_state,
            initial_action: self.initial_action,
            table: self
                .table
                .iter()
                .filter(|(s, _)| keep.contains(s))
                .map(|(&s, row)| (s, *row))
                .collect(),
        }
    }

    /// Mutable access for genome operators. Targets written through this
    /// must be existing states.
    pub(crate) fn table_mut(&mut self) -> &mut BTreeMap<StateId, [Transition; 2]> {
        &mut self.table
    }

    pub(crate) fn set_initial_action(&mut self, a: Action) {
        self.initial_action = a;
    }

    pub(crate) fn from_parts(
        name: String,
        start_state: StateId,
        initial_action: Action,
        table: BTreeMap<StateId, [Transition; 2]>,
    ) -> FsmSpec {
        let spec = FsmSpec {
            name,
            start_state,
            initial_action,
            table,
        };
        debug_assert!(validate_fsm(&spec.to_draft()).is_ok());
        spec
    }
}

/// Free-function form of [`FsmSpec::step`].
pub fn fsm_step(spec: &FsmSpec, state: StateId, opp: Action) -> Result<Transition, FsmError> {
    spec.step(state, opp)
}

/// Canonical text form: header, start line, then rows with states ascending
/// and the C row before the D row. Ends with a newline.
pub fn serialize_fsm(spec: &FsmSpec) -> String {
    let mut out = canonical_lines(spec).join("\n");
    out.push('\n');
    out
}

/// The canonical lines joined by `;` on a single line.
pub fn serialize_fsm_line(spec: &FsmSpec) -> String {
    canonical_lines(spec).join(";")
}

fn canonical_lines(spec: &FsmSpec) -> Vec<String> {
    let mut lines = Vec::with_capacity(2 + 2 * spec.num_states());
    lines.push(format!("fsm {}", spec.name));
    lines.push(format!(
        "start {} {}",
        spec.start_state, spec.initial_action
    ));
    lines.extend(
        spec.entries()
            .map(|e| format!("{} {} -> {} {}", e.state, e.opp, e.next, e.own)),
    );
    lines
}

/// Parses the single-line form written by [`serialize_fsm_line`].
pub fn parse_fsm_line(line: &str) -> Result<FsmSpec, FsmError> {
    parse_fsm(&line.replace(';', "\n"))
}

/// Parses the text format. Syntax errors carry a 1-based line number;
/// structural problems are reported by [`validate_fsm`].
pub fn parse_fsm(text: &str) -> Result<FsmSpec, FsmError> {
    parse_fsm_draft(text)?.build()
}

pub fn parse_fsm_draft(text: &str) -> Result<FsmDraft, FsmError> {
    let mut name = None;
    let mut start = None;
    let mut entries = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let syntax = |message: String| FsmError::Syntax {
            line: line_no,
            message,
        };

        if name.is_none() {
            match tokens.as_slice() {
                ["fsm", n] => name = Some(n.to_string()),
                _ => return Err(syntax("expected `fsm <name>`".into())),
            }
            continue;
        }
        if start.is_none() {
            match tokens.as_slice() {
                ["start", s, a] => {
                    let s = parse_state(s).map_err(syntax)?;
                    let a = parse_action(a).map_err(syntax)?;
                    start = Some((s, a));
                }
                _ => return Err(syntax("expected `start <state> <C|D>`".into())),
            }
            continue;
        }
        match tokens.as_slice() {
            [s, opp, "->", next, own] => entries.push(TransitionEntry {
                state: parse_state(s).map_err(syntax)?,
                opp: parse_action(opp).map_err(syntax)?,
                next: parse_state(next).map_err(syntax)?,
                own: parse_action(own).map_err(syntax)?,
            }),
            _ => return Err(syntax("expected `<state> <C|D> -> <state> <C|D>`".into())),
        }
    }

    let name = name.ok_or_else(|| FsmError::Syntax {
        line: 1,
        message: "missing `fsm <name>` header".into(),
    })?;
    let (start_state, initial_action) = start.ok_or_else(|| FsmError::Syntax {
        line: text.lines().count().max(1),
        message: "missing `start <state> <C|D>` line".into(),
    })?;
    Ok(FsmDraft {
        name,
        start_state,
        initial_action,
        entries,
    })
}

fn parse_state(tok: &str) -> Result<StateId, String> {
    match tok.parse::<u32>() {
        Ok(n) if n > 0 => Ok(StateId(n)),
        _ => Err(format!("state id must be a positive integer, got {tok:?}")),
    }
}

fn parse_action(tok: &str) -> Result<Action, String> {
    tok.parse::<Action>()
        .map_err(|_| format!("expected C or D, got {tok:?}"))
}

/// A playing instance of a machine.
#[derive(Debug, Clone)]
pub struct FsmPlayer {
    spec: Arc<FsmSpec>,
    state: StateId,
}

impl FsmPlayer {
    pub fn new(spec: Arc<FsmSpec>) -> Self {
        let state = spec.start_state();
        FsmPlayer { spec, state }
    }

    pub fn spec(&self) -> &FsmSpec {
        &self.spec
    }
}

impl Strategy for FsmPlayer {
    fn name(&self) -> &str {
        self.spec.name()
    }

    fn reset(&mut self) {
        self.state = self.spec.start_state();
    }

    fn opening(&mut self, _: &mut ChaCha8Rng) -> Action {
        self.state = self.spec.start_state();
        self.spec.initial_action()
    }

    fn respond(&mut self, _own_last: Action, opp_last: Action, _: &mut ChaCha8Rng) -> Action {
        let t = self
            .spec
            .step(self.state, opp_last)
            .expect("a valid machine only visits its own states");
        self.state = t.next;
        t.own
    }

    fn current_state(&self) -> Option<StateId> {
        Some(self.state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Action::{C, D};

    fn tit_for_tat() -> FsmSpec {
        FsmDraft::new("TFT", 1, C)
            .row(1, (1, C), (1, D))
            .build()
            .unwrap()
    }

    #[test]
    fn single_state_machine_is_valid() {
        let d = FsmDraft::new("one", 1, C).row(1, (1, C), (1, C));
        assert_eq!(validate_fsm(&d), Ok(()));
    }

    #[test]
    fn dangling_target_reported() {
        let d = FsmDraft::new("broken", 1, C)
            .row(1, (2, C), (2, D))
            .row(2, (1, C), (9, D));
        let v = validate_fsm(&d).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "dangling target 2/D\u{2192}9");
    }

    #[test]
    fn every_violation_is_collected() {
        let d = FsmDraft::new("bad name", 7, C)
            .entry(1, C, 1, C)
            .entry(1, C, 3, D)
            .entry(2, D, 1, C);
        let v = validate_fsm(&d).unwrap_err();
        assert!(v.contains(&Violation::BadName("bad name".into())));
        assert!(v.contains(&Violation::StartNotInStates(StateId(7))));
        assert!(v.contains(&Violation::DuplicateTransition {
            state: StateId(1),
            opp: C
        }));
        assert!(v.contains(&Violation::DanglingTarget {
            state: StateId(1),
            opp: C,
            target: StateId(3)
        }));
        assert!(v.contains(&Violation::MissingTransition {
            state: StateId(1),
            opp: D
        }));
        assert!(v.contains(&Violation::MissingTransition {
            state: StateId(2),
            opp: C
        }));
    }

    #[test]
    fn step_unknown_state_errors() {
        let t = tit_for_tat();
        assert_eq!(
            t.step(StateId(4), C),
            Err(FsmError::UnknownState(StateId(4)))
        );
        assert_eq!(
            fsm_step(&t, StateId(1), D).unwrap(),
            Transition {
                next: StateId(1),
                own: D
            }
        );
    }

    #[test]
    fn serialize_is_canonical() {
        // Rows given out of order come back sorted.
        let spec = FsmDraft::new("two", 2, D)
            .entry(2, D, 1, C)
            .entry(1, D, 2, D)
            .entry(2, C, 2, D)
            .entry(1, C, 1, C)
            .build()
            .unwrap();
        assert_eq!(
            serialize_fsm(&spec),
            "fsm two\nstart 2 D\n1 C -> 1 C\n1 D -> 2 D\n2 C -> 2 D\n2 D -> 1 C\n"
        );
        assert_eq!(
            serialize_fsm_line(&spec),
            "fsm two;start 2 D;1 C -> 1 C;1 D -> 2 D;2 C -> 2 D;2 D -> 1 C"
        );
        assert_eq!(parse_fsm_line(&serialize_fsm_line(&spec)).unwrap(), spec);
    }

    #[test]
    fn parse_accepts_comments_and_blank_lines() {
        let text =
            "# tit for tat\n\nfsm TFT   # name\nstart 1 C\n1 C -> 1 C\n\n1 D -> 1 D # retaliate\n";
        assert_eq!(parse_fsm(text).unwrap(), tit_for_tat());
    }

    #[test]
    fn parse_reports_missing_row() {
        let err = parse_fsm("fsm x\nstart 1 C\n1 C -> 2 C\n").unwrap_err();
        match err {
            FsmError::Invalid(v) => assert!(v.contains(&Violation::MissingTransition {
                state: StateId(1),
                opp: D
            })),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_syntax_errors_carry_line_numbers() {
        let cases = [
            ("start 1 C\n", 1),
            ("fsm x\nbegin 1 C\n", 2),
            ("fsm x\nstart 1 C\n1 C -> 1 C\n1 X -> 1 C\n", 4),
            ("fsm x\nstart 0 C\n", 2),
            ("fsm x\nstart 1 C\n1 C => 1 C\n", 3),
            ("fsm a b\n", 1),
        ];
        for (text, line) in cases {
            match parse_fsm(text) {
                Err(FsmError::Syntax { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(matches!(parse_fsm(""), Err(FsmError::Syntax { .. })));
        assert!(matches!(parse_fsm("fsm x\n"), Err(FsmError::Syntax { .. })));
    }

    #[test]
    fn renamed_rejects_separators() {
        let t = tit_for_tat();
        assert!(t.renamed("a,b").is_err());
        assert!(t.renamed("a b").is_err());
        let r = t.renamed("Other").unwrap();
        assert!(r.same_machine(&t));
        assert_ne!(r, t);
    }
}

//! Test-only oracles. Nothing here calls into the crate's interpreter,
//! parser or analysis code.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

/// Hand-transcribed machine tables: `state: C→next/own, D→next/own; ...`.
pub const FIRST_PRAC: (&str, u32, char, &str) = (
    "FirstPrac",
    1,
    'C',
    "1: C→2/C, D→3/C; 2: C→1/C, D→3/C; 3: C→2/C, D→4/D; 4: C→5/C, D→6/D; 5: C→2/C, D→3/D; 6: C→2/C, D→7/D; 7: C→4/D, D→8/D; 8: C→4/C, D→4/D",
);
pub const SECOND_PRAC: (&str, u32, char, &str) = (
    "SecondPrac",
    1,
    'C',
    "1: C→2/C, D→3/D; 2: C→1/C, D→4/D; 3: C→4/C, D→5/D; 4: C→5/C, D→6/D; 5: C→2/C, D→9/C; 6: C→5/D, D→7/D; 7: C→5/C, D→8/D; 8: C→5/D, D→5/C; 9: C→2/C, D→10/C; 10: C→2/C, D→4/D",
);
pub const FOURTH_PRAC: (&str, u32, char, &str) = (
    "FourthPrac",
    1,
    'C',
    "1: C→2/C, D→3/D; 2: C→1/C, D→4/D; 3: C→4/C, D→5/D; 4: C→5/D, D→6/C; 5: C→5/D, D→7/D; 6: C→2/D, D→9/C; 7: C→5/D, D→8/D; 8: C→5/D, D→5/C; 9: C→2/C, D→10/C; 10: C→2/D, D→4/C",
);
pub const EVOLVED_FSM8: (&str, u32, char, &str) = (
    "EvolvedFSM8",
    5,
    'C',
    "1: C→3/C, D→8/C; 2: C→1/D, D→5/D; 3: C→3/D, D→8/D; 4: C→7/D, D→5/C; 5: C→5/C, D→7/D; 6: C→3/D, D→8/D; 7: C→4/C, D→6/D; 8: C→3/C, D→4/D",
);
pub const EVOLVED_FSM6: (&str, u32, char, &str) = (
    "EvolvedFSM6",
    5,
    'C',
    "3: C→3/D, D→8/D; 4: C→7/D, D→5/C; 5: C→5/C, D→7/D; 6: C→3/D, D→8/D; 7: C→4/C, D→6/D; 8: C→3/C, D→4/D",
);

pub type Table = BTreeMap<(u32, char), (u32, char)>;

#[derive(Debug, Clone)]
pub struct Oracle {
    pub name: String,
    pub start: u32,
    pub initial: char,
    pub table: Table,
}

pub fn oracle(def: (&str, u32, char, &str)) -> Oracle {
    let mut table = Table::new();
    for part in def.3.split(';') {
        let (state, rest) = part.trim().split_once(':').unwrap();
        let state: u32 = state.trim().parse().unwrap();
        for edge in rest.split(',') {
            let edge = edge.trim();
            let opp = edge.chars().next().unwrap();
            let (next, own) = edge.split_once('→').unwrap().1.split_once('/').unwrap();
            table.insert(
                (state, opp),
                (next.parse().unwrap(), own.chars().next().unwrap()),
            );
        }
    }
    Oracle {
        name: def.0.to_string(),
        start: def.1,
        initial: def.2,
        table,
    }
}

impl Oracle {
    pub fn with_entry(mut self, name: &str, state: u32, opp: char, next: u32, own: char) -> Self {
        self.name = name.to_string();
        self.table.insert((state, opp), (next, own));
        self
    }

    pub fn states(&self) -> BTreeSet<u32> {
        self.table.keys().map(|k| k.0).collect()
    }

    /// Reachable set by naive fixpoint iteration.
    pub fn reachable(&self) -> BTreeSet<u32> {
        let mut set = BTreeSet::from([self.start]);
        loop {
            let grown: BTreeSet<u32> = set
                .iter()
                .flat_map(|&s| ['C', 'D'].map(|o| self.table[&(s, o)].0))
                .chain(set.iter().copied())
                .collect();
            if grown == set {
                return set;
            }
            set = grown;
        }
    }

    /// Own moves against a fixed opponent sequence (the opponent's move at
    /// turn k is `opp[k]`).
    pub fn play_against(&self, opp: &[char]) -> Vec<char> {
        let mut out = Vec::new();
        let mut state = self.start;
        for k in 0..opp.len() {
            if k == 0 {
                out.push(self.initial);
            } else {
                let (next, own) = self.table[&(state, opp[k - 1])];
                state = next;
                out.push(own);
            }
        }
        out
    }

    /// Canonical text written by hand from the table.
    pub fn canonical_text(&self) -> String {
        let mut s = format!("fsm {}\nstart {} {}\n", self.name, self.start, self.initial);
        for ((state, opp), (next, own)) in &self.table {
            s.push_str(&format!("{state} {opp} -> {next} {own}\n"));
        }
        s
    }
}

/// Simulates two oracles against each other, returning both move strings.
pub fn duel(a: &Oracle, b: &Oracle, turns: usize) -> (String, String) {
    let (mut sa, mut sb) = (a.start, b.start);
    let (mut ma, mut mb) = (vec![a.initial], vec![b.initial]);
    for k in 1..turns {
        let (na, oa) = a.table[&(sa, mb[k - 1])];
        let (nb, ob) = b.table[&(sb, ma[k - 1])];
        sa = na;
        sb = nb;
        ma.push(oa);
        mb.push(ob);
    }
    (ma.into_iter().collect(), mb.into_iter().collect())
}

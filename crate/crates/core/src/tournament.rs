//! Round-robin tournaments, median ranking and the memory-one
//! cooperation-rate profiler.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{HistoryError, TournamentError};
use crate::game::{
    actions_from_str, actions_to_string, play_match, Action, MatchConfig, MatchRecord, PayoffMatrix,
};
use crate::seed::match_seed;
use crate::zoo::{Registry, StrategyFactory};

#[derive(Debug, Clone, PartialEq)]
pub struct TournamentConfig {
    pub roster: Vec<String>,
    pub turns: usize,
    pub repetitions: usize,
    pub noise: f64,
    pub master_seed: u64,
    pub include_self_matches: bool,
    pub payoffs: PayoffMatrix,
}

impl TournamentConfig {
    /// Noise 0, seed 0, no self-matches, default payoffs.
    pub fn new<S: Into<String>>(
        roster: impl IntoIterator<Item = S>,
        turns: usize,
        repetitions: usize,
    ) -> Self {
        TournamentConfig {
            roster: roster.into_iter().map(Into::into).collect(),
            turns,
            repetitions,
            noise: 0.0,
            master_seed: 0,
            include_self_matches: false,
            payoffs: PayoffMatrix::default(),
        }
    }
}

/// One played match. `name_a <= name_b` lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchEntry {
    pub name_a: String,
    pub name_b: String,
    pub repetition: usize,
    pub record: MatchRecord,
}

/// Normalized scores of one player, one per repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerScores {
    pub name: String,
    pub per_repetition: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingRow {
    pub rank: usize,
    pub name: String,
    pub median_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TournamentResult {
    /// In roster order.
    pub players: Vec<PlayerScores>,
    /// Sorted by pair names, then repetition.
    pub histories: Vec<MatchEntry>,
    pub ranking: Vec<RankingRow>,
    pub turns: usize,
    pub include_self_matches: bool,
}

impl TournamentResult {
    pub fn scores_of(&self, name: &str) -> Option<&[f64]> {
        self.players
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.per_repetition.as_slice())
    }
}

struct Job<'a> {
    idx_a: usize,
    idx_b: usize,
    repetition: usize,
    factory_a: &'a StrategyFactory,
    factory_b: &'a StrategyFactory,
}

/// Plays every unordered pair of the roster (and each player against
/// itself if configured) once per repetition.
///
/// A player's normalized score for a repetition is its total payoff in that
/// repetition divided by `turns * opponents`. Each match is seeded from
/// `(master_seed, pair names, repetition)` and played with the
/// lexicographically smaller name as player a, so results do not depend on
/// roster order or scheduling.
pub fn run_tournament(
    cfg: &TournamentConfig,
    registry: &Registry,
) -> Result<TournamentResult, TournamentError> {
    if cfg.roster.len() < 2 {
        return Err(TournamentError::RosterTooSmall(cfg.roster.len()));
    }
    if cfg.repetitions == 0 {
        return Err(TournamentError::ZeroRepetitions);
    }
    let match_cfg = MatchConfig::new(cfg.turns, cfg.noise, 0)?;

    let mut names = Vec::with_capacity(cfg.roster.len());
    let mut factories = Vec::with_capacity(cfg.roster.len());
    for raw in &cfg.roster {
        let id = registry.resolve(raw)?;
        if names.contains(&id.name) {
            return Err(TournamentError::DuplicateEntrant(id.name));
        }
        factories.push(registry.get(&id.name)?);
        names.push(id.name);
    }

    let n = names.len();
    let mut jobs = Vec::new();
    for i in 0..n {
        for j in i..n {
            if i == j && !cfg.include_self_matches {
                continue;
            }
            let (a, b) = if names[i] <= names[j] { (i, j) } else { (j, i) };
            for repetition in 0..cfg.repetitions {
                jobs.push(Job {
                    idx_a: a,
                    idx_b: b,
                    repetition,
                    factory_a: factories[a],
                    factory_b: factories[b],
                });
            }
        }
    }
    jobs.sort_by(|x, y| {
        (&names[x.idx_a], &names[x.idx_b], x.repetition).cmp(&(
            &names[y.idx_a],
            &names[y.idx_b],
            y.repetition,
        ))
    });

    let records: Vec<MatchRecord> = jobs
        .par_iter()
        .map(|job| {
            let seed = match_seed(
                cfg.master_seed,
                &names[job.idx_a],
                &names[job.idx_b],
                job.repetition,
            );
            let mut a = job.factory_a.instantiate();
            let mut b = job.factory_b.instantiate();
            play_match(
                a.as_mut(),
                b.as_mut(),
                &match_cfg.with_seed(seed),
                &cfg.payoffs,
            )
        })
        .collect();

    // Aggregate sequentially in canonical order.
    let mut totals = vec![vec![0.0f64; cfg.repetitions]; n];
    let mut histories = Vec::with_capacity(jobs.len());
    for (job, record) in jobs.iter().zip(records) {
        totals[job.idx_a][job.repetition] += record.payoff_a;
        if job.idx_a != job.idx_b {
            totals[job.idx_b][job.repetition] += record.payoff_b;
        }
        histories.push(MatchEntry {
            name_a: names[job.idx_a].clone(),
            name_b: names[job.idx_b].clone(),
            repetition: job.repetition,
            record,
        });
    }

    let opponents = (n - 1 + usize::from(cfg.include_self_matches)) as f64;
    let denom = cfg.turns as f64 * opponents;
    let players: Vec<PlayerScores> = names
        .into_iter()
        .zip(totals)
        .map(|(name, t)| PlayerScores {
            name,
            per_repetition: t.into_iter().map(|x| x / denom).collect(),
        })
        .collect();

    let mut result = TournamentResult {
        players,
        histories,
        ranking: Vec::new(),
        turns: cfg.turns,
        include_self_matches: cfg.include_self_matches,
    };
    result.ranking = median_ranking(&result);
    Ok(result)
}

/// Median of a non-empty sample; the mean of the middle pair for even sizes.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// Players by median normalized score, descending. Ties keep roster order.
pub fn median_ranking(result: &TournamentResult) -> Vec<RankingRow> {
    let mut rows: Vec<(String, f64)> = result
        .players
        .iter()
        .map(|p| (p.name.clone(), median(&p.per_repetition)))
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));
    rows.into_iter()
        .enumerate()
        .map(|(i, (name, median_score))| RankingRow {
            rank: i + 1,
            name,
            median_score,
        })
        .collect()
}

/// Writes `Rank,Name,Median Score` with nine fractional digits. Returns the
/// number of data rows.
pub fn write_ranking_csv<W: Write>(ranking: &[RankingRow], mut out: W) -> io::Result<usize> {
    writeln!(out, "Rank,Name,Median Score")?;
    for row in ranking {
        writeln!(out, "{},{},{:.9}", row.rank, row.name, row.median_score)?;
    }
    out.flush()?;
    Ok(ranking.len())
}

/// One line per match: `name_a|name_b|rep|actions_a|actions_b|payoff_a|payoff_b`.
pub fn write_history_dump<W: Write>(histories: &[MatchEntry], mut out: W) -> io::Result<usize> {
    for h in histories {
        writeln!(
            out,
            "{}|{}|{}|{}|{}|{}|{}",
            h.name_a,
            h.name_b,
            h.repetition,
            actions_to_string(&h.record.actions_a),
            actions_to_string(&h.record.actions_b),
            h.record.payoff_a,
            h.record.payoff_b
        )?;
    }
    out.flush()?;
    Ok(histories.len())
}

pub fn parse_history_dump(text: &str) -> Result<Vec<MatchEntry>, HistoryError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| HistoryError {
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split('|').collect();
        let [a, b, rep, acts_a, acts_b, pay_a, pay_b] = fields.as_slice() else {
            return Err(err(format!("expected 7 fields, found {}", fields.len())));
        };
        let actions_a = actions_from_str(acts_a).map_err(|e| err(e.to_string()))?;
        let actions_b = actions_from_str(acts_b).map_err(|e| err(e.to_string()))?;
        if actions_a.len() != actions_b.len() {
            return Err(err("action sequences differ in length".into()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
        out.push(MatchEntry {
            name_a: a.to_string(),
            name_b: b.to_string(),
            repetition: rep.parse().map_err(|e| err(format!("{rep:?}: {e}")))?,
            record: MatchRecord {
                actions_a,
                actions_b,
                payoff_a: num(pay_a)?,
                payoff_b: num(pay_b)?,
            },
        });
    }
    Ok(out)
}

/// Cooperations observed after one memory-one context.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ContextStats {
    pub count: usize,
    pub cooperations: usize,
}

impl ContextStats {
    /// `None` when the context never occurred.
    pub fn rate(&self) -> Option<f64> {
        (self.count > 0).then(|| self.cooperations as f64 / self.count as f64)
    }
}

/// Memory-one contexts `[own last, opponent last]` in report order.
pub const CONTEXTS: [(Action, Action); 4] = [
    (Action::C, Action::C),
    (Action::C, Action::D),
    (Action::D, Action::C),
    (Action::D, Action::D),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooperationReport {
    pub player: String,
    /// Indexed like [`CONTEXTS`].
    pub contexts: [ContextStats; 4],
}

impl CooperationReport {
    pub fn context(&self, own: Action, opp: Action) -> ContextStats {
        self.contexts[own.index() * 2 + opp.index()]
    }

    pub fn total(&self) -> usize {
        self.contexts.iter().map(|c| c.count).sum()
    }
}

/// For every turn after the first of every match involving `player`,
/// classifies the previous turn as `[own, opponent]` and counts whether the
/// player cooperated. Self-matches contribute both sides.
pub fn cooperation_rates(histories: &[MatchEntry], player: &str) -> CooperationReport {
    let mut contexts = [ContextStats::default(); 4];
    let mut tally = |own: &[Action], opp: &[Action]| {
        for k in 1..own.len() {
            let c = &mut contexts[own[k - 1].index() * 2 + opp[k - 1].index()];
            c.count += 1;
            c.cooperations += usize::from(own[k] == Action::C);
        }
    };
    for h in histories {
        if h.name_a == player {
            tally(&h.record.actions_a, &h.record.actions_b);
        }
        if h.name_b == player {
            tally(&h.record.actions_b, &h.record.actions_a);
        }
    }
    CooperationReport {
        player: player.to_string(),
        contexts,
    }
}

/// `Name,Context,Count,Cooperations,Rate` rows; the rate is empty for
/// contexts that never occurred.
pub fn write_cooperation_csv<W: Write>(
    reports: &[CooperationReport],
    mut out: W,
) -> io::Result<usize> {
    writeln!(out, "Name,Context,Count,Cooperations,Rate")?;
    let mut rows = 0;
    for r in reports {
        for (i, (own, opp)) in CONTEXTS.iter().enumerate() {
            let c = r.contexts[i];
            let rate = c.rate().map(|x| format!("{x:.9}")).unwrap_or_default();
            writeln!(
                out,
                "{},[{own}{opp}],{},{},{rate}",
                r.player, c.count, c.cooperations
            )?;
            rows += 1;
        }
    }
    out.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_examples() {
        assert_eq!(median(&[2.8, 3.0, 2.9]), 2.9);
        assert!((median(&[2.8, 3.0]) - 2.9).abs() < 1e-15);
        assert_eq!(median(&[1.25]), 1.25);
    }

    #[test]
    fn ranking_ties_keep_roster_order() {
        let result = TournamentResult {
            players: vec![
                PlayerScores {
                    name: "B".into(),
                    per_repetition: vec![1.0],
                },
                PlayerScores {
                    name: "A".into(),
                    per_repetition: vec![2.0],
                },
                PlayerScores {
                    name: "C".into(),
                    per_repetition: vec![1.0],
                },
            ],
            histories: vec![],
            ranking: vec![],
            turns: 1,
            include_self_matches: false,
        };
        let names: Vec<_> = median_ranking(&result)
            .into_iter()
            .map(|r| (r.rank, r.name))
            .collect();
        assert_eq!(
            names,
            vec![(1, "A".into()), (2, "B".into()), (3, "C".into())]
        );
    }

    #[test]
    fn ranking_csv_format() {
        let rows = vec![
            RankingRow {
                rank: 1,
                name: "X".into(),
                median_score: 2.885947477,
            },
            RankingRow {
                rank: 2,
                name: "Y".into(),
                median_score: 1.0 / 3.0,
            },
        ];
        let mut buf = Vec::new();
        assert_eq!(write_ranking_csv(&rows, &mut buf).unwrap(), 2);
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "Rank,Name,Median Score\n1,X,2.885947477\n2,Y,0.333333333\n"
        );
    }

    #[test]
    fn history_dump_rejects_bad_lines() {
        assert_eq!(parse_history_dump("a|b|0|CC|CD|3|8\n").unwrap().len(), 1);
        assert_eq!(parse_history_dump("a|b|0|CC|CD|3\n").unwrap_err().line, 1);
        assert_eq!(
            parse_history_dump("\na|b|0|CX|CD|3|8\n").unwrap_err().line,
            2
        );
        assert!(parse_history_dump("a|b|0|CCC|CD|3|8\n").is_err());
        assert!(parse_history_dump("a|b|x|CC|CD|3|8\n").is_err());
    }

    #[test]
    fn empty_context_has_no_rate() {
        assert_eq!(ContextStats::default().rate(), None);
        let c = ContextStats {
            count: 4,
            cooperations: 1,
        };
        assert_eq!(c.rate(), Some(0.25));
    }
}

//! Elitist evolutionary search over machine genomes.
//!
//! Each generation every genome is scored against a fixed opponent roster,
//! the best `bottleneck` genomes survive unchanged (and keep their scores),
//! and the population is refilled with mutated copies of uniformly chosen
//! survivors. There is no crossover.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{EvolutionError, FsmError};
use crate::fsm::{name_is_valid, parse_fsm_line, serialize_fsm_line, FsmSpec, StateId, Transition};
use crate::game::{play_match, Action, MatchConfig, PayoffMatrix};
use crate::seed::{combine, hash_str, rng_from_seed};
use crate::zoo::{roster_default, Registry, StrategyFactory};

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionParams {
    pub population_size: usize,
    pub bottleneck: usize,
    pub mutation_rate: f64,
    pub generations: usize,
    pub num_states: usize,
    pub turns: usize,
    pub repetitions: usize,
    pub noise: f64,
    pub opponent_roster: Vec<String>,
    pub seed: u64,
    pub payoffs: PayoffMatrix,
    /// Name given to random and mutated genomes.
    pub genome_name: String,
    /// Recorded in run metadata only. The search does not use it.
    pub moran_processes: u32,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        EvolutionParams {
            population_size: 40,
            bottleneck: 10,
            mutation_rate: 0.1,
            generations: 500,
            num_states: 10,
            turns: 20,
            repetitions: 10,
            noise: 0.0,
            opponent_roster: roster_default().into_iter().map(|id| id.name).collect(),
            seed: 0,
            payoffs: PayoffMatrix::default(),
            genome_name: "EvolvedFSM".to_string(),
            moran_processes: 4,
        }
    }
}

impl EvolutionParams {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |m: &str| Err(EvolutionError::BadParams(m.to_string()));
        if self.bottleneck == 0 || self.bottleneck > self.population_size {
            return bad("bottleneck must be between 1 and the population size");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("mutation rate must lie in [0, 1]");
        }
        if self.num_states == 0 {
            return bad("genomes need at least one state");
        }
        if self.repetitions == 0 {
            return bad("at least one repetition is required");
        }
        if self.opponent_roster.is_empty() {
            return bad("the opponent roster is empty");
        }
        if !name_is_valid(&self.genome_name) {
            return bad("genome name must be a non-empty token without , | ; #");
        }
        if u32::try_from(self.num_states).is_err() {
            return bad("too many states");
        }
        MatchConfig::new(self.turns, self.noise, 0)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub index: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_genome: FsmSpec,
}

/// A genome with its fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub genome: FsmSpec,
    pub fitness: f64,
}

#[derive(Debug, Clone)]
pub struct EvolutionOutcome {
    pub best: FsmSpec,
    pub best_fitness: f64,
    pub log: Vec<GenerationRecord>,
}

/// Independently for every row: flip the emitted action with probability
/// `rate`, and with probability `rate` retarget to a uniformly chosen state
/// (possibly the same one). The initial action flips with probability
/// `rate`. The start state and state set never change.
pub fn mutate_fsm<R: Rng + ?Sized>(spec: &FsmSpec, rate: f64, rng: &mut R) -> FsmSpec {
    let states: Vec<StateId> = spec.states().collect();
    let mut out = spec.clone();
    for row in out.table_mut().values_mut() {
        for t in row.iter_mut() {
            if rng.gen::<f64>() < rate {
                t.own = t.own.flip();
            }
            if rng.gen::<f64>() < rate {
                t.next = states[rng.gen_range(0..states.len())];
            }
        }
    }
    if rng.gen::<f64>() < rate {
        let flipped = out.initial_action().flip();
        out.set_initial_action(flipped);
    }
    out
}

fn random_action<R: Rng + ?Sized>(rng: &mut R) -> Action {
    if rng.gen::<bool>() {
        Action::C
    } else {
        Action::D
    }
}

fn random_transition<R: Rng + ?Sized>(states: &[StateId], rng: &mut R) -> Transition {
    Transition {
        next: states[rng.gen_range(0..states.len())],
        own: random_action(rng),
    }
}

/// A uniformly random machine on states `1..=num_states`.
pub fn random_genome<R: Rng + ?Sized>(name: &str, num_states: usize, rng: &mut R) -> FsmSpec {
    let states: Vec<StateId> = (1..=num_states as u32).map(StateId).collect();
    let table: BTreeMap<_, _> = states
        .iter()
        .map(|&s| {
            let c = random_transition(&states, rng);
            let d = random_transition(&states, rng);
            (s, [c, d])
        })
        .collect();
    let start = states[rng.gen_range(0..states.len())];
    FsmSpec::from_parts(name.to_string(), start, random_action(rng), table)
}

/// Adds fresh states (ids above the current maximum) with random rows
/// until the machine has `num_states` states. No existing row points at
/// them, so behavior is unchanged until mutation wires them in.
pub fn pad_genome<R: Rng + ?Sized>(spec: &FsmSpec, num_states: usize, rng: &mut R) -> FsmSpec {
    let missing = num_states.saturating_sub(spec.num_states());
    if missing == 0 {
        return spec.clone();
    }
    let max = spec.states().last().map_or(0, |s| s.0);
    let fresh: Vec<StateId> = (1..=missing as u32).map(|k| StateId(max + k)).collect();
    let all: Vec<StateId> = spec.states().chain(fresh.iter().copied()).collect();
    let mut out = spec.clone();
    for s in fresh {
        let c = random_transition(&all, rng);
        let d = random_transition(&all, rng);
        out.table_mut().insert(s, [c, d]);
    }
    out
}

type Opponents<'a> = Vec<(String, &'a StrategyFactory)>;

fn resolve_opponents<'a>(
    params: &EvolutionParams,
    registry: &'a Registry,
) -> Result<Opponents<'a>, EvolutionError> {
    params
        .opponent_roster
        .iter()
        .map(|n| {
            let id = registry.resolve(n)?;
            let f = registry.get(&id.name)?;
            Ok((id.name, f))
        })
        .collect()
}

fn fitness_seeded(
    spec: &FsmSpec,
    params: &EvolutionParams,
    opponents: &Opponents<'_>,
    seed: u64,
) -> f64 {
    let cfg = MatchConfig::new(params.turns, params.noise, 0).expect("validated");
    let genome = StrategyFactory::Fsm(std::sync::Arc::new(spec.clone()));
    let denom = params.turns as f64 * opponents.len() as f64;
    let mut sum = 0.0;
    for rep in 0..params.repetitions {
        let mut total = 0.0;
        for (name, factory) in opponents {
            let match_seed = combine(combine(seed, hash_str(name)), rep as u64);
            let mut a = genome.instantiate();
            let mut b = factory.instantiate();
            total += play_match(
                a.as_mut(),
                b.as_mut(),
                &cfg.with_seed(match_seed),
                &params.payoffs,
            )
            .payoff_a;
        }
        sum += total / denom;
    }
    sum / params.repetitions as f64
}

/// Mean over repetitions of the genome's normalized score (per turn, per
/// opponent) against every member of `params.opponent_roster`.
pub fn fitness(
    spec: &FsmSpec,
    params: &EvolutionParams,
    registry: &Registry,
) -> Result<f64, EvolutionError> {
    params.validate()?;
    let opponents = resolve_opponents(params, registry)?;
    Ok(fitness_seeded(spec, params, &opponents, params.seed))
}

/// Runs generations `0..=params.generations` and returns the best genome
/// seen.
pub fn evolve(
    seeds: &[FsmSpec],
    params: &EvolutionParams,
    registry: &Registry,
) -> Result<EvolutionOutcome, EvolutionError> {
    evolve_with(seeds, params, registry, 0, |_, _| Ok(()))
}

/// [`evolve`] starting at generation `first_generation` and calling
/// `on_generation` with each record and the scored population, in
/// generation order. An error from the callback aborts the run.
///
/// Generation `first_generation` holds the seed genomes (padded to
/// `num_states`) plus random genomes up to the population size.
pub fn evolve_with<F>(
    seeds: &[FsmSpec],
    params: &EvolutionParams,
    registry: &Registry,
    first_generation: usize,
    mut on_generation: F,
) -> Result<EvolutionOutcome, EvolutionError>
where
    F: FnMut(&GenerationRecord, &[Scored]) -> io::Result<()>,
{
    params.validate()?;
    if seeds.len() > params.population_size {
        return Err(EvolutionError::TooManySeeds {
            count: seeds.len(),
            population: params.population_size,
        });
    }
    for s in seeds {
        if s.num_states() > params.num_states {
            return Err(EvolutionError::SeedTooLarge {
                name: s.name().to_string(),
                states: s.num_states(),
                limit: params.num_states,
            });
        }
    }
    let child_name = params.genome_name.as_str();
    let opponents = resolve_opponents(params, registry)?;

    let mut rng: ChaCha8Rng = rng_from_seed(combine(params.seed, first_generation as u64));
    let mut population: Vec<(FsmSpec, Option<f64>)> = seeds
        .iter()
        .map(|s| (pad_genome(s, params.num_states, &mut rng), None))
        .collect();
    while population.len() < params.population_size {
        population.push((random_genome(child_name, params.num_states, &mut rng), None));
    }

    let mut log = Vec::new();
    let mut best: Option<Scored> = None;

    for generation in first_generation..=params.generations.max(first_generation) {
        let evaluated: Vec<f64> = population
            .par_iter()
            .enumerate()
            .map(|(i, (genome, cached))| {
                cached.unwrap_or_else(|| {
                    let seed = combine(combine(params.seed, generation as u64), i as u64);
                    fitness_seeded(genome, params, &opponents, seed)
                })
            })
            .collect();
        let scored: Vec<Scored> = population
            .drain(..)
            .zip(evaluated)
            .map(|((genome, _), fitness)| Scored { genome, fitness })
            .collect();

        let mut order: Vec<usize> = (0..scored.len()).collect();
        order.sort_by(|&a, &b| scored[b].fitness.total_cmp(&scored[a].fitness));
        let top = &scored[order[0]];
        let record = GenerationRecord {
            index: generation,
            best_fitness: top.fitness,
            mean_fitness: scored.iter().map(|s| s.fitness).sum::<f64>() / scored.len() as f64,
            best_genome: top.genome.clone(),
        };
        on_generation(&record, &scored)?;
        if best.as_ref().is_none_or(|b| top.fitness > b.fitness) {
            best = Some(top.clone());
        }
        log.push(record);

        if generation >= params.generations {
            break;
        }
        population = order[..params.bottleneck]
            .iter()
            .map(|&i| (scored[i].genome.clone(), Some(scored[i].fitness)))
            .collect();
        while population.len() < params.population_size {
            let parent = &population[rng.gen_range(0..params.bottleneck)].0;
            let child = mutate_fsm(parent, params.mutation_rate, &mut rng)
                .renamed(child_name)
                .map_err(EvolutionError::Fsm)?;
            population.push((child, None));
        }
    }

    let best = best.expect("at least one generation runs");
    Ok(EvolutionOutcome {
        best: best.genome,
        best_fitness: best.fitness,
        log,
    })
}

/// Consecutive changes of mean fitness that are at least `threshold`, keyed
/// by the later generation's index.
pub fn generation_deltas(log: &[GenerationRecord], threshold: f64) -> Vec<(usize, f64)> {
    log.windows(2)
        .filter_map(|w| {
            let delta = w[1].mean_fitness - w[0].mean_fitness;
            (delta >= threshold).then_some((w[1].index, delta))
        })
        .collect()
}

/// `generation,best_score,mean_score,best_fsm` with nine fractional digits.
pub fn format_log_line(r: &GenerationRecord) -> String {
    format!(
        "{},{:.9},{:.9},{}",
        r.index,
        r.best_fitness,
        r.mean_fitness,
        serialize_fsm_line(&r.best_genome)
    )
}

pub fn parse_log_line(line: &str) -> Result<GenerationRecord, FsmError> {
    let bad = |m: String| FsmError::Syntax {
        line: 1,
        message: m,
    };
    let mut parts = line.splitn(4, ',');
    let mut field = |what: &str| {
        parts
            .next()
            .ok_or_else(|| bad(format!("missing {what} field")))
    };
    let index = field("generation")?;
    let best = field("best_score")?;
    let mean = field("mean_score")?;
    let fsm = field("best_fsm")?;
    Ok(GenerationRecord {
        index: index.parse().map_err(|e| bad(format!("{index:?}: {e}")))?,
        best_fitness: best.parse().map_err(|e| bad(format!("{best:?}: {e}")))?,
        mean_fitness: mean.parse().map_err(|e| bad(format!("{mean:?}: {e}")))?,
        best_genome: parse_fsm_line(fsm)?,
    })
}

/// Reads a generation log, reporting the offending line on error.
pub fn read_generation_log(text: &str) -> Result<Vec<GenerationRecord>, FsmError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_log_line(l).map_err(|e| match e {
                FsmError::Syntax { message, .. } => FsmError::Syntax {
                    line: i + 1,
                    message,
                },
                other => other,
            })
        })
        .collect()
}

/// Appends one flushed line per generation, so an interrupted run leaves a
/// complete prefix on disk.
pub struct GenerationLogWriter {
    out: BufWriter<File>,
}

impl GenerationLogWriter {
    /// Starts a fresh log, truncating any existing file.
    pub fn create(path: &Path) -> io::Result<Self> {
        Ok(GenerationLogWriter {
            out: BufWriter::new(File::create(path)?),
        })
    }

    /// Continues an existing log.
    pub fn append(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(GenerationLogWriter {
            out: BufWriter::new(file),
        })
    }

    pub fn write(&mut self, record: &GenerationRecord) -> io::Result<()> {
        writeln!(self.out, "{}", format_log_line(record))?;
        self.out.flush()
    }
}

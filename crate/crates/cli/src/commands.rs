use std::path::{Path, PathBuf};
use std::sync::Arc;

use ipd_core::evolution::{read_generation_log, GenerationLogWriter};
use ipd_core::game::actions_to_string;
use ipd_core::tournament::{parse_history_dump, write_cooperation_csv, write_history_dump};
use ipd_core::*;

use crate::files::{load_machine, read_text, resolve_roster, Artifacts};
use crate::{CliError, EquivArgs, EvolveArgs, PruneArgs, RatesArgs, TournamentArgs, TraceArgs};

type Written = Result<Vec<PathBuf>, CliError>;

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn registry() -> Result<Registry, CliError> {
    Registry::builtin().map_err(data)
}

fn roster(spec: Option<&str>, registry: &mut Registry) -> Result<Vec<String>, CliError> {
    match spec {
        Some(s) => resolve_roster(s, registry),
        None => Ok(roster_default().into_iter().map(|id| id.name).collect()),
    }
}

fn header(pairs: &[(&str, String)]) {
    for (k, v) in pairs {
        println!("# {k}: {v}");
    }
}

pub fn tournament(args: TournamentArgs) -> Written {
    let mut reg = registry()?;
    let names = roster(args.roster.as_deref(), &mut reg)?;
    let cfg = TournamentConfig {
        noise: args.noise,
        master_seed: args.seed,
        include_self_matches: args.self_matches,
        ..TournamentConfig::new(names.clone(), args.turns, args.reps)
    };
    header(&[
        ("command", "tournament".into()),
        ("roster", names.join(",")),
        ("turns", args.turns.to_string()),
        ("repetitions", args.reps.to_string()),
        ("noise", args.noise.to_string()),
        ("seed", args.seed.to_string()),
        ("self_matches", args.self_matches.to_string()),
        ("payoffs", "T=5 R=3 P=1 S=0".into()),
    ]);
    let result = run_tournament(&cfg, &reg).map_err(data)?;

    let mut csv = Vec::new();
    write_ranking_csv(&result.ranking, &mut csv).map_err(data)?;
    print!("{}", String::from_utf8_lossy(&csv));

    let mut out = Artifacts::default();
    if let Some(p) = args.out {
        out.add(p, csv);
    }
    if let Some(p) = args.history {
        let mut buf = Vec::new();
        write_history_dump(&result.histories, &mut buf).map_err(data)?;
        out.add(p, buf);
    }
    if let Some(p) = args.coop_report {
        let reports: Vec<_> = names
            .iter()
            .map(|n| cooperation_rates(&result.histories, n))
            .collect();
        let mut buf = Vec::new();
        write_cooperation_csv(&reports, &mut buf).map_err(data)?;
        out.add(p, buf);
    }
    out.commit()
}

pub fn evolve(args: EvolveArgs) -> Written {
    let mut reg = registry()?;
    let opponents = roster(args.roster.as_deref(), &mut reg)?;
    let params = EvolutionParams {
        population_size: args.population,
        bottleneck: args.bottleneck,
        mutation_rate: args.mutation_rate,
        generations: args.generations,
        num_states: args.states,
        turns: args.turns,
        repetitions: args.reps,
        noise: args.noise,
        opponent_roster: opponents,
        seed: args.seed,
        genome_name: args.name.clone(),
        ..Default::default()
    };
    params.validate().map_err(data)?;

    let mut seeds = Vec::new();
    let mut first_generation = 0;
    let log_path = args.log.clone();
    if args.resume {
        let path = log_path
            .as_deref()
            .expect("clap enforces --log with --resume");
        let records = read_generation_log(&read_text(path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let last = records
            .last()
            .ok_or_else(|| CliError::Data(format!("{}: log is empty", path.display())))?;
        if last.index >= params.generations {
            return Err(CliError::Data(format!(
                "{}: already at generation {}; raise --generations to continue",
                path.display(),
                last.index
            )));
        }
        first_generation = last.index + 1;
        seeds.push(last.best_genome.clone());
    }
    for s in &args.seed_fsm {
        seeds.push(load_machine(s, &reg)?);
    }

    header(&[
        ("command", "evolve".into()),
        ("population", params.population_size.to_string()),
        ("bottleneck", params.bottleneck.to_string()),
        ("mutation_rate", params.mutation_rate.to_string()),
        ("generations", params.generations.to_string()),
        ("first_generation", first_generation.to_string()),
        ("states", params.num_states.to_string()),
        ("turns", params.turns.to_string()),
        ("repetitions", params.repetitions.to_string()),
        ("noise", params.noise.to_string()),
        ("roster", params.opponent_roster.join(",")),
        ("seed", params.seed.to_string()),
        ("genome_name", params.genome_name.clone()),
        (
            "seeding",
            if seeds.is_empty() {
                "random genomes only".into()
            } else {
                let names: Vec<&str> = seeds.iter().map(|s| s.name()).collect();
                format!("{} plus random genomes", names.join(","))
            },
        ),
        (
            "moran_processes",
            format!("{} (recorded, unused)", params.moran_processes),
        ),
    ]);

    let mut writer: Option<GenerationLogWriter> = None;
    let outcome = evolve_with(&seeds, &params, &reg, first_generation, |rec, _| {
        if let Some(path) = &log_path {
            if writer.is_none() {
                writer = Some(if args.resume {
                    GenerationLogWriter::append(path)?
                } else {
                    GenerationLogWriter::create(path)?
                });
            }
            writer.as_mut().expect("opened above").write(rec)?;
        }
        println!(
            "generation {} best {:.6} mean {:.6}",
            rec.index, rec.best_fitness, rec.mean_fitness
        );
        Ok(())
    })
    .map_err(data)?;

    println!("best_fitness {:.9}", outcome.best_fitness);
    print!("{}", serialize_fsm(&outcome.best));
    let mut out = Artifacts::default();
    if let Some(p) = args.out {
        out.add(p, serialize_fsm(&outcome.best).into_bytes());
    }
    out.commit()
}

/// `EvolvedFSM8` pruned to six states becomes `EvolvedFSM6`.
fn pruned_name(name: &str, before: usize, after: usize) -> String {
    let stem = name.trim_end_matches(|c: char| c.is_ascii_digit());
    let digits = &name[stem.len()..];
    if !stem.is_empty() && digits.parse::<usize>().ok() == Some(before) {
        format!("{stem}{after}")
    } else {
        name.to_string()
    }
}

pub fn prune(args: PruneArgs) -> Written {
    let reg = registry()?;
    let machine = load_machine(&args.input, &reg)?;
    let report = reachable_states(&machine);
    let pruned = prune_unreachable(&machine);
    let name = args
        .name
        .unwrap_or_else(|| pruned_name(machine.name(), machine.num_states(), pruned.num_states()));
    let pruned = pruned.renamed(&name).map_err(data)?;
    let list = |s: &std::collections::BTreeSet<StateId>| {
        s.iter()
            .map(|id| id.0.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    println!("reachable: {}", list(&report.reachable));
    println!("removed: {}", list(&report.unreachable));
    let mut out = Artifacts::default();
    out.add(args.out, serialize_fsm(&pruned).into_bytes());
    out.commit()
}

pub fn equiv(args: EquivArgs) -> Written {
    let reg = registry()?;
    let a = load_machine(&args.a, &reg)?;
    let b = load_machine(&args.b, &reg)?;
    let horizon = match args.horizon {
        None => Horizon::Exact,
        Some(0) => return Err(CliError::Usage("--horizon must be at least 1".into())),
        Some(n) => Horizon::Turns(n),
    };
    match distinguishing_sequence(&a, &b, horizon) {
        None => println!("equivalent"),
        Some(seq) if seq.is_empty() => println!("not equivalent: openings differ"),
        Some(seq) => println!(
            "not equivalent: opponent sequence {} separates them",
            actions_to_string(&seq)
        ),
    }
    Ok(Vec::new())
}

fn player(arg: &str, reg: &Registry) -> Result<Box<dyn Strategy>, CliError> {
    if Path::new(arg).exists() {
        let spec = crate::files::read_fsm_file(Path::new(arg))?;
        return Ok(Box::new(FsmPlayer::new(Arc::new(spec))));
    }
    reg.get(arg).map(|f| f.instantiate()).map_err(data)
}

pub fn trace(args: TraceArgs) -> Written {
    let reg = registry()?;
    let mut a = player(&args.a, &reg)?;
    let mut b = player(&args.b, &reg)?;
    let cfg = MatchConfig::new(args.turns, args.noise, args.seed).map_err(data)?;
    let (rec, turns) = play_match_traced(a.as_mut(), b.as_mut(), &cfg, &PayoffMatrix::default());
    let state = |s: Option<StateId>| s.map_or("-".to_string(), |id| id.0.to_string());
    println!("turn,state_a,action_a,state_b,action_b");
    for t in &turns {
        println!(
            "{},{},{},{},{}",
            t.turn,
            state(t.state_a),
            t.action_a,
            state(t.state_b),
            t.action_b
        );
    }
    println!("# payoff_a: {}", rec.payoff_a);
    println!("# payoff_b: {}", rec.payoff_b);
    Ok(Vec::new())
}

pub fn rates(args: RatesArgs) -> Written {
    let histories = parse_history_dump(&read_text(&args.input)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    if !histories
        .iter()
        .any(|h| h.name_a == args.player || h.name_b == args.player)
    {
        return Err(CliError::Data(format!(
            "{}: no matches for {}",
            args.input.display(),
            args.player
        )));
    }
    let report = cooperation_rates(&histories, &args.player);
    let mut buf = Vec::new();
    write_cooperation_csv(std::slice::from_ref(&report), &mut buf).map_err(data)?;
    print!("{}", String::from_utf8_lossy(&buf));
    let mut out = Artifacts::default();
    if let Some(p) = args.out {
        out.add(p, buf);
    }
    out.commit()
}

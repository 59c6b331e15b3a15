use std::collections::HashSet;

use ipd_core::evolution::{
    evolve_with, format_log_line, random_genome, read_generation_log, GenerationLogWriter,
};
use ipd_core::seed::rng_from_seed;
use ipd_core::zoo::Behavior;
use ipd_core::*;

fn reg() -> Registry {
    Registry::builtin().unwrap()
}

fn small(roster: &[&str], seed: u64) -> EvolutionParams {
    EvolutionParams {
        population_size: 12,
        bottleneck: 4,
        generations: 8,
        num_states: 4,
        turns: 20,
        repetitions: 2,
        opponent_roster: roster.iter().map(|s| s.to_string()).collect(),
        seed,
        ..Default::default()
    }
}

#[test]
fn action_flip_frequency_matches_binomial() {
    let mut rng = rng_from_seed(2024);
    let genome = random_genome("G", 10, &mut rng);
    let before: Vec<_> = genome.entries().collect();
    let trials = 10_000;
    let (mut flips, mut retargets, mut initial_flips) = (0usize, 0usize, 0usize);
    for _ in 0..trials {
        let m = mutate_fsm(&genome, 0.1, &mut rng);
        for (a, b) in before.iter().zip(m.entries()) {
            flips += usize::from(a.own != b.own);
            retargets += usize::from(a.next != b.next);
        }
        initial_flips += usize::from(m.initial_action() != genome.initial_action());
        assert_eq!(m.start_state(), genome.start_state());
    }
    let n = (trials * 20) as f64;
    let p = 0.1;
    // 99% two-sided normal bound on a binomial proportion.
    let bound99 = 2.5758 * (p * (1.0 - p) / n).sqrt();
    let frac = flips as f64 / n;
    assert!((frac - p).abs() <= bound99, "flip fraction {frac}");
    assert!((frac - p).abs() <= 0.01);
    // A retarget picks the current target again with probability 1/10.
    let moved = retargets as f64 / n;
    let p_moved = p * 0.9;
    assert!(
        (moved - p_moved).abs() <= 2.5758 * (p_moved * (1.0 - p_moved) / n).sqrt(),
        "{moved}"
    );
    let init = initial_flips as f64 / trials as f64;
    assert!(
        (init - p).abs() <= 2.5758 * (p * (1.0 - p) / trials as f64).sqrt(),
        "{init}"
    );
}

#[test]
fn fitness_examples() {
    let r = reg();
    let coop = Behavior::Cooperator.as_fsm();
    let def = Behavior::Defector.as_fsm();
    let e6 = (*r.fsm("EvolvedFSM6").unwrap()).clone();
    let p = |opp: &str| EvolutionParams {
        opponent_roster: vec![opp.to_string()],
        ..Default::default()
    };
    assert_eq!(fitness(&coop, &p("Defector"), &r).unwrap(), 0.0);
    assert_eq!(fitness(&def, &p("Cooperator"), &r).unwrap(), 5.0);
    assert_eq!(fitness(&e6, &p("TitForTat"), &r).unwrap(), 3.0);
    assert!(fitness(&e6, &p("Nobody"), &r).is_err());
}

#[test]
fn zero_generations_evaluates_initial_population() {
    let r = reg();
    let sp = (*r.fsm("SecondPrac").unwrap()).clone();
    let params = EvolutionParams {
        generations: 0,
        ..small(&["TitForTat", "Defector", "Grudger"], 1)
    };
    let params = EvolutionParams {
        num_states: 10,
        ..params
    };
    let out = evolve(&[sp], &params, &r).unwrap();
    assert_eq!(out.log.len(), 1);
    assert_eq!(out.log[0].index, 0);
    assert_eq!(out.best_fitness, out.log[0].best_fitness);
    assert!(out.best.same_machine(&out.log[0].best_genome));
}

#[test]
fn reruns_are_identical() {
    let r = reg();
    let roster = ["TitForTat", "Random(0.5)", "Alternator", "Grudger"];
    let a = evolve(&[], &small(&roster, 77), &r).unwrap();
    let b = evolve(&[], &small(&roster, 77), &r).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.best, b.best);
    let c = evolve(&[], &small(&roster, 78), &r).unwrap();
    assert_ne!(a.log, c.log);
}

#[test]
fn population_invariants_hold_every_generation() {
    let r = reg();
    let roster = ["TitForTat", "Random(0.5)", "Defector", "WinStayLoseShift"];
    let params = small(&roster, 5);
    let mut seen = 0;
    let mut last_best = f64::NEG_INFINITY;
    let out = evolve_with(
        &[Behavior::TitForTat.as_fsm()],
        &params,
        &r,
        0,
        |rec, pop| {
            assert_eq!(pop.len(), params.population_size);
            for s in pop {
                assert_eq!(validate_fsm(&s.genome.to_draft()), Ok(()));
                assert_eq!(s.genome.num_states(), params.num_states);
                assert!((0.0..=5.0).contains(&s.fitness));
            }
            assert!(rec.best_fitness >= rec.mean_fitness);
            assert!(
                rec.best_fitness >= last_best,
                "elitism broken at {}",
                rec.index
            );
            last_best = rec.best_fitness;
            assert_eq!(rec.index, seen);
            seen += 1;
            Ok(())
        },
    )
    .unwrap();
    assert_eq!(seen, params.generations + 1);
    assert_eq!(out.log.len(), seen);
}

#[test]
fn rate_zero_is_pure_selection() {
    let r = reg();
    let params = EvolutionParams {
        mutation_rate: 0.0,
        ..small(&["TitForTat", "Defector", "Alternator"], 11)
    };
    let mut initial: Option<Vec<FsmSpec>> = None;
    let mut distinct_counts = Vec::new();
    evolve_with(&[], &params, &r, 0, |_, pop| {
        let machines: Vec<FsmSpec> = pop.iter().map(|s| s.genome.renamed("X").unwrap()).collect();
        let distinct: HashSet<&FsmSpec> = machines.iter().collect();
        distinct_counts.push(distinct.len());
        match &initial {
            None => initial = Some(machines),
            Some(first) => {
                for m in &machines {
                    assert!(first.contains(m), "a new genome appeared without mutation");
                }
            }
        }
        Ok(())
    })
    .unwrap();
    assert!(distinct_counts.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn seed_preconditions() {
    let r = reg();
    let sp = (*r.fsm("SecondPrac").unwrap()).clone();
    assert!(matches!(
        evolve(&[sp], &small(&["TitForTat"], 1), &r),
        Err(EvolutionError::SeedTooLarge {
            states: 10,
            limit: 4,
            ..
        })
    ));
    let many = vec![Behavior::TitForTat.as_fsm(); 13];
    assert!(matches!(
        evolve(&many, &small(&["TitForTat"], 1), &r),
        Err(EvolutionError::TooManySeeds { .. })
    ));
}

#[test]
fn generation_log_streams_and_reloads() {
    let r = reg();
    let dir = std::env::temp_dir().join(format!("ipd-evolution-log-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("gen.log");
    let _ = std::fs::remove_file(&path);
    let mut writer = GenerationLogWriter::append(&path).unwrap();
    let out = evolve_with(
        &[],
        &small(&["TitForTat", "Grudger"], 3),
        &r,
        0,
        |rec, _| writer.write(rec),
    )
    .unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), out.log.len());
    for (line, rec) in text.lines().zip(&out.log) {
        assert_eq!(line, format_log_line(rec));
    }
    let back = read_generation_log(&text).unwrap();
    for (a, b) in back.iter().zip(&out.log) {
        assert_eq!(a.index, b.index);
        assert_eq!(a.best_genome, b.best_genome);
        assert!((a.mean_fitness - b.mean_fitness).abs() < 5e-10);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn resumed_run_continues_numbering() {
    let r = reg();
    let params = small(&["TitForTat", "Defector"], 21);
    let first = evolve(&[], &params, &r).unwrap();
    let last = first.log.last().unwrap();
    let params2 = EvolutionParams {
        generations: 12,
        ..params
    };
    let resumed = evolve_with(
        std::slice::from_ref(&last.best_genome),
        &params2,
        &r,
        last.index + 1,
        |_, _| Ok(()),
    )
    .unwrap();
    let idx: Vec<usize> = resumed.log.iter().map(|g| g.index).collect();
    assert_eq!(idx, (9..=12).collect::<Vec<_>>());
    // The carried-over genome is deterministic against this roster.
    assert!(resumed.best_fitness >= last.best_fitness);
}

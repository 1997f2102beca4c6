use flowbal_core::{
    brute_force, generate_random, makespan, solve_sequential, Instance, PfsWeight, Strategy as Balance, Time,
};
use flowbal_runtime::{
    encode, run_experiment, HetPreset, HeterogeneityModel, MessageKind, Mode, Payload, RunConfig, RunMetrics,
    Topology, Transfer, WireFormat,
};
use proptest::prelude::*;

fn config(topo: &str, het: &str, strategy: Balance, transfer: Transfer) -> RunConfig {
    let topo: Topology = topo.parse().unwrap();
    let preset: HetPreset = het.parse().unwrap();
    let het = HeterogeneityModel::from_preset(&topo, &preset);
    RunConfig::new(topo, strategy, transfer).with_het(het).with_audit(true)
}

/// Conservation, ledger and monotonicity checks on an audited complete run.
fn check_audit(inst: &Instance, m: &RunMetrics) {
    assert!(m.complete);
    assert_eq!(makespan(inst, &m.permutation).unwrap(), m.makespan);
    let a = m.audit.as_ref().expect("audited");
    assert_eq!(a.completions.len() as u64, m.particles_issued);
    assert!(a.completions.values().all(|&c| c == 1), "a particle ran twice");
    assert_eq!(m.per_master.iter().map(|p| p.particles).sum::<u64>(), m.particles_issued);
    assert!(a.ledger_checks > 0);
    for (actor, h) in &a.best_history {
        assert!(h.windows(2).all(|w| w[1] < w[0]), "incumbent rose at {actor}: {h:?}");
    }
}

#[test]
fn answer_is_strategy_independent() {
    let topologies = ["1:1", "2:2,2", "3:1,2,1"];
    let hets = ["homogeneous", "mixed:1,4"];
    for seed in 0..4u64 {
        let n = 4 + (seed as usize % 4);
        let inst = generate_random(n, 3, 50.0, 25.0, seed);
        let optimum = solve_sequential(&inst, None, None).makespan;
        for topo in topologies {
            for het in hets {
                for strategy in Balance::ALL {
                    for transfer in Transfer::ALL {
                        // leaf-level particles only where n! stays small
                        let deepest = if n <= 5 { n - 1 } else { 2 };
                        for k in [0, 1, deepest] {
                            let cfg = config(topo, het, strategy, transfer).with_k_split(k).with_seed(seed);
                            let m = run_experiment(&inst, &cfg).unwrap();
                            assert_eq!(m.makespan, optimum, "{topo} {het} {strategy}/{transfer} k={k}");
                            check_audit(&inst, &m);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn single_worker_matches_brute_force() {
    for seed in 0..10 {
        let inst = generate_random(6, 4, 50.0, 25.0, 100 + seed);
        let cfg = config("1:1", "homogeneous", Balance::Sld, Transfer::OneInOne);
        let m = run_experiment(&inst, &cfg).unwrap();
        assert_eq!(m.makespan, brute_force(&inst).unwrap().1);
    }
}

#[test]
fn latency_jitter_keeps_the_answer() {
    let inst = generate_random(7, 4, 50.0, 25.0, 3);
    let optimum = solve_sequential(&inst, None, None).makespan;
    let mut cfg = config("2:2,1", "mixed:1,3", Balance::Rand, Transfer::MultiInOne);
    cfg.het.latency = 0.5;
    cfg.het.latency_jitter = 4.0;
    cfg.het.seed = 11;
    let m = run_experiment(&inst, &cfg).unwrap();
    assert_eq!(m.makespan, optimum);
    check_audit(&inst, &m);
}

#[test]
fn simulation_is_deterministic() {
    let inst = generate_random(8, 4, 50.0, 25.0, 5);
    for strategy in Balance::ALL {
        let cfg = config("2:2,2", "mixed:1,4", strategy, Transfer::MultiInOne)
            .with_seed(9)
            .with_trace(true);
        let a = run_experiment(&inst, &cfg).unwrap();
        let b = run_experiment(&inst, &cfg).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}

#[test]
fn static_split_never_moves_work() {
    let inst = generate_random(8, 4, 50.0, 25.0, 2);
    let m = run_experiment(&inst, &config("2:2,2", "mixed:1,4", Balance::Sld, Transfer::OneInOne)).unwrap();
    assert_eq!(m.rebalance_rounds, 0);
    assert_eq!(m.tally(MessageKind::ReallocateSingle).count, 0);
    assert_eq!(m.tally(MessageKind::ReallocateBatch).count, 0);
    assert!(m.per_master.iter().all(|p| p.surrendered == 0));
}

#[test]
fn one_in_one_moves_one_id_per_overloaded_master_per_tick() {
    let inst = generate_random(9, 4, 50.0, 25.0, 4);
    let cfg = config("2:2,2", "mixed:1,4", Balance::Acwn, Transfer::OneInOne).with_trace(true);
    let m = run_experiment(&inst, &cfg).unwrap();
    assert!(m.rebalance_rounds > 0);
    assert_eq!(m.tally(MessageKind::ReallocateBatch).count, 0);
    let singles = m.tally(MessageKind::ReallocateSingle);
    assert!(singles.count > 0);
    // bytes are H + W each
    assert_eq!(singles.bytes, singles.count * 16);

    // between two polls of the same master it surrenders at most one id
    let masters = [1u16, 2];
    for &master in &masters {
        let mut since_poll = 0;
        for rec in &m.trace {
            let msg = &rec.message;
            if msg.dst.0 == master && matches!(msg.payload, Payload::UpdateSolutionRequest { quota: Some(_) }) {
                since_poll = 0;
            }
            if msg.src.0 == master && msg.kind() == MessageKind::ReallocateSingle {
                since_poll += 1;
                assert_eq!(since_poll, 1, "master {master} surrendered twice for one poll");
            }
        }
    }
    // supervisor forwards every surrendered id as its own single message
    let up = m.trace.iter().filter(|r| r.message.dst.0 == 0 && r.message.kind() == MessageKind::ReallocateSingle);
    let down = m.trace.iter().filter(|r| r.message.src.0 == 0 && r.message.kind() == MessageKind::ReallocateSingle);
    assert_eq!(up.count(), down.count());
}

#[test]
fn multi_in_one_batches_carry_their_count() {
    let inst = generate_random(9, 4, 50.0, 25.0, 4);
    let cfg = config("2:2,2", "mixed:1,4", Balance::Pfs, Transfer::MultiInOne)
        .with_pfs_weight(PfsWeight::Rate)
        .with_trace(true);
    let m = run_experiment(&inst, &cfg).unwrap();
    assert_eq!(m.tally(MessageKind::ReallocateSingle).count, 0);
    let wire = WireFormat::default();
    let mut batches = 0;
    for rec in &m.trace {
        if let Payload::ReallocateBatch(ids) = &rec.message.payload {
            batches += 1;
            assert!(!ids.is_empty());
            assert_eq!(rec.bytes, 8 + 8 * (1 + ids.len()));
            let frame = encode(&rec.message, &wire).unwrap();
            assert_eq!(frame.len(), rec.bytes);
            let tag = u64::from_le_bytes(frame[7..15].try_into().unwrap());
            assert_eq!(tag as usize, ids.len());
        }
    }
    assert!(batches > 0);
}

#[test]
fn trace_lines_are_tab_separated() {
    let inst = generate_random(5, 3, 50.0, 25.0, 1);
    let m = run_experiment(
        &inst,
        &config("2:1,1", "homogeneous", Balance::Acwn, Transfer::OneInOne).with_trace(true),
    )
    .unwrap();
    assert_eq!(m.trace.len() as u64, m.total_messages());
    assert!(m.trace.windows(2).all(|w| w[0].time <= w[1].time));
    for rec in &m.trace {
        let line = rec.to_line();
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[1], rec.message.kind().as_str());
        assert_eq!(fields[4].parse::<usize>().unwrap(), rec.bytes);
    }
}

#[test]
fn budget_stops_early_with_a_feasible_answer() {
    let inst = generate_random(14, 10, 50.0, 25.0, 8);
    let cfg = config("2:2,2", "homogeneous", Balance::Pfs, Transfer::MultiInOne).with_budget(Some(60));
    let m = run_experiment(&inst, &cfg).unwrap();
    assert!(!m.complete);
    assert!(m.nodes_expanded <= 60);
    m.permutation.validate_complete(14).unwrap();
    assert_eq!(makespan(&inst, &m.permutation).unwrap(), m.makespan);

    let m = run_experiment(&inst, &cfg.clone().with_budget(Some(0))).unwrap();
    assert!(!m.complete);
    assert_eq!(m.permutation.as_slice(), (0..14).collect::<Vec<_>>().as_slice());
}

#[test]
fn broadcasts_only_help() {
    // the same search with and without other masters' incumbents reaches
    // the same value; sharing never makes it worse and saves work
    let inst = generate_random(9, 5, 50.0, 25.0, 21);
    let alone = run_experiment(&inst, &config("1:1", "homogeneous", Balance::Sld, Transfer::OneInOne)).unwrap();
    let shared = run_experiment(&inst, &config("3:1", "homogeneous", Balance::Acwn, Transfer::OneInOne)).unwrap();
    assert_eq!(alone.makespan, shared.makespan);
    assert!(shared.tally(MessageKind::BestSolution).count > 0);
}

#[test]
fn thread_mode_reaches_the_optimum() {
    for (i, strategy) in Balance::ALL.into_iter().enumerate() {
        let inst = generate_random(7, 4, 50.0, 25.0, 30 + i as u64);
        let optimum = solve_sequential(&inst, None, None).makespan;
        let transfer = Transfer::ALL[i % 2];
        let cfg = config("2:2,2", "mixed:1,2", strategy, transfer)
            .with_mode(Mode::Threads)
            .with_pfs_weight(PfsWeight::Rate);
        let m = run_experiment(&inst, &cfg).unwrap();
        assert_eq!(m.makespan, optimum, "{strategy}/{transfer}");
        check_audit(&inst, &m);
        assert!(m.time > 0.0);
    }
}

#[test]
fn thread_mode_honours_the_budget() {
    let inst = generate_random(14, 10, 50.0, 25.0, 8);
    let cfg = config("2:1,1", "homogeneous", Balance::Acwn, Transfer::OneInOne)
        .with_mode(Mode::Threads)
        .with_budget(Some(60));
    let m = run_experiment(&inst, &cfg).unwrap();
    assert!(!m.complete);
    assert_eq!(makespan(&inst, &m.permutation).unwrap(), m.makespan);
}

fn strategy() -> impl Strategy<Value = Balance> {
    prop::sample::select(Balance::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn random_configs_agree_with_sequential(
        n in 2usize..7,
        m in 1usize..5,
        seed in any::<u64>(),
        strat in strategy(),
        multi in any::<bool>(),
        workers in prop::collection::vec(1usize..4, 1..4),
        speeds in prop::collection::vec(1u32..5, 1..3),
        sync in 1.0f64..40.0,
    ) {
        let inst = generate_random(n, m, 50.0, 25.0, seed);
        let optimum: Time = solve_sequential(&inst, None, None).makespan;
        let topo = Topology { workers_per_master: workers, sync_interval: sync };
        let factors: Vec<f64> = speeds.into_iter().map(f64::from).collect();
        let het = HeterogeneityModel::by_master(&topo, &factors);
        let transfer = if multi { Transfer::MultiInOne } else { Transfer::OneInOne };
        let cfg = RunConfig::new(topo, strat, transfer)
            .with_het(het)
            .with_k_split((seed % n as u64) as usize)
            .with_seed(seed)
            .with_audit(true);
        let metrics = run_experiment(&inst, &cfg).unwrap();
        prop_assert_eq!(metrics.makespan, optimum);
        check_audit(&inst, &metrics);
    }
}

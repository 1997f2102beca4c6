use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use flowbal_core::tree::DEFAULT_PARTICLE_CAP;
use flowbal_core::{
    acwn_select, makespan, pfs_allocate, rand_select, sld_partition, BoundKind, Bounder, Instance, MasterStats,
    NodeId, Permutation, PfsWeight, Strategy, Time, TreeCodec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::actor::{Problem, Transfer};
use crate::error::{Result, RuntimeError};
use crate::master::Master;
use crate::message::{ActorId, MessageKind, TraceRecord, WireFormat};
use crate::supervisor::Supervisor;
use crate::topology::{HeterogeneityModel, Layout, Topology, SUPERVISOR};
use crate::worker::Worker;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Deterministic discrete-event simulation on a virtual clock.
    #[default]
    Sim,
    /// One OS thread per actor, wall-clock time.
    Threads,
}

impl FromStr for Mode {
    type Err = RuntimeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sim" => Ok(Mode::Sim),
            "threads" => Ok(Mode::Threads),
            _ => Err(RuntimeError::config(format!("unknown mode `{s}`, expected sim or threads"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Sim => "sim",
            Mode::Threads => "threads",
        })
    }
}

pub const DEFAULT_REFRESH_INTERVAL: f64 = 10.0;
pub const DEFAULT_K_SPLIT: usize = 1;

/// Everything `run_experiment` needs besides the instance.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub topology: Topology,
    pub strategy: Strategy,
    pub transfer: Transfer,
    /// Floor the initial particles are cut from.
    pub k_split: usize,
    pub het: HeterogeneityModel,
    pub mode: Mode,
    /// Cap on nodes expanded across all workers.
    pub budget: Option<u64>,
    pub pfs_weight: PfsWeight,
    pub bound: BoundKind,
    /// Virtual time between a worker's solution refreshes; also its slice length.
    pub refresh_interval: f64,
    /// Byte accounting; derived from the instance size when unset.
    pub wire: Option<WireFormat>,
    pub seed: u64,
    pub trace: bool,
    pub audit: bool,
    pub particle_cap: u128,
    /// Thread mode: wall-clock length of one time unit.
    pub time_unit: Duration,
    /// Thread mode: give up after this long.
    pub timeout: Duration,
}

impl RunConfig {
    pub fn new(topology: Topology, strategy: Strategy, transfer: Transfer) -> Self {
        let het = HeterogeneityModel::homogeneous(&topology);
        Self {
            topology,
            strategy,
            transfer,
            k_split: DEFAULT_K_SPLIT,
            het,
            mode: Mode::Sim,
            budget: None,
            pfs_weight: PfsWeight::default(),
            bound: BoundKind::default(),
            refresh_interval: DEFAULT_REFRESH_INTERVAL,
            wire: None,
            seed: 0,
            trace: false,
            audit: false,
            particle_cap: DEFAULT_PARTICLE_CAP,
            time_unit: Duration::from_micros(100),
            timeout: Duration::from_secs(120),
        }
    }

    pub fn with_het(mut self, het: HeterogeneityModel) -> Self {
        self.het = het;
        self
    }

    pub fn with_k_split(mut self, k: usize) -> Self {
        self.k_split = k;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_budget(mut self, budget: Option<u64>) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.trace = on;
        self
    }

    pub fn with_audit(mut self, on: bool) -> Self {
        self.audit = on;
        self
    }

    pub fn with_pfs_weight(mut self, w: PfsWeight) -> Self {
        self.pfs_weight = w;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MasterMetrics {
    /// Particles finished by this master's workers.
    pub particles: u64,
    /// Compute time summed over this master's workers.
    pub busy_time: f64,
    pub received: u64,
    pub surrendered: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KindTally {
    pub count: u64,
    pub bytes: u64,
}

/// Extra bookkeeping collected when `RunConfig::audit` is set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Audit {
    /// Successive incumbent values seen at each actor.
    pub best_history: BTreeMap<ActorId, Vec<Time>>,
    /// How often each particle was finished.
    pub completions: BTreeMap<NodeId, u32>,
    /// Ledger checks performed (one per master event).
    pub ledger_checks: u64,
}

impl Audit {
    pub(crate) fn observe(&mut self, actor: ActorId, best: Time) {
        let h = self.best_history.entry(actor).or_default();
        if best != Time::MAX && h.last() != Some(&best) {
            h.push(best);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// Virtual time (sim) or time units of wall clock (threads) until the
    /// last particle finished, or until the budget ran out.
    pub time: f64,
    /// False when the node budget stopped the run.
    pub complete: bool,
    pub makespan: Time,
    pub permutation: Permutation,
    pub nodes_expanded: u64,
    pub particles_issued: u64,
    pub per_master: Vec<MasterMetrics>,
    pub messages: BTreeMap<MessageKind, KindTally>,
    pub rebalance_rounds: u64,
    pub trace: Vec<TraceRecord>,
    pub audit: Option<Audit>,
}

impl RunMetrics {
    pub fn total_messages(&self) -> u64 {
        self.messages.values().map(|t| t.count).sum()
    }

    pub fn total_bytes(&self) -> u64 {
        self.messages.values().map(|t| t.bytes).sum()
    }

    pub fn tally(&self, kind: MessageKind) -> KindTally {
        self.messages.get(&kind).copied().unwrap_or_default()
    }
}

/// Actors and data assembled before a run.
pub(crate) struct Setup {
    pub problem: Problem,
    pub layout: Layout,
    pub supervisor: Supervisor,
    pub masters: Vec<Master>,
    pub workers: Vec<Worker>,
    pub wire: WireFormat,
    pub particles: u64,
}

/// Distributes the initial particles over masters.
///
/// SLD and PFS compute per-master counts (PFS with its cold-start weights)
/// and deal ids round-robin in ascending order; ACWN and RAND place each id
/// with their selection rule against the running counts.
pub fn initial_allocation(
    strategy: Strategy,
    particles: &[NodeId],
    topology: &Topology,
    pfs_weight: PfsWeight,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<NodeId>>> {
    let m = topology.n_masters();
    let mut stats: Vec<MasterStats> = topology
        .workers_per_master
        .iter()
        .enumerate()
        .map(|(i, &w)| MasterStats::new(i, w))
        .collect();
    let mut out = vec![Vec::new(); m];
    let total = particles.len() as u64;
    match strategy {
        Strategy::Sld | Strategy::Pfs => {
            let counts = if strategy == Strategy::Sld {
                sld_partition(total, m)?.counts
            } else {
                pfs_allocate(total, &stats, pfs_weight)?.counts
            };
            let mut ids = particles.iter();
            'deal: loop {
                let mut placed = false;
                for (i, &c) in counts.iter().enumerate() {
                    if (out[i].len() as u64) < c {
                        match ids.next() {
                            Some(&id) => out[i].push(id),
                            None => break 'deal,
                        }
                        placed = true;
                    }
                }
                if !placed {
                    break;
                }
            }
        }
        Strategy::Acwn | Strategy::Rand => {
            for &id in particles {
                let i = if strategy == Strategy::Acwn {
                    acwn_select(&stats)?
                } else {
                    rand_select(&stats, rng)?
                };
                stats[i].pending_load += 1;
                out[i].push(id);
            }
        }
    }
    Ok(out)
}

fn build(inst: &Instance, cfg: &RunConfig) -> Result<Setup> {
    cfg.topology.validate()?;
    cfg.het.validate(&cfg.topology)?;
    let n = inst.jobs();
    if cfg.k_split >= n {
        return Err(RuntimeError::config(format!(
            "k_split {} out of range for {n} jobs (0..{})",
            cfg.k_split,
            n - 1
        )));
    }
    if !(cfg.refresh_interval.is_finite() && cfg.refresh_interval > 0.0) {
        return Err(RuntimeError::config("refresh interval must be positive"));
    }
    let codec = TreeCodec::new(n)?;
    let particles = flowbal_core::split_frontier(&codec, cfg.k_split, cfg.particle_cap)?;
    let wire = cfg.wire.unwrap_or_else(|| WireFormat::for_codec(&codec));
    let layout = cfg.topology.layout();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let initial = initial_allocation(cfg.strategy, &particles, &cfg.topology, cfg.pfs_weight, &mut rng)?;

    let snapshot: Vec<MasterStats> = initial
        .iter()
        .zip(&cfg.topology.workers_per_master)
        .enumerate()
        .map(|(i, (ids, &w))| MasterStats {
            pending_load: ids.len() as u64,
            ..MasterStats::new(i, w)
        })
        .collect();
    let supervisor = Supervisor::new(
        SUPERVISOR,
        layout.masters().to_vec(),
        snapshot,
        particles.len() as u64,
        cfg.strategy,
        cfg.transfer,
        cfg.pfs_weight,
        wire.max_batch(),
        cfg.seed,
    );
    let masters = initial
        .into_iter()
        .enumerate()
        .map(|(i, ids)| {
            Master::new(
                i,
                layout.masters()[i],
                SUPERVISOR,
                layout.workers_of(i).to_vec(),
                codec.clone(),
                cfg.transfer,
                wire.max_batch(),
                ids,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let workers = layout
        .all_workers()
        .enumerate()
        .map(|(w, id)| {
            let speed = cfg.het.speeds[w];
            let slice = (cfg.refresh_interval * speed).ceil() as u64;
            Worker::new(id, layout.masters()[layout.owner_of(w)], slice)
        })
        .collect();
    Ok(Setup {
        problem: Problem {
            bounder: Bounder::new(inst, cfg.bound),
            codec,
            inst: inst.clone(),
        },
        layout,
        supervisor,
        masters,
        workers,
        wire,
        particles: particles.len() as u64,
    })
}

/// Best permutation held by any worker, ties to the lowest worker; the
/// identity when nothing was found.
pub(crate) fn final_answer(inst: &Instance, workers: &[Worker]) -> Result<(Time, Permutation)> {
    let best = workers
        .iter()
        .filter_map(|w| w.own_best())
        .min_by_key(|(t, _)| *t)
        .map(|(t, p)| (t, Permutation::new(p.to_vec())));
    let (value, perm) = match best {
        Some(b) => b,
        None => {
            let id = Permutation::identity(inst.jobs());
            (makespan(inst, &id)?, id)
        }
    };
    let check = makespan(inst, &perm)?;
    if check != value {
        return Err(RuntimeError::protocol(format!(
            "reported makespan {value} but permutation evaluates to {check}"
        )));
    }
    Ok((value, perm))
}

/// Runs the hierarchical branch and bound on `inst`.
///
/// Sim mode is fully deterministic for a fixed config. A run stopped by the
/// budget returns `complete: false` with the best permutation found so far.
pub fn run_experiment(inst: &Instance, cfg: &RunConfig) -> Result<RunMetrics> {
    let setup = build(inst, cfg)?;
    match cfg.mode {
        Mode::Sim => crate::sim::run(setup, cfg),
        Mode::Threads => crate::threads::run(setup, cfg),
    }
}

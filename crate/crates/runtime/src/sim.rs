//! Discrete-event driver. Events are ordered by `(time, sequence)`, so a
//! run is a pure function of its configuration.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use ordered_float::OrderedFloat;

use crate::actor::{Input, Output};
use crate::error::{Result, RuntimeError};
use crate::experiment::{final_answer, Audit, KindTally, MasterMetrics, RunConfig, RunMetrics, Setup};
use crate::message::{transfer_cost, ActorId, TraceRecord};
use crate::topology::SUPERVISOR;

/// Consecutive idle ticks tolerated before declaring a deadlock.
const DEADLOCK_TICKS: u32 = 3;

struct Event {
    time: OrderedFloat<f64>,
    seq: u64,
    target: ActorId,
    input: Input,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap pops the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

struct Sim<'a> {
    cfg: &'a RunConfig,
    setup: Setup,
    latency: Vec<Vec<f64>>,
    queue: BinaryHeap<Event>,
    seq: u64,
    now: f64,
    in_flight: usize,
    nodes: u64,
    finished: bool,
    exhausted: bool,
    last_done: f64,
    per_master: Vec<MasterMetrics>,
    messages: BTreeMap<crate::message::MessageKind, KindTally>,
    trace: Vec<TraceRecord>,
    audit: Option<Audit>,
}

impl Sim<'_> {
    fn schedule(&mut self, time: f64, target: ActorId, input: Input) {
        self.seq += 1;
        self.queue.push(Event {
            time: OrderedFloat(time),
            seq: self.seq,
            target,
            input,
        });
    }

    fn allowance(&self) -> u64 {
        self.cfg.budget.map_or(u64::MAX, |b| b.saturating_sub(self.nodes))
    }

    fn apply(&mut self, src: ActorId, outputs: Vec<Output>) {
        for o in outputs {
            match o {
                Output::Send(msg) => {
                    let bytes = transfer_cost(&msg, &self.setup.wire);
                    let t = self.messages.entry(msg.kind()).or_default();
                    t.count += 1;
                    t.bytes += bytes as u64;
                    if self.cfg.trace {
                        self.trace.push(TraceRecord {
                            time: self.now,
                            message: msg.clone(),
                            bytes,
                        });
                    }
                    let at = self.now + self.latency[msg.src.0 as usize][msg.dst.0 as usize];
                    self.in_flight += 1;
                    let dst = msg.dst;
                    self.schedule(at, dst, Input::Deliver(msg));
                }
                Output::Compute { nodes } => {
                    let w = self.setup.layout.worker_index(src).expect("only workers compute");
                    let dt = nodes as f64 / self.cfg.het.speeds[w];
                    self.nodes += nodes;
                    self.per_master[self.setup.layout.owner_of(w)].busy_time += dt;
                    self.schedule(self.now + dt, src, Input::SliceDone);
                }
                Output::ParticleDone { id, .. } => {
                    let w = self.setup.layout.worker_index(src).expect("only workers finish particles");
                    self.per_master[self.setup.layout.owner_of(w)].particles += 1;
                    self.last_done = self.now;
                    if let Some(a) = &mut self.audit {
                        *a.completions.entry(id).or_default() += 1;
                    }
                }
                Output::Finish => self.finished = true,
            }
        }
    }

    fn idle(&self) -> bool {
        self.in_flight == 0 && self.setup.workers.iter().all(|w| !w.is_busy())
    }

    fn dispatch(&mut self, target: ActorId, input: Input) -> Result<()> {
        let layout = &self.setup.layout;
        if target == SUPERVISOR {
            let out = self.setup.supervisor.step(input)?;
            if let Some(a) = &mut self.audit {
                a.observe(target, self.setup.supervisor.best());
            }
            self.apply(target, out);
        } else if let Some(i) = layout.master_index(target) {
            let master = &mut self.setup.masters[i];
            let out = master.step(self.now, input)?;
            if let Some(a) = &mut self.audit {
                master.check_ledger()?;
                a.ledger_checks += 1;
                a.observe(target, master.best());
            }
            self.apply(target, out);
        } else if let Some(w) = layout.worker_index(target) {
            let allowance = self.allowance();
            let out = self.setup.workers[w].step(&self.setup.problem, input, allowance)?;
            if allowance == 0 && out.iter().any(|o| matches!(o, Output::Compute { .. })) {
                // more search wanted but the budget is spent
                self.exhausted = true;
            }
            if let Some(a) = &mut self.audit {
                a.observe(target, self.setup.workers[w].upper());
            }
            self.apply(target, out);
        } else {
            return Err(RuntimeError::protocol(format!("message to unknown actor {target}")));
        }
        Ok(())
    }

    fn run(&mut self) -> Result<()> {
        let interval = self.cfg.topology.sync_interval;
        self.schedule(interval, SUPERVISOR, Input::Tick);
        for w in 0..self.setup.workers.len() {
            let id = self.setup.workers[w].id();
            let out = self.setup.workers[w].start();
            self.apply(id, out);
        }
        let mut idle_ticks = 0;
        while let Some(ev) = self.queue.pop() {
            self.now = ev.time.0;
            match ev.input {
                Input::Deliver(_) => self.in_flight -= 1,
                Input::Tick => {
                    if self.idle() {
                        idle_ticks += 1;
                        if idle_ticks >= DEADLOCK_TICKS {
                            return Err(RuntimeError::protocol(format!(
                                "deadlock at t={:.3}: no work running or in flight, particles outstanding",
                                self.now
                            )));
                        }
                    } else {
                        idle_ticks = 0;
                    }
                    self.schedule(self.now + interval, SUPERVISOR, Input::Tick);
                }
                Input::SliceDone => {}
            }
            self.dispatch(ev.target, ev.input)?;
            if self.finished || self.exhausted {
                break;
            }
        }
        Ok(())
    }
}

pub(crate) fn run(setup: Setup, cfg: &RunConfig) -> Result<RunMetrics> {
    let latency = cfg.het.link_latencies(setup.layout.actor_count());
    let masters = setup.masters.len();
    let mut sim = Sim {
        cfg,
        setup,
        latency,
        queue: BinaryHeap::new(),
        seq: 0,
        now: 0.0,
        in_flight: 0,
        nodes: 0,
        finished: false,
        exhausted: false,
        last_done: 0.0,
        per_master: vec![MasterMetrics::default(); masters],
        messages: BTreeMap::new(),
        trace: Vec::new(),
        audit: cfg.audit.then(Audit::default),
    };
    sim.run()?;
    if !sim.finished && !sim.exhausted {
        return Err(RuntimeError::protocol("event queue drained before termination"));
    }
    for (pm, m) in sim.per_master.iter_mut().zip(&sim.setup.masters) {
        let c = m.counters();
        pm.received = c.received;
        pm.surrendered = c.surrendered;
    }
    let (makespan, permutation) = final_answer(&sim.setup.problem.inst, &sim.setup.workers)?;
    Ok(RunMetrics {
        time: if sim.finished { sim.last_done } else { sim.now },
        complete: sim.finished,
        makespan,
        permutation,
        nodes_expanded: sim.nodes,
        particles_issued: sim.setup.particles,
        per_master: sim.per_master,
        messages: sim.messages,
        rebalance_rounds: sim.setup.supervisor.rebalance_rounds(),
        trace: sim.trace,
        audit: sim.audit,
    })
}

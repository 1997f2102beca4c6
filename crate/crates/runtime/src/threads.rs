//! Real-thread driver: one OS thread per actor, crossbeam mailboxes, the
//! same step functions as the simulator.
//!
//! Time is wall clock divided by `RunConfig::time_unit`. Slower workers are
//! emulated by sleeping after each slice so that a worker of speed `s`
//! spends `max_speed / s` times the measured compute time per slice. Workers
//! also share their incumbent through a monotone atomic cell; the message
//! protocol alone is enough for correctness.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use crossbeam::channel::{unbounded, Receiver, RecvTimeoutError, Sender};
use flowbal_core::{NodeId, SharedIncumbent, Time};

use crate::actor::{Input, Output, Problem};
use crate::error::{Result, RuntimeError};
use crate::experiment::{final_answer, Audit, KindTally, MasterMetrics, RunConfig, RunMetrics, Setup};
use crate::master::Master;
use crate::message::{transfer_cost, ActorId, Message, MessageKind, TraceRecord, WireFormat};
use crate::supervisor::Supervisor;
use crate::worker::Worker;

const POLL: Duration = Duration::from_millis(2);

struct Shared<'a> {
    problem: &'a Problem,
    senders: Vec<Sender<Input>>,
    wire: WireFormat,
    start: Instant,
    unit: f64,
    timeout: Duration,
    trace: bool,
    audit: bool,
    budget: Option<u64>,
    nodes: AtomicU64,
    stop: AtomicBool,
    exhausted: AtomicBool,
    incumbent: SharedIncumbent,
}

impl Shared<'_> {
    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64() / self.unit
    }

    fn halt(&self) {
        self.stop.store(true, Ordering::SeqCst);
    }

    fn stopped(&self) -> bool {
        self.stop.load(Ordering::SeqCst)
    }

    fn allowance(&self) -> u64 {
        self.budget
            .map_or(u64::MAX, |b| b.saturating_sub(self.nodes.load(Ordering::SeqCst)))
    }
}

/// What one thread observed; merged after the run.
#[derive(Default)]
struct Log {
    messages: BTreeMap<MessageKind, KindTally>,
    trace: Vec<TraceRecord>,
    done: Vec<(NodeId, f64)>,
    busy: f64,
    history: Vec<Time>,
    ledger_checks: u64,
}

impl Log {
    fn send(&mut self, shared: &Shared, msg: Message) {
        let bytes = transfer_cost(&msg, &shared.wire);
        let t = self.messages.entry(msg.kind()).or_default();
        t.count += 1;
        t.bytes += bytes as u64;
        if shared.trace {
            self.trace.push(TraceRecord {
                time: shared.now(),
                message: msg.clone(),
                bytes,
            });
        }
        // a closed mailbox means the receiver already terminated
        let _ = shared.senders[msg.dst.0 as usize].send(Input::Deliver(msg));
    }

    fn observe(&mut self, best: Time) {
        if best != Time::MAX && self.history.last() != Some(&best) {
            self.history.push(best);
        }
    }
}

/// Sends messages and reports `(nodes computed, finish requested)`.
fn emit(shared: &Shared, log: &mut Log, outputs: Vec<Output>) -> (Option<u64>, bool) {
    let (mut compute, mut finish) = (None, false);
    for o in outputs {
        match o {
            Output::Send(msg) => log.send(shared, msg),
            Output::Compute { nodes } => {
                shared.nodes.fetch_add(nodes, Ordering::SeqCst);
                compute = Some(nodes);
            }
            Output::ParticleDone { id, .. } => log.done.push((id, shared.now())),
            Output::Finish => finish = true,
        }
    }
    (compute, finish)
}

fn fail(shared: &Shared, e: RuntimeError) -> RuntimeError {
    shared.halt();
    e
}

fn run_worker(shared: &Shared, mut worker: Worker, rx: Receiver<Input>, slowdown: f64) -> Result<(Worker, Log)> {
    let mut log = Log::default();
    let out = worker.start();
    emit(shared, &mut log, out);
    let mut slice: Option<Duration> = None;
    let step = |worker: &mut Worker, log: &mut Log, input: Input| -> Result<Option<Duration>> {
        let allowance = shared.allowance();
        let began = Instant::now();
        let out = worker.step(shared.problem, input, allowance).map_err(|e| fail(shared, e))?;
        let took = began.elapsed();
        if let Some((t, _)) = worker.own_best() {
            shared.incumbent.offer(t);
        }
        let (compute, _) = emit(shared, log, out);
        if shared.audit {
            log.observe(worker.upper());
        }
        if compute.is_some() && allowance == 0 {
            shared.exhausted.store(true, Ordering::SeqCst);
            shared.halt();
        }
        Ok(compute.map(|_| took))
    };
    while !shared.stopped() && !worker.is_terminated() {
        if let Some(took) = slice.take() {
            let paid = took.mul_f64(1.0 + slowdown);
            thread::sleep(took.mul_f64(slowdown));
            log.busy += paid.as_secs_f64() / shared.unit;
            while let Ok(input) = rx.try_recv() {
                step(&mut worker, &mut log, input)?;
            }
            if worker.is_terminated() {
                break;
            }
            worker.tighten(shared.incumbent.get());
            slice = step(&mut worker, &mut log, Input::SliceDone)?;
        } else {
            match rx.recv_timeout(POLL) {
                Ok(input) => {
                    worker.tighten(shared.incumbent.get());
                    slice = step(&mut worker, &mut log, input)?;
                }
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => break,
            }
        }
    }
    Ok((worker, log))
}

fn run_master(shared: &Shared, mut master: Master, rx: Receiver<Input>) -> Result<(Master, Log)> {
    let mut log = Log::default();
    while !shared.stopped() && !master.is_terminated() {
        match rx.recv_timeout(POLL) {
            Ok(input) => {
                let out = master.step(shared.now(), input).map_err(|e| fail(shared, e))?;
                if shared.audit {
                    master.check_ledger().map_err(|e| fail(shared, e))?;
                    log.ledger_checks += 1;
                    log.observe(master.best());
                }
                emit(shared, &mut log, out);
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => break,
        }
    }
    Ok((master, log))
}

fn run_supervisor(
    shared: &Shared,
    mut sup: Supervisor,
    rx: Receiver<Input>,
    interval: f64,
) -> Result<(Supervisor, Log)> {
    let mut log = Log::default();
    let mut next_tick = interval;
    while !shared.stopped() {
        if shared.start.elapsed() > shared.timeout {
            return Err(fail(
                shared,
                RuntimeError::protocol(format!("no termination within {:?}", shared.timeout)),
            ));
        }
        let now = shared.now();
        let input = if now >= next_tick {
            next_tick += interval;
            Input::Tick
        } else {
            let wait = Duration::from_secs_f64((next_tick - now) * shared.unit).min(POLL);
            match rx.recv_timeout(wait) {
                Ok(input) => input,
                Err(RecvTimeoutError::Timeout) => continue,
                Err(RecvTimeoutError::Disconnected) => break,
            }
        };
        let out = sup.step(input).map_err(|e| fail(shared, e))?;
        if shared.audit {
            log.observe(sup.best());
        }
        let (_, finish) = emit(shared, &mut log, out);
        if finish {
            break;
        }
    }
    Ok((sup, log))
}

pub(crate) fn run(setup: Setup, cfg: &RunConfig) -> Result<RunMetrics> {
    let Setup {
        problem,
        layout,
        supervisor,
        masters,
        workers,
        wire,
        particles,
    } = setup;
    let (senders, receivers): (Vec<_>, Vec<_>) = (0..layout.actor_count()).map(|_| unbounded()).unzip();
    let shared = Shared {
        problem: &problem,
        senders,
        wire,
        start: Instant::now(),
        unit: cfg.time_unit.as_secs_f64().max(1e-9),
        timeout: cfg.timeout,
        trace: cfg.trace,
        audit: cfg.audit,
        budget: cfg.budget,
        nodes: AtomicU64::new(0),
        stop: AtomicBool::new(false),
        exhausted: AtomicBool::new(false),
        incumbent: SharedIncumbent::new(),
    };
    let max_speed = cfg.het.speeds.iter().copied().fold(f64::MIN, f64::max);
    let mut receivers: Vec<Option<Receiver<Input>>> = receivers.into_iter().map(Some).collect();
    let mut take_rx = |a: ActorId| receivers[a.0 as usize].take().expect("one receiver per actor");

    let sup_rx = take_rx(crate::topology::SUPERVISOR);
    let master_rx: Vec<_> = layout.masters().iter().map(|&m| take_rx(m)).collect();
    let worker_rx: Vec<_> = workers.iter().map(|w| take_rx(w.id())).collect();

    let (sup_res, master_res, worker_res) = thread::scope(|s| {
        let shared = &shared;
        let wh: Vec<_> = workers
            .into_iter()
            .zip(worker_rx)
            .enumerate()
            .map(|(i, (w, rx))| {
                let slowdown = max_speed / cfg.het.speeds[i] - 1.0;
                s.spawn(move || run_worker(shared, w, rx, slowdown))
            })
            .collect();
        let mh: Vec<_> = masters
            .into_iter()
            .zip(master_rx)
            .map(|(m, rx)| s.spawn(move || run_master(shared, m, rx)))
            .collect();
        let sup_res = run_supervisor(shared, supervisor, sup_rx, cfg.topology.sync_interval);
        if sup_res.is_err() {
            shared.halt();
        }
        let master_res: Vec<_> = mh.into_iter().map(|h| h.join().expect("master thread panicked")).collect();
        let worker_res: Vec<_> = wh.into_iter().map(|h| h.join().expect("worker thread panicked")).collect();
        (sup_res, master_res, worker_res)
    });
    let end = shared.now();

    let (supervisor, sup_log) = sup_res?;
    let masters: Vec<(Master, Log)> = master_res.into_iter().collect::<Result<_>>()?;
    let workers: Vec<(Worker, Log)> = worker_res.into_iter().collect::<Result<_>>()?;
    let exhausted = shared.exhausted.load(Ordering::SeqCst);
    let complete = supervisor.is_finished() && !exhausted;
    if !complete && !exhausted {
        return Err(RuntimeError::protocol("threads stopped before termination"));
    }

    let mut messages: BTreeMap<MessageKind, KindTally> = BTreeMap::new();
    let mut trace = Vec::new();
    let mut audit = cfg.audit.then(Audit::default);
    let mut per_master: Vec<MasterMetrics> = masters
        .iter()
        .map(|(m, _)| MasterMetrics {
            received: m.counters().received,
            surrendered: m.counters().surrendered,
            ..MasterMetrics::default()
        })
        .collect();
    let mut last_done: f64 = 0.0;
    let logs = std::iter::once((crate::topology::SUPERVISOR, &sup_log))
        .chain(masters.iter().map(|(m, l)| (m.id(), l)))
        .chain(workers.iter().map(|(w, l)| (w.id(), l)));
    for (id, log) in logs {
        for (k, t) in &log.messages {
            let e = messages.entry(*k).or_default();
            e.count += t.count;
            e.bytes += t.bytes;
        }
        trace.extend(log.trace.iter().cloned());
        if let Some(w) = layout.worker_index(id) {
            let pm = &mut per_master[layout.owner_of(w)];
            pm.particles += log.done.len() as u64;
            pm.busy_time += log.busy;
        }
        for &(_, t) in &log.done {
            last_done = last_done.max(t);
        }
        if let Some(a) = &mut audit {
            a.ledger_checks += log.ledger_checks;
            a.best_history.insert(id, log.history.clone());
            for &(p, _) in &log.done {
                *a.completions.entry(p).or_default() += 1;
            }
        }
    }
    trace.sort_by(|a, b| a.time.total_cmp(&b.time));

    let workers: Vec<Worker> = workers.into_iter().map(|(w, _)| w).collect();
    let (makespan, permutation) = final_answer(&problem.inst, &workers)?;
    Ok(RunMetrics {
        time: if complete { last_done } else { end },
        complete,
        makespan,
        permutation,
        nodes_expanded: shared.nodes.load(Ordering::SeqCst),
        particles_issued: particles,
        per_master,
        messages,
        rebalance_rounds: supervisor.rebalance_rounds(),
        trace,
        audit,
    })
}

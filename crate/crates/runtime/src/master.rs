use std::collections::{BTreeMap, BTreeSet, VecDeque};

use flowbal_core::{MasterStats, NodeId, Time, TreeCodec};

use crate::actor::{send, Input, Output, Transfer};
use crate::error::{Result, RuntimeError};
use crate::message::{ActorId, LoadReport, Message, Payload};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slot {
    Unassigned,
    Assigned { worker: ActorId, since: f64 },
    Done { worker: ActorId },
    /// Handed back to the supervisor for reallocation.
    Surrendered,
}

/// Counters kept alongside the ledger.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MasterCounters {
    pub received: u64,
    pub surrendered: u64,
    pub completed: u64,
    pub total_exec_time: f64,
}

/// Owns a queue of particles and feeds them to its workers.
///
/// The ledger maps every particle ever received to its state; at every
/// event `unassigned + assigned + done == received - surrendered`.
pub struct Master {
    index: usize,
    id: ActorId,
    supervisor: ActorId,
    workers: Vec<ActorId>,
    codec: TreeCodec,
    transfer: Transfer,
    max_batch: usize,
    ledger: BTreeMap<NodeId, Slot>,
    unassigned: BTreeSet<NodeId>,
    running: BTreeMap<ActorId, NodeId>,
    idle: VecDeque<ActorId>,
    counters: MasterCounters,
    best: Time,
    /// Best value each worker is known to have; avoids redundant replies.
    worker_knows: Vec<Time>,
    supervisor_knows: Time,
    terminated: bool,
}

impl Master {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        index: usize,
        id: ActorId,
        supervisor: ActorId,
        workers: Vec<ActorId>,
        codec: TreeCodec,
        transfer: Transfer,
        max_batch: usize,
        initial: impl IntoIterator<Item = NodeId>,
    ) -> Result<Self> {
        let n = workers.len();
        let mut master = Self {
            index,
            id,
            supervisor,
            workers,
            codec,
            transfer,
            max_batch: max_batch.max(1),
            ledger: BTreeMap::new(),
            unassigned: BTreeSet::new(),
            running: BTreeMap::new(),
            idle: VecDeque::new(),
            counters: MasterCounters::default(),
            best: Time::MAX,
            worker_knows: vec![Time::MAX; n],
            supervisor_knows: Time::MAX,
            terminated: false,
        };
        for id in initial {
            master.receive(id)?;
        }
        Ok(master)
    }

    pub fn id(&self) -> ActorId {
        self.id
    }

    pub fn best(&self) -> Time {
        self.best
    }

    pub fn counters(&self) -> MasterCounters {
        self.counters
    }

    pub fn pending(&self) -> u64 {
        self.unassigned.len() as u64
    }

    pub fn slot(&self, id: NodeId) -> Option<Slot> {
        self.ledger.get(&id).copied()
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn stats(&self) -> MasterStats {
        MasterStats {
            master_id: self.index,
            n_workers: self.workers.len(),
            completed: self.counters.completed,
            total_exec_time: self.counters.total_exec_time,
            pending_load: self.pending(),
        }
    }

    pub fn load_report(&self) -> LoadReport {
        LoadReport {
            pending: self.pending(),
            completed: self.counters.completed,
            n_workers: self.workers.len() as u64,
            total_exec_time: self.counters.total_exec_time,
        }
    }

    /// Recounts the ledger and checks it against the counters.
    pub fn check_ledger(&self) -> Result<()> {
        let (mut unassigned, mut assigned, mut done) = (0u64, 0u64, 0u64);
        for (id, slot) in &self.ledger {
            match slot {
                Slot::Unassigned => {
                    unassigned += 1;
                    if !self.unassigned.contains(id) {
                        return Err(RuntimeError::protocol(format!("{id} unassigned but not queued")));
                    }
                }
                Slot::Assigned { worker, .. } => {
                    assigned += 1;
                    if self.running.get(worker) != Some(id) {
                        return Err(RuntimeError::protocol(format!("{id} assigned to {worker} but not running")));
                    }
                }
                Slot::Done { .. } => done += 1,
                Slot::Surrendered => {}
            }
        }
        let c = &self.counters;
        if unassigned + assigned + done != c.received - c.surrendered
            || unassigned != self.unassigned.len() as u64
            || assigned != self.running.len() as u64
            || done != c.completed
        {
            return Err(RuntimeError::protocol(format!(
                "master {} ledger out of balance: {unassigned}+{assigned}+{done} vs {}-{}",
                self.id, c.received, c.surrendered
            )));
        }
        Ok(())
    }

    fn receive(&mut self, id: NodeId) -> Result<()> {
        if id.0 >= self.codec.node_count() {
            return Err(RuntimeError::protocol(format!("master {} received unknown particle {id}", self.id)));
        }
        match self.ledger.get(&id) {
            None | Some(Slot::Surrendered) => {}
            Some(_) => {
                return Err(RuntimeError::protocol(format!("master {} received {id} twice", self.id)));
            }
        }
        self.ledger.insert(id, Slot::Unassigned);
        self.unassigned.insert(id);
        self.counters.received += 1;
        Ok(())
    }

    fn worker_slot(&self, w: ActorId) -> Result<usize> {
        self.workers
            .iter()
            .position(|&x| x == w)
            .ok_or_else(|| RuntimeError::protocol(format!("master {} has no worker {w}", self.id)))
    }

    /// Grants the lowest unassigned particle to `w`, sharing a newer best first.
    fn grant(&mut self, now: f64, w: ActorId, out: &mut Vec<Output>) -> Result<bool> {
        let Some(id) = self.unassigned.pop_first() else {
            return Ok(false);
        };
        let slot = self.worker_slot(w)?;
        if self.best < self.worker_knows[slot] {
            self.worker_knows[slot] = self.best;
            out.push(send(self.id, w, Payload::BestSolution(self.best)));
        }
        self.ledger.insert(id, Slot::Assigned { worker: w, since: now });
        self.running.insert(w, id);
        out.push(send(self.id, w, Payload::TaskGrant(Some(id))));
        Ok(true)
    }

    fn grant_idle(&mut self, now: f64, out: &mut Vec<Output>) -> Result<()> {
        while !self.unassigned.is_empty() {
            let Some(w) = self.idle.pop_front() else { break };
            self.grant(now, w, out)?;
        }
        Ok(())
    }

    /// Picks the particles to hand back when `quota` is exceeded.
    fn surrender(&mut self, quota: u64) -> Vec<NodeId> {
        let pending = self.pending();
        if pending <= quota {
            return Vec::new();
        }
        let picked: Vec<NodeId> = match self.transfer {
            // shallowest floor, newest within it
            Transfer::OneInOne => {
                let first = *self.unassigned.first().expect("pending > 0");
                let floor = self.codec.floor_of(first).expect("ledger ids are valid");
                let end = self
                    .codec
                    .floor_offset(floor + 1)
                    .unwrap_or(self.codec.node_count());
                let id = *self
                    .unassigned
                    .range(..NodeId(end))
                    .next_back()
                    .expect("first is in range");
                vec![id]
            }
            // deepest first; ids grow with the floor
            Transfer::MultiInOne => self
                .unassigned
                .iter()
                .rev()
                .take((pending - quota) as usize)
                .copied()
                .collect(),
        };
        for id in &picked {
            self.unassigned.remove(id);
            self.ledger.insert(*id, Slot::Surrendered);
            self.counters.surrendered += 1;
        }
        picked
    }

    fn report(&self) -> Output {
        send(self.id, self.supervisor, Payload::LoadReport(self.load_report()))
    }

    pub fn step(&mut self, now: f64, input: Input) -> Result<Vec<Output>> {
        let Input::Deliver(msg) = input else {
            return Err(RuntimeError::protocol(format!("master {} got a non-message input", self.id)));
        };
        if self.terminated {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        if msg.src == self.supervisor {
            self.on_supervisor(now, msg, &mut out)?;
        } else {
            self.on_worker(now, msg, &mut out)?;
        }
        Ok(out)
    }

    fn on_worker(&mut self, now: f64, msg: Message, out: &mut Vec<Output>) -> Result<()> {
        let w = msg.src;
        let slot = self.worker_slot(w)?;
        match msg.payload {
            Payload::AskForTasks => {
                let finished = self.running.remove(&w);
                if let Some(id) = finished {
                    let Some(Slot::Assigned { since, .. }) = self.ledger.get(&id).copied() else {
                        return Err(RuntimeError::protocol(format!("{id} finished but not assigned")));
                    };
                    self.ledger.insert(id, Slot::Done { worker: w });
                    self.counters.completed += 1;
                    self.counters.total_exec_time += (now - since).max(0.0);
                }
                if !self.grant(now, w, out)? {
                    out.push(send(self.id, w, Payload::TaskGrant(None)));
                    self.idle.push_back(w);
                }
                if self.unassigned.is_empty() && (finished.is_some() || self.running.is_empty()) {
                    out.push(self.report());
                }
            }
            Payload::UpdateSolutionRequest { quota: None } => {
                if self.best < self.worker_knows[slot] {
                    self.worker_knows[slot] = self.best;
                    out.push(send(self.id, w, Payload::BestSolution(self.best)));
                }
            }
            Payload::BestSolution(v) => {
                self.worker_knows[slot] = self.worker_knows[slot].min(v);
                if v < self.best {
                    self.best = v;
                    self.supervisor_knows = v;
                    out.push(send(self.id, self.supervisor, Payload::BestSolution(v)));
                }
            }
            other => {
                return Err(RuntimeError::protocol(format!(
                    "master {} cannot take {} from worker {w}",
                    self.id,
                    other.kind()
                )))
            }
        }
        Ok(())
    }

    fn on_supervisor(&mut self, now: f64, msg: Message, out: &mut Vec<Output>) -> Result<()> {
        match msg.payload {
            Payload::UpdateSolutionRequest { quota } => {
                if self.best < self.supervisor_knows {
                    self.supervisor_knows = self.best;
                    out.push(send(self.id, self.supervisor, Payload::BestSolution(self.best)));
                }
                if let Some(q) = quota {
                    let ids = self.surrender(q);
                    match self.transfer {
                        Transfer::OneInOne => {
                            for id in ids {
                                out.push(send(self.id, self.supervisor, Payload::ReallocateSingle(id)));
                            }
                        }
                        Transfer::MultiInOne => {
                            for chunk in ids.chunks(self.max_batch) {
                                out.push(send(self.id, self.supervisor, Payload::ReallocateBatch(chunk.to_vec())));
                            }
                        }
                    }
                }
                out.push(self.report());
            }
            Payload::BestSolution(v) => {
                self.supervisor_knows = self.supervisor_knows.min(v);
                self.best = self.best.min(v);
            }
            Payload::ReallocateSingle(id) => {
                self.receive(id)?;
                self.grant_idle(now, out)?;
            }
            Payload::ReallocateBatch(ids) => {
                for id in ids {
                    self.receive(id)?;
                }
                self.grant_idle(now, out)?;
            }
            Payload::Terminate => {
                self.terminated = true;
                for &w in &self.workers {
                    out.push(send(self.id, w, Payload::Terminate));
                }
            }
            other => {
                return Err(RuntimeError::protocol(format!(
                    "master {} cannot take {} from the supervisor",
                    self.id,
                    other.kind()
                )))
            }
        }
        Ok(())
    }
}

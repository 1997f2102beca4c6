use std::collections::BTreeMap;

use flowbal_core::{acwn_select, pfs_allocate, rand_select, MasterStats, NodeId, PfsWeight, Strategy, Time};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::actor::{send, Input, Output, Transfer};
use crate::error::{Result, RuntimeError};
use crate::message::{ActorId, Payload};

/// Coordinates masters: polls them for solutions and load every tick,
/// broadcasts improvements, reroutes surrendered particles and decides
/// termination.
pub struct Supervisor {
    id: ActorId,
    masters: Vec<ActorId>,
    snapshot: Vec<MasterStats>,
    best: Time,
    total: u64,
    strategy: Strategy,
    transfer: Transfer,
    pfs_weight: PfsWeight,
    max_batch: usize,
    rng: ChaCha8Rng,
    plan: Option<Vec<u64>>,
    rounds: u64,
    finished: bool,
}

impl Supervisor {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: ActorId,
        masters: Vec<ActorId>,
        snapshot: Vec<MasterStats>,
        total: u64,
        strategy: Strategy,
        transfer: Transfer,
        pfs_weight: PfsWeight,
        max_batch: usize,
        seed: u64,
    ) -> Self {
        Self {
            id,
            masters,
            snapshot,
            best: Time::MAX,
            total,
            strategy,
            transfer,
            pfs_weight,
            max_batch: max_batch.max(1),
            rng: ChaCha8Rng::seed_from_u64(seed),
            plan: None,
            rounds: 0,
            finished: false,
        }
    }

    pub fn best(&self) -> Time {
        self.best
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Ticks on which at least one quota was issued.
    pub fn rebalance_rounds(&self) -> u64 {
        self.rounds
    }

    pub fn snapshot(&self) -> &[MasterStats] {
        &self.snapshot
    }

    fn master_index(&self, a: ActorId) -> Result<usize> {
        self.masters
            .iter()
            .position(|&m| m == a)
            .ok_or_else(|| RuntimeError::protocol(format!("supervisor got a message from non-master {a}")))
    }

    /// Per-master surrender quota for this tick, `None` for no rebalancing.
    pub fn quotas(&mut self) -> Result<Vec<Option<u64>>> {
        let m = self.snapshot.len();
        if !self.strategy.is_dynamic() || !needs_rebalance(&self.snapshot) {
            return Ok(vec![None; m]);
        }
        let pending: Vec<u64> = self.snapshot.iter().map(|s| s.pending_load).collect();
        let sum: u64 = pending.iter().sum();
        let keep: Vec<u64> = match self.strategy {
            Strategy::Pfs => {
                let plan = pfs_allocate(sum, &self.snapshot, self.pfs_weight)?.counts;
                self.plan = Some(plan.clone());
                plan
            }
            _ => vec![sum.div_ceil(m as u64); m],
        };
        Ok(pending
            .iter()
            .zip(&keep)
            .map(|(&p, &k)| (p > k).then_some(k))
            .collect())
    }

    fn tick(&mut self, out: &mut Vec<Output>) -> Result<()> {
        if self.finished {
            return Ok(());
        }
        let quotas = self.quotas()?;
        if quotas.iter().any(Option::is_some) {
            self.rounds += 1;
        }
        for (i, quota) in quotas.into_iter().enumerate() {
            if let Some(q) = quota {
                let s = &mut self.snapshot[i];
                s.pending_load = match self.transfer {
                    Transfer::OneInOne => s.pending_load - 1,
                    Transfer::MultiInOne => q,
                };
            }
            out.push(send(self.id, self.masters[i], Payload::UpdateSolutionRequest { quota }));
        }
        Ok(())
    }

    /// Chooses a receiver for one surrendered particle, never the donor.
    fn route(&mut self, donor: usize) -> Result<usize> {
        let others: Vec<MasterStats> = self
            .snapshot
            .iter()
            .filter(|s| s.master_id != donor)
            .cloned()
            .collect();
        if others.is_empty() {
            return Err(RuntimeError::protocol("nowhere to reallocate with a single master"));
        }
        let target = match self.strategy {
            Strategy::Sld => {
                return Err(RuntimeError::protocol("static distribution never reallocates"));
            }
            Strategy::Acwn => acwn_select(&others)?,
            Strategy::Rand => rand_select(&others, &mut self.rng)?,
            Strategy::Pfs => {
                let plan = match &self.plan {
                    Some(p) => p.clone(),
                    None => {
                        let sum = self.snapshot.iter().map(|s| s.pending_load).sum();
                        pfs_allocate(sum, &self.snapshot, self.pfs_weight)?.counts
                    }
                };
                // largest deficit against the plan, ties to the lower index
                others
                    .iter()
                    .max_by_key(|s| {
                        let deficit = plan[s.master_id] as i64 - s.pending_load as i64;
                        (deficit, std::cmp::Reverse(s.master_id))
                    })
                    .expect("non-empty")
                    .master_id
            }
        };
        self.snapshot[target].pending_load += 1;
        Ok(target)
    }

    fn reallocate(&mut self, donor: usize, ids: Vec<NodeId>, out: &mut Vec<Output>) -> Result<()> {
        let mut per_target: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
        for id in ids {
            let t = self.route(donor)?;
            per_target.entry(t).or_default().push(id);
        }
        for (t, ids) in per_target {
            match self.transfer {
                Transfer::OneInOne => {
                    for id in ids {
                        out.push(send(self.id, self.masters[t], Payload::ReallocateSingle(id)));
                    }
                }
                Transfer::MultiInOne => {
                    for chunk in ids.chunks(self.max_batch) {
                        out.push(send(self.id, self.masters[t], Payload::ReallocateBatch(chunk.to_vec())));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn step(&mut self, input: Input) -> Result<Vec<Output>> {
        let mut out = Vec::new();
        let msg = match input {
            Input::Tick => {
                self.tick(&mut out)?;
                return Ok(out);
            }
            Input::SliceDone => return Err(RuntimeError::protocol("supervisor does not compute")),
            Input::Deliver(msg) => msg,
        };
        let from = self.master_index(msg.src)?;
        match msg.payload {
            Payload::BestSolution(v) => {
                if v < self.best {
                    self.best = v;
                    for (i, &m) in self.masters.iter().enumerate() {
                        if i != from {
                            out.push(send(self.id, m, Payload::BestSolution(v)));
                        }
                    }
                }
            }
            Payload::LoadReport(r) => {
                let s = &mut self.snapshot[from];
                s.pending_load = r.pending;
                s.completed = r.completed;
                s.total_exec_time = r.total_exec_time;
                s.n_workers = r.n_workers as usize;
                let done: u64 = self.snapshot.iter().map(|s| s.completed).sum();
                if done >= self.total && !self.finished {
                    self.finished = true;
                    for &m in &self.masters {
                        out.push(send(self.id, m, Payload::Terminate));
                    }
                    out.push(Output::Finish);
                }
            }
            Payload::ReallocateSingle(id) => self.reallocate(from, vec![id], &mut out)?,
            Payload::ReallocateBatch(ids) => self.reallocate(from, ids, &mut out)?,
            other => {
                return Err(RuntimeError::protocol(format!("supervisor cannot take {}", other.kind())));
            }
        }
        Ok(out)
    }
}

/// A master is overloaded when it holds at least two pending particles and
/// more than twice the mean pending load of the other masters.
pub fn needs_rebalance(snapshot: &[MasterStats]) -> bool {
    let m = snapshot.len();
    if m < 2 {
        return false;
    }
    let sum: u64 = snapshot.iter().map(|s| s.pending_load).sum();
    snapshot.iter().any(|s| {
        let others = (sum - s.pending_load) as f64 / (m - 1) as f64;
        s.pending_load >= 2 && s.pending_load as f64 > 2.0 * others
    })
}

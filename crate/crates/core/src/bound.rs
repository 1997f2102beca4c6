//! Lower bounds on the makespan of every completion of a prefix.
//!
//! The default bound looks at one machine at a time: machine `j` is free at
//! `front[j]`, must still process every remaining job, and the job it
//! processes last still needs its tail on the machines after `j`:
//!
//! ```text
//! LB = max_j ( front[j] + sum_{r in R} p(r, j) + min_{r in R} tail(r, j) )
//! tail(r, j) = sum_{k > j} p(r, k)
//! ```
//!
//! The optional two-machine bound additionally relaxes every pair of adjacent
//! machines to an `F2 || Cmax` problem with machine availability times, which
//! Johnson's rule solves exactly.

use std::str::FromStr;

use crate::error::Error;
use crate::instance::{CompletionFront, Instance, Time};
use crate::johnson::johnson_sequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum BoundKind {
    /// One-machine bound.
    #[default]
    Machine,
    /// One-machine bound combined with Johnson relaxations of adjacent machine pairs.
    JohnsonPairs,
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "machine" => Ok(BoundKind::Machine),
            "johnson" | "johnson-pairs" => Ok(BoundKind::JohnsonPairs),
            other => Err(Error::invalid(format!("unknown bound kind `{other}`"))),
        }
    }
}

/// Machine-based lower bound over the jobs in `remaining`.
///
/// Equals `front[m-1]` when nothing remains and the exact makespan of the
/// unique completion when one job remains.
pub fn lower_bound(inst: &Instance, front: &CompletionFront, remaining: &[usize]) -> Time {
    machine_bound(inst, front.as_slice(), remaining)
}

fn machine_bound(inst: &Instance, front: &[Time], remaining: &[usize]) -> Time {
    let m = inst.machines();
    if remaining.is_empty() {
        return front[m - 1];
    }
    let mut best = 0;
    let mut tail_after = vec![0; remaining.len()];
    // walk machines from last to first so tails accumulate incrementally
    for j in (0..m).rev() {
        let mut load = 0;
        let mut min_tail = Time::MAX;
        for (t, &r) in tail_after.iter_mut().zip(remaining) {
            let p = inst.time(r, j);
            load += p;
            min_tail = min_tail.min(*t);
            *t += p;
        }
        best = best.max(front[j] + load + min_tail);
    }
    best
}

/// Bound evaluator with per-instance precomputation, shared by the search.
#[derive(Debug, Clone)]
pub struct Bounder {
    kind: BoundKind,
    machines: usize,
    /// `tails[r * m + j] = sum_{k > j} p(r, k)`
    tails: Vec<Time>,
    /// Johnson order of all jobs for every adjacent pair `(j, j + 1)`.
    pair_orders: Vec<Vec<usize>>,
}

impl Bounder {
    pub fn new(inst: &Instance, kind: BoundKind) -> Self {
        let (n, m) = (inst.jobs(), inst.machines());
        let mut tails = vec![0; n * m];
        for r in 0..n {
            let mut acc = 0;
            for j in (0..m).rev() {
                tails[r * m + j] = acc;
                acc += inst.time(r, j);
            }
        }
        let pair_orders = match kind {
            BoundKind::Machine => Vec::new(),
            BoundKind::JohnsonPairs => (0..m.saturating_sub(1))
                .map(|j| {
                    let pairs: Vec<(Time, Time)> =
                        (0..n).map(|r| (inst.time(r, j), inst.time(r, j + 1))).collect();
                    johnson_sequence(&pairs, 0..n)
                })
                .collect(),
        };
        Self {
            kind,
            machines: m,
            tails,
            pair_orders,
        }
    }

    pub fn kind(&self) -> BoundKind {
        self.kind
    }

    #[inline]
    fn tail(&self, job: usize, machine: usize) -> Time {
        self.tails[job * self.machines + machine]
    }

    /// Bound for a prefix with completion `front` and unscheduled `remaining`.
    pub fn bound(&self, inst: &Instance, front: &[Time], remaining: &[usize]) -> Time {
        let base = machine_bound(inst, front, remaining);
        match self.kind {
            BoundKind::Machine => base,
            BoundKind::JohnsonPairs => {
                let mut member = vec![false; inst.jobs()];
                for &r in remaining {
                    member[r] = true;
                }
                base.max(self.pair_bound(inst, front, remaining, &member))
            }
        }
    }

    fn pair_bound(&self, inst: &Instance, front: &[Time], remaining: &[usize], member: &[bool]) -> Time {
        if remaining.is_empty() {
            return 0;
        }
        let mut best = 0;
        for (j, order) in self.pair_orders.iter().enumerate() {
            let mut t1 = front[j];
            let mut t2 = front[j + 1];
            for &r in order.iter().filter(|&&r| member[r]) {
                t1 += inst.time(r, j);
                t2 = t2.max(t1) + inst.time(r, j + 1);
            }
            let min_tail = remaining.iter().map(|&r| self.tail(r, j + 1)).min().unwrap_or(0);
            best = best.max(t2 + min_tail);
        }
        best
    }

    /// Fronts and bounds of every child of a node.
    ///
    /// `remaining` lists the jobs not yet in the node's prefix; the result holds
    /// one entry per remaining job in the same order. Runs in `O(|R| * m)` for
    /// the machine bound by reusing per-machine load sums and the two smallest
    /// tails of the parent.
    pub(crate) fn child_bounds(
        &self,
        inst: &Instance,
        front: &[Time],
        remaining: &[usize],
        out: &mut Vec<ChildBound>,
    ) {
        out.clear();
        let m = self.machines;
        let mut loads = vec![0 as Time; m];
        // smallest and second-smallest tail per machine, with the argmin job
        let mut min1 = vec![(Time::MAX, usize::MAX); m];
        let mut min2 = vec![Time::MAX; m];
        for &r in remaining {
            for j in 0..m {
                loads[j] += inst.time(r, j);
                let t = self.tail(r, j);
                if t < min1[j].0 {
                    min2[j] = min1[j].0;
                    min1[j] = (t, r);
                } else if t < min2[j] {
                    min2[j] = t;
                }
            }
        }
        let mut member = match self.kind {
            BoundKind::Machine => Vec::new(),
            BoundKind::JohnsonPairs => {
                let mut v = vec![false; inst.jobs()];
                for &r in remaining {
                    v[r] = true;
                }
                v
            }
        };
        let last_child = remaining.len() == 1;
        for &c in remaining {
            let mut child_front = Vec::with_capacity(m);
            let mut prev = 0;
            for (&f, &p) in front.iter().zip(inst.job_row(c)) {
                prev = f.max(prev) + p;
                child_front.push(prev);
            }
            let bound = if last_child {
                child_front[m - 1]
            } else {
                let mut b = 0;
                for j in 0..m {
                    let tail = if min1[j].1 == c { min2[j] } else { min1[j].0 };
                    b = b.max(child_front[j] + loads[j] - inst.time(c, j) + tail);
                }
                if self.kind == BoundKind::JohnsonPairs {
                    member[c] = false;
                    let rest: Vec<usize> = remaining.iter().copied().filter(|&r| r != c).collect();
                    b = b.max(self.pair_bound(inst, &child_front, &rest, &member));
                    member[c] = true;
                }
                b
            };
            out.push(ChildBound {
                job: c,
                bound,
                front: child_front,
            });
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ChildBound {
    pub job: usize,
    pub bound: Time,
    pub front: Vec<Time>,
}

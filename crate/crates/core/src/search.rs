//! Depth-first branch and bound over job prefixes.
//!
//! [`SubtreeSearch`] explores the subtree below one prefix and can be paused
//! after any number of expansions, which lets the runtime interleave a
//! worker's search with message handling. [`solve_sequential`] drives it over
//! the whole tree.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use crate::bound::{BoundKind, Bounder, ChildBound};
use crate::error::Result;
use crate::instance::{validate_prefix, CompletionFront, Instance, Permutation, Time};
use crate::tree::remaining_jobs;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Nodes visited and not pruned, leaves included.
    pub nodes_expanded: u64,
    /// Nodes discarded because their bound met the incumbent.
    pub nodes_pruned: u64,
    /// Strict improvements of the incumbent found by this search.
    pub incumbent_updates: u64,
    pub elapsed: Duration,
}

impl SearchStats {
    pub fn merge(&mut self, other: &SearchStats) {
        self.nodes_expanded += other.nodes_expanded;
        self.nodes_pruned += other.nodes_pruned;
        self.incumbent_updates += other.incumbent_updates;
        self.elapsed += other.elapsed;
    }
}

/// Best-known solution. The permutation may be unknown when only the value
/// was received from elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incumbent {
    pub makespan: Time,
    pub permutation: Option<Permutation>,
}

impl Incumbent {
    pub fn value(makespan: Time) -> Self {
        Self {
            makespan,
            permutation: None,
        }
    }
}

/// Callbacks for inspecting a search; every method defaults to a no-op.
pub trait SearchObserver {
    fn pruned(&mut self, _prefix: &[usize], _job: usize, _bound: Time, _incumbent: Time) {}
    fn improved(&mut self, _perm: &[usize], _makespan: Time) {}
}

impl SearchObserver for () {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    Finished,
    Paused,
}

struct Frame {
    children: Vec<ChildBound>,
    next: usize,
}

/// Resumable DFS below a fixed prefix.
///
/// Children are visited in ascending bound order, ties by job index, and a
/// node is pruned when its bound is not below the current upper bound.
pub struct SubtreeSearch {
    n: usize,
    root: Vec<usize>,
    started: bool,
    prefix: Vec<usize>,
    stack: Vec<Frame>,
    upper: Time,
    best: Option<(Time, Vec<usize>)>,
    stats: SearchStats,
    finished: bool,
}

impl SubtreeSearch {
    /// Search below `root`; the empty prefix searches the whole tree.
    pub fn new(inst: &Instance, root: Vec<usize>) -> Result<Self> {
        validate_prefix(&root, inst.jobs())?;
        Ok(Self {
            n: inst.jobs(),
            prefix: root.clone(),
            root,
            started: false,
            stack: Vec::new(),
            upper: Time::MAX,
            best: None,
            stats: SearchStats::default(),
            finished: false,
        })
    }

    pub fn root(&self) -> &[usize] {
        &self.root
    }

    /// Lowers the pruning threshold. Larger values are ignored.
    pub fn tighten(&mut self, upper: Time) {
        self.upper = self.upper.min(upper);
    }

    pub fn upper(&self) -> Time {
        self.upper
    }

    /// Best complete permutation found by this search, if it beat the
    /// threshold in force when it was found.
    pub fn best(&self) -> Option<(Time, &[usize])> {
        self.best.as_ref().map(|(t, p)| (*t, p.as_slice()))
    }

    pub fn stats(&self) -> &SearchStats {
        &self.stats
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    fn record_leaf(&mut self, makespan: Time, job: Option<usize>, obs: &mut impl SearchObserver) {
        self.stats.nodes_expanded += 1;
        if makespan < self.upper {
            let mut perm = self.prefix.clone();
            perm.extend(job);
            obs.improved(&perm, makespan);
            self.upper = makespan;
            self.best = Some((makespan, perm));
            self.stats.incumbent_updates += 1;
        }
    }

    fn expand(&mut self, inst: &Instance, bounder: &Bounder, front: &[Time]) {
        self.stats.nodes_expanded += 1;
        let remaining = remaining_jobs(self.n, &self.prefix);
        let mut children = Vec::with_capacity(remaining.len());
        bounder.child_bounds(inst, front, &remaining, &mut children);
        children.sort_by_key(|c| (c.bound, c.job));
        self.stack.push(Frame { children, next: 0 });
    }

    /// Runs until the subtree is exhausted or `limit` more nodes were expanded.
    pub fn run(
        &mut self,
        inst: &Instance,
        bounder: &Bounder,
        limit: u64,
        obs: &mut impl SearchObserver,
    ) -> Progress {
        if self.finished {
            return Progress::Finished;
        }
        let goal = self.stats.nodes_expanded.saturating_add(limit);
        if !self.started {
            self.started = true;
            if limit == 0 {
                self.started = false;
                return Progress::Paused;
            }
            let front = CompletionFront::of_prefix(inst, &self.prefix).expect("validated root");
            if self.prefix.len() == self.n {
                self.record_leaf(front.last(), None, obs);
                self.finished = true;
                return Progress::Finished;
            }
            if !self.root.is_empty() {
                let remaining = remaining_jobs(self.n, &self.prefix);
                let bound = bounder.bound(inst, front.as_slice(), &remaining);
                if bound >= self.upper {
                    self.stats.nodes_pruned += 1;
                    let (last, head) = self.prefix.split_last().expect("non-empty root");
                    obs.pruned(head, *last, bound, self.upper);
                    self.finished = true;
                    return Progress::Finished;
                }
            }
            self.expand(inst, bounder, front.as_slice());
        }

        while self.stats.nodes_expanded < goal {
            let Some(frame) = self.stack.last_mut() else {
                self.finished = true;
                return Progress::Finished;
            };
            if frame.next >= frame.children.len() {
                self.stack.pop();
                if !self.stack.is_empty() {
                    self.prefix.pop();
                }
                continue;
            }
            let idx = frame.next;
            frame.next += 1;
            let (job, bound) = (frame.children[idx].job, frame.children[idx].bound);
            if bound >= self.upper {
                // siblings are sorted by bound, so the rest of the frame goes too
                let rest = frame.children.len() - idx;
                frame.next = frame.children.len();
                self.stats.nodes_pruned += rest as u64;
                for c in &self.stack.last().expect("frame").children[idx..] {
                    obs.pruned(&self.prefix, c.job, c.bound, self.upper);
                }
                continue;
            }
            if self.prefix.len() + 1 == self.n {
                self.record_leaf(bound, Some(job), obs);
                continue;
            }
            let front = std::mem::take(&mut frame.children[idx].front);
            self.prefix.push(job);
            self.expand(inst, bounder, &front);
        }
        if self.stack.is_empty() {
            self.finished = true;
            Progress::Finished
        } else {
            Progress::Paused
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    /// Best permutation known at the end; `None` only when the initial
    /// incumbent carried no permutation and nothing better was found.
    pub best: Option<Permutation>,
    pub makespan: Time,
    pub stats: SearchStats,
    /// False when the node budget stopped the search early.
    pub complete: bool,
}

/// Depth-first branch and bound over the whole tree with the machine bound.
///
/// `budget` caps `nodes_expanded`; a truncated run reports `complete: false`
/// and still returns a feasible permutation.
pub fn solve_sequential(inst: &Instance, incumbent: Option<Incumbent>, budget: Option<u64>) -> SearchOutcome {
    let bounder = Bounder::new(inst, BoundKind::Machine);
    solve_with(inst, &bounder, incumbent, budget, &mut ())
}

pub fn solve_with(
    inst: &Instance,
    bounder: &Bounder,
    incumbent: Option<Incumbent>,
    budget: Option<u64>,
    obs: &mut impl SearchObserver,
) -> SearchOutcome {
    let started = Instant::now();
    let mut search = SubtreeSearch::new(inst, Vec::new()).expect("empty root is valid");
    if let Some(inc) = &incumbent {
        search.tighten(inc.makespan);
    }
    let progress = search.run(inst, bounder, budget.unwrap_or(u64::MAX), obs);
    let mut stats = *search.stats();
    stats.elapsed = started.elapsed();

    let (best, makespan) = match (search.best(), incumbent) {
        (Some((t, p)), _) => (Some(Permutation::new(p.to_vec())), t),
        (None, Some(inc)) => (inc.permutation, inc.makespan),
        (None, None) => {
            // budget ran out before the first leaf
            let id = Permutation::identity(inst.jobs());
            let t = crate::instance::makespan(inst, &id).expect("identity is complete");
            (Some(id), t)
        }
    };
    SearchOutcome {
        best,
        makespan,
        stats,
        complete: progress == Progress::Finished,
    }
}

/// Monotone incumbent value shared between threads. Reads may be stale;
/// writes only ever lower the value.
#[derive(Debug)]
pub struct SharedIncumbent(AtomicU64);

impl SharedIncumbent {
    pub fn new() -> Self {
        Self(AtomicU64::new(Time::MAX))
    }

    pub fn get(&self) -> Time {
        self.0.load(Ordering::Relaxed)
    }

    /// Offers a value; returns true if it lowered the incumbent.
    pub fn offer(&self, makespan: Time) -> bool {
        self.0.fetch_min(makespan, Ordering::AcqRel) > makespan
    }
}

impl Default for SharedIncumbent {
    fn default() -> Self {
        Self::new()
    }
}

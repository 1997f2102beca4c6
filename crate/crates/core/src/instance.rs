//! Flowshop instances, job orders and completion-time evaluation.
//!
//! Every job visits machines `0..m` in the same order and all machines
//! process the jobs in one shared order. Completion times follow the usual
//! recurrence `C(i, j) = max(C(i-1, j), C(i, j-1)) + p(perm[i], j)`.

use std::fmt;

use crate::error::{Error, Result};

/// Dimensionless integer time unit.
pub type Time = u64;

/// Header fields carried by benchmark files alongside the matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PublishedBounds {
    pub seed: Option<u64>,
    pub upper_bound: Option<Time>,
    pub lower_bound: Option<Time>,
}

/// An `n x m` processing-time matrix indexed by `(job, machine)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    name: String,
    jobs: usize,
    machines: usize,
    times: Vec<Time>,
    published: PublishedBounds,
}

impl Instance {
    /// Builds an instance from a job-major matrix (`rows[job][machine]`).
    pub fn from_rows(name: impl Into<String>, rows: &[Vec<Time>]) -> Result<Self> {
        let jobs = rows.len();
        if jobs == 0 {
            return Err(Error::invalid("an instance needs at least one job"));
        }
        let machines = rows[0].len();
        if machines == 0 {
            return Err(Error::invalid("an instance needs at least one machine"));
        }
        if let Some((j, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != machines) {
            return Err(Error::invalid(format!(
                "job {j} has {} processing times, expected {machines}",
                row.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            jobs,
            machines,
            times: rows.iter().flatten().copied().collect(),
            published: PublishedBounds::default(),
        })
    }

    /// Builds an instance from a flat job-major buffer of `jobs * machines` entries.
    pub fn from_flat(
        name: impl Into<String>,
        jobs: usize,
        machines: usize,
        times: Vec<Time>,
    ) -> Result<Self> {
        if jobs == 0 || machines == 0 {
            return Err(Error::invalid(format!(
                "instance dimensions must be positive, got {jobs}x{machines}"
            )));
        }
        if times.len() != jobs * machines {
            return Err(Error::invalid(format!(
                "expected {} processing times, got {}",
                jobs * machines,
                times.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            jobs,
            machines,
            times,
            published: PublishedBounds::default(),
        })
    }

    pub fn with_published(mut self, published: PublishedBounds) -> Self {
        self.published = published;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of jobs.
    pub fn jobs(&self) -> usize {
        self.jobs
    }

    /// Number of machines.
    pub fn machines(&self) -> usize {
        self.machines
    }

    pub fn published(&self) -> PublishedBounds {
        self.published
    }

    #[inline]
    pub fn time(&self, job: usize, machine: usize) -> Time {
        self.times[job * self.machines + machine]
    }

    /// Processing times of one job across all machines.
    #[inline]
    pub fn job_row(&self, job: usize) -> &[Time] {
        &self.times[job * self.machines..(job + 1) * self.machines]
    }

    /// Rows in `(job, machine)` order.
    pub fn rows(&self) -> impl Iterator<Item = &[Time]> {
        self.times.chunks_exact(self.machines)
    }
}

/// A sequence of distinct job indices. A complete permutation covers every
/// job of its instance exactly once; shorter sequences are prefixes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>) -> Self {
        Self(order)
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks that the sequence is a duplicate-free prefix over `n` jobs.
    pub fn validate_prefix(&self, n: usize) -> Result<()> {
        validate_prefix(&self.0, n)
    }

    /// Checks that the sequence is a complete permutation of `0..n`.
    pub fn validate_complete(&self, n: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::invalid(format!(
                "permutation has {} jobs, expected {n}",
                self.0.len()
            )));
        }
        validate_prefix(&self.0, n)
    }
}

impl From<Vec<usize>> for Permutation {
    fn from(order: Vec<usize>) -> Self {
        Self(order)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for job in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{job}")?;
            first = false;
        }
        Ok(())
    }
}

pub(crate) fn validate_prefix(order: &[usize], n: usize) -> Result<()> {
    if order.len() > n {
        return Err(Error::invalid(format!(
            "sequence of {} jobs exceeds job count {n}",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &job in order {
        if job >= n {
            return Err(Error::invalid(format!("job index {job} out of range 0..{n}")));
        }
        if std::mem::replace(&mut seen[job], true) {
            return Err(Error::invalid(format!("job {job} appears twice")));
        }
    }
    Ok(())
}

/// Per-machine completion times of the last scheduled job of a prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompletionFront(Vec<Time>);

impl CompletionFront {
    /// Front of the empty prefix.
    pub fn empty(machines: usize) -> Self {
        Self(vec![0; machines])
    }

    /// Recomputes the front of `prefix` from scratch.
    pub fn of_prefix(inst: &Instance, prefix: &[usize]) -> Result<Self> {
        validate_prefix(prefix, inst.jobs())?;
        let mut front = Self::empty(inst.machines());
        for &job in prefix {
            front.push_job(inst, job);
        }
        Ok(front)
    }

    pub fn as_slice(&self) -> &[Time] {
        &self.0
    }

    /// Completion time on the last machine.
    pub fn last(&self) -> Time {
        *self.0.last().expect("fronts are never empty")
    }

    /// Returns the front after appending `job`.
    pub fn extend(&self, inst: &Instance, job: usize) -> Result<Self> {
        if job >= inst.jobs() {
            return Err(Error::invalid(format!(
                "job index {job} out of range 0..{}",
                inst.jobs()
            )));
        }
        if self.0.len() != inst.machines() {
            return Err(Error::invalid(format!(
                "front has {} machines, instance has {}",
                self.0.len(),
                inst.machines()
            )));
        }
        let mut next = self.clone();
        next.push_job(inst, job);
        Ok(next)
    }

    /// In-place append; `job` must be in range.
    #[inline]
    pub(crate) fn push_job(&mut self, inst: &Instance, job: usize) {
        let row = inst.job_row(job);
        let mut prev = 0;
        for (c, &p) in self.0.iter_mut().zip(row) {
            prev = (*c).max(prev) + p;
            *c = prev;
        }
    }

    pub(crate) fn from_vec(v: Vec<Time>) -> Self {
        Self(v)
    }
}

/// Makespan of a complete permutation.
pub fn makespan(inst: &Instance, perm: &Permutation) -> Result<Time> {
    perm.validate_complete(inst.jobs())?;
    let mut front = CompletionFront::empty(inst.machines());
    for &job in perm.as_slice() {
        front.push_job(inst, job);
    }
    Ok(front.last())
}

/// Appends `job` to the prefix that produced `front`.
pub fn extend_front(inst: &Instance, front: &CompletionFront, job: usize) -> Result<CompletionFront> {
    front.extend(inst, job)
}

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, RuntimeError};
use crate::message::ActorId;

/// Two-level hierarchy: one supervisor, `n_masters` masters, each with its
/// own workers.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub workers_per_master: Vec<usize>,
    /// Time between supervisor ticks (best-solution polls and rebalancing).
    pub sync_interval: f64,
}

pub const DEFAULT_SYNC_INTERVAL: f64 = 20.0;

impl Topology {
    pub fn uniform(masters: usize, workers_each: usize) -> Self {
        Self {
            workers_per_master: vec![workers_each; masters],
            sync_interval: DEFAULT_SYNC_INTERVAL,
        }
    }

    pub fn with_sync_interval(mut self, interval: f64) -> Self {
        self.sync_interval = interval;
        self
    }

    pub fn n_masters(&self) -> usize {
        self.workers_per_master.len()
    }

    pub fn n_workers(&self) -> usize {
        self.workers_per_master.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers_per_master.is_empty() {
            return Err(RuntimeError::config("topology needs at least one master"));
        }
        if let Some(i) = self.workers_per_master.iter().position(|&w| w == 0) {
            return Err(RuntimeError::config(format!("master {i} has no workers")));
        }
        if !(self.sync_interval.is_finite() && self.sync_interval > 0.0) {
            return Err(RuntimeError::config("sync interval must be positive"));
        }
        if 1 + self.n_masters() + self.n_workers() > u16::MAX as usize {
            return Err(RuntimeError::config("too many actors for 16-bit addresses"));
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&self.workers_per_master)
    }
}

/// `M:w1,w2,...` with `M` masters; a single `w` applies to every master.
impl FromStr for Topology {
    type Err = RuntimeError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || RuntimeError::config(format!("bad topology `{s}`, expected M:w1,w2,..."));
        let (m, ws) = s.split_once(':').ok_or_else(bad)?;
        let masters: usize = m.trim().parse().map_err(|_| bad())?;
        let workers: Vec<usize> = ws
            .split(',')
            .map(|w| w.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let workers_per_master = match workers.len() {
            1 => vec![workers[0]; masters],
            n if n == masters => workers,
            _ => return Err(bad()),
        };
        let topo = Topology {
            workers_per_master,
            sync_interval: DEFAULT_SYNC_INTERVAL,
        };
        topo.validate()?;
        Ok(topo)
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ws: Vec<String> = self.workers_per_master.iter().map(|w| w.to_string()).collect();
        write!(f, "{}:{}", self.n_masters(), ws.join(","))
    }
}

/// Actor addressing for a topology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    masters: Vec<ActorId>,
    /// Workers of each master.
    workers: Vec<Vec<ActorId>>,
    /// Owning master index of each worker, by worker index.
    owner: Vec<usize>,
}

pub const SUPERVISOR: ActorId = ActorId(0);

impl Layout {
    fn new(workers_per_master: &[usize]) -> Self {
        let m = workers_per_master.len();
        let masters: Vec<ActorId> = (1..=m).map(|i| ActorId(i as u16)).collect();
        let mut next = 1 + m;
        let mut workers = Vec::with_capacity(m);
        let mut owner = Vec::new();
        for (i, &w) in workers_per_master.iter().enumerate() {
            workers.push((next..next + w).map(|a| ActorId(a as u16)).collect());
            owner.extend(std::iter::repeat_n(i, w));
            next += w;
        }
        Self { masters, workers, owner }
    }

    pub fn masters(&self) -> &[ActorId] {
        &self.masters
    }

    pub fn workers_of(&self, master: usize) -> &[ActorId] {
        &self.workers[master]
    }

    pub fn all_workers(&self) -> impl Iterator<Item = ActorId> + '_ {
        self.workers.iter().flatten().copied()
    }

    pub fn actor_count(&self) -> usize {
        1 + self.masters.len() + self.owner.len()
    }

    /// Master index of a master actor.
    pub fn master_index(&self, id: ActorId) -> Option<usize> {
        let i = (id.0 as usize).checked_sub(1)?;
        (i < self.masters.len()).then_some(i)
    }

    /// Global worker index of a worker actor.
    pub fn worker_index(&self, id: ActorId) -> Option<usize> {
        let i = (id.0 as usize).checked_sub(1 + self.masters.len())?;
        (i < self.owner.len()).then_some(i)
    }

    /// Master index owning worker `w` (global worker index).
    pub fn owner_of(&self, w: usize) -> usize {
        self.owner[w]
    }
}

/// Per-worker speeds and per-link latencies.
///
/// A worker with speed `s` needs `nodes / s` time units for `nodes`
/// expansions. Every directed link gets a fixed latency
/// `base + U(0, jitter)`, drawn once from `seed`, so per-link FIFO order
/// holds in simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct HeterogeneityModel {
    pub speeds: Vec<f64>,
    pub latency: f64,
    pub latency_jitter: f64,
    pub seed: u64,
}

pub const DEFAULT_LATENCY: f64 = 1.0;

impl HeterogeneityModel {
    pub fn homogeneous(topology: &Topology) -> Self {
        Self {
            speeds: vec![1.0; topology.n_workers()],
            latency: DEFAULT_LATENCY,
            latency_jitter: 0.0,
            seed: 0,
        }
    }

    /// Master `i` and all its workers run at `factors[i mod len]`.
    pub fn by_master(topology: &Topology, factors: &[f64]) -> Self {
        let speeds = if factors.is_empty() {
            vec![1.0; topology.n_workers()]
        } else {
            topology
                .workers_per_master
                .iter()
                .enumerate()
                .flat_map(|(i, &w)| std::iter::repeat_n(factors[i % factors.len()], w))
                .collect()
        };
        Self {
            speeds,
            ..Self::homogeneous(topology)
        }
    }

    pub fn from_preset(topology: &Topology, preset: &HetPreset) -> Self {
        match preset {
            HetPreset::Homogeneous => Self::homogeneous(topology),
            HetPreset::Mixed(factors) => Self::by_master(topology, factors),
        }
    }

    pub fn validate(&self, topology: &Topology) -> Result<()> {
        if self.speeds.len() != topology.n_workers() {
            return Err(RuntimeError::config(format!(
                "{} speed factors for {} workers",
                self.speeds.len(),
                topology.n_workers()
            )));
        }
        if let Some(s) = self.speeds.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(RuntimeError::config(format!("speed factor {s} must be positive")));
        }
        if !(self.latency >= 0.0 && self.latency_jitter >= 0.0) {
            return Err(RuntimeError::config("latencies must be non-negative"));
        }
        Ok(())
    }

    /// Latency matrix indexed `[src][dst]` by actor id.
    pub fn link_latencies(&self, actors: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..actors)
            .map(|_| {
                (0..actors)
                    .map(|_| {
                        if self.latency_jitter > 0.0 {
                            self.latency + rng.random_range(0.0..self.latency_jitter)
                        } else {
                            self.latency
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Named heterogeneity presets: `homogeneous` or `mixed:f1,f2,...`.
#[derive(Debug, Clone, PartialEq)]
pub enum HetPreset {
    Homogeneous,
    Mixed(Vec<f64>),
}

impl FromStr for HetPreset {
    type Err = RuntimeError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "homogeneous" {
            return Ok(HetPreset::Homogeneous);
        }
        let bad = || RuntimeError::config(format!("bad heterogeneity preset `{s}`"));
        let list = s.strip_prefix("mixed:").ok_or_else(bad)?;
        let factors: Vec<f64> = list
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        if factors.is_empty() || factors.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(bad());
        }
        Ok(HetPreset::Mixed(factors))
    }
}

impl fmt::Display for HetPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HetPreset::Homogeneous => f.write_str("homogeneous"),
            HetPreset::Mixed(fs) => {
                let fs: Vec<String> = fs.iter().map(|x| x.to_string()).collect();
                write!(f, "mixed:{}", fs.join(","))
            }
        }
    }
}

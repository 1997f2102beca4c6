//! Load-distribution strategies over a set of masters.
//!
//! * SLD splits the work evenly once and never revises the split.
//! * RAND sends surplus work to a uniformly chosen master.
//! * ACWN sends surplus work to the least-loaded master.
//! * PFS divides the `A` unexecuted subproblems in proportion to a per-master
//!   weight: `N_i = A * w_i / sum_j w_j` with `w_i = T_i * W_i`, where `T_i`
//!   is the master's mean subproblem execution time and `W_i` its worker
//!   count. [`PfsWeight::Rate`] switches the weight to `W_i / T_i`.
//!
//! All functions are pure; the runtime owns the statistics and passes
//! snapshots in.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// Performance record of one master and its workers.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterStats {
    pub master_id: usize,
    pub n_workers: usize,
    /// Subproblems finished so far.
    pub completed: u64,
    /// Sum of their execution durations.
    pub total_exec_time: f64,
    /// Particles queued at the master and not yet started.
    pub pending_load: u64,
}

impl MasterStats {
    pub fn new(master_id: usize, n_workers: usize) -> Self {
        Self {
            master_id,
            n_workers,
            completed: 0,
            total_exec_time: 0.0,
            pending_load: 0,
        }
    }

    /// Mean execution time, undefined before the first completion.
    pub fn avg_exec_time(&self) -> Option<f64> {
        (self.completed > 0).then(|| self.total_exec_time / self.completed as f64)
    }
}

/// Folds one finished subproblem into the statistics.
pub fn record_completion(stats: &MasterStats, exec_time: f64) -> Result<MasterStats> {
    if !(exec_time.is_finite() && exec_time >= 0.0) {
        return Err(Error::invalid(format!(
            "execution time must be a finite non-negative number, got {exec_time}"
        )));
    }
    let mut next = stats.clone();
    next.completed += 1;
    next.total_exec_time += exec_time;
    Ok(next)
}

/// Per-master subproblem counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationPlan {
    pub counts: Vec<u64>,
    pub total: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum PfsWeight {
    /// `w_i = T_i * W_i`.
    #[default]
    Literal,
    /// `w_i = W_i / T_i`, i.e. completion rate.
    Rate,
}

impl FromStr for PfsWeight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(PfsWeight::Literal),
            "rate" => Ok(PfsWeight::Rate),
            other => Err(Error::invalid(format!("unknown pfs weight `{other}`"))),
        }
    }
}

impl fmt::Display for PfsWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PfsWeight::Literal => "literal",
            PfsWeight::Rate => "rate",
        })
    }
}

/// PFS weights. Until every master has completed a subproblem the worker
/// count alone is used.
pub fn pfs_weights(stats: &[MasterStats], mode: PfsWeight) -> Vec<f64> {
    let cold = stats.iter().any(|s| s.completed == 0)
        || (mode == PfsWeight::Rate && stats.iter().any(|s| s.total_exec_time <= 0.0));
    stats
        .iter()
        .map(|s| {
            let workers = s.n_workers as f64;
            match (cold, s.avg_exec_time()) {
                (false, Some(t)) => match mode {
                    PfsWeight::Literal => t * workers,
                    PfsWeight::Rate => workers / t,
                },
                _ => workers,
            }
        })
        .collect()
}

/// Splits `total` subproblems across masters in proportion to their PFS weights.
pub fn pfs_allocate(total: u64, stats: &[MasterStats], mode: PfsWeight) -> Result<AllocationPlan> {
    if stats.is_empty() {
        return Err(Error::invalid("no masters to allocate to"));
    }
    if let Some(s) = stats.iter().find(|s| s.n_workers == 0) {
        return Err(Error::invalid(format!("master {} has no workers", s.master_id)));
    }
    let weights = pfs_weights(stats, mode);
    Ok(AllocationPlan {
        counts: largest_remainder(total, &weights),
        total,
    })
}

/// Hamilton apportionment of `total` by `weights`. Leftover units go to the
/// largest fractional remainders, ties to the lower index. An all-zero weight
/// vector degenerates to an equal split.
pub fn largest_remainder(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if !(sum.is_finite() && sum > 0.0) {
        return equal_split(total, weights.len());
    }
    let shares: Vec<f64> = weights.iter().map(|&w| total as f64 * w / sum).collect();
    let mut counts: Vec<u64> = shares.iter().map(|s| s.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let leftover = total.saturating_sub(assigned) as usize;
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(leftover) {
        counts[i] += 1;
    }
    counts
}

fn equal_split(total: u64, masters: usize) -> Vec<u64> {
    if masters == 0 {
        return Vec::new();
    }
    let base = total / masters as u64;
    let extra = (total % masters as u64) as usize;
    (0..masters).map(|i| base + u64::from(i < extra)).collect()
}

/// Static equal split: `total / M` each, the first `total mod M` masters get one more.
pub fn sld_partition(total: u64, masters: usize) -> Result<AllocationPlan> {
    if masters == 0 {
        return Err(Error::invalid("no masters to partition across"));
    }
    Ok(AllocationPlan {
        counts: equal_split(total, masters),
        total,
    })
}

/// Least-loaded master of the neighbourhood, ties to the lowest id.
pub fn acwn_select(neighborhood: &[MasterStats]) -> Result<usize> {
    neighborhood
        .iter()
        .min_by_key(|s| (s.pending_load, s.master_id))
        .map(|s| s.master_id)
        .ok_or_else(|| Error::invalid("empty neighbourhood"))
}

/// Uniformly random master of the neighbourhood.
pub fn rand_select(neighborhood: &[MasterStats], rng: &mut impl Rng) -> Result<usize> {
    if neighborhood.is_empty() {
        return Err(Error::invalid("empty neighbourhood"));
    }
    Ok(neighborhood[rng.random_range(0..neighborhood.len())].master_id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Sld,
    Rand,
    Acwn,
    Pfs,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Sld, Strategy::Rand, Strategy::Acwn, Strategy::Pfs];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Sld => "sld",
            Strategy::Rand => "rand",
            Strategy::Acwn => "acwn",
            Strategy::Pfs => "pfs",
        }
    }

    /// Whether the strategy moves work after the initial split.
    pub fn is_dynamic(self) -> bool {
        self != Strategy::Sld
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sld" => Ok(Strategy::Sld),
            "rand" => Ok(Strategy::Rand),
            "acwn" => Ok(Strategy::Acwn),
            "pfs" => Ok(Strategy::Pfs),
            other => Err(Error::invalid(format!("unknown strategy `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn warm(id: usize, workers: usize, completed: u64, total: f64) -> MasterStats {
        MasterStats {
            master_id: id,
            n_workers: workers,
            completed,
            total_exec_time: total,
            pending_load: 0,
        }
    }

    fn loads(ls: &[u64]) -> Vec<MasterStats> {
        ls.iter()
            .enumerate()
            .map(|(i, &l)| MasterStats {
                pending_load: l,
                ..MasterStats::new(i, 1)
            })
            .collect()
    }

    #[test]
    fn pfs_examples() {
        let same = [warm(0, 2, 3, 6.0), warm(1, 2, 3, 6.0)];
        assert_eq!(pfs_allocate(10, &same, PfsWeight::Literal).unwrap().counts, vec![5, 5]);
        // w = T * W = (2, 1)
        let skew = [warm(0, 1, 1, 2.0), warm(1, 1, 1, 1.0)];
        assert_eq!(pfs_allocate(9, &skew, PfsWeight::Literal).unwrap().counts, vec![6, 3]);
        assert_eq!(pfs_allocate(10, &skew, PfsWeight::Literal).unwrap().counts, vec![7, 3]);
        // rate mode inverts the execution-time factor
        assert_eq!(pfs_allocate(9, &skew, PfsWeight::Rate).unwrap().counts, vec![3, 6]);
    }

    #[test]
    fn pfs_cold_start_uses_worker_counts() {
        let stats = [warm(0, 3, 0, 0.0), warm(1, 1, 5, 50.0)];
        assert_eq!(pfs_weights(&stats, PfsWeight::Literal), vec![3.0, 1.0]);
        assert_eq!(pfs_allocate(8, &stats, PfsWeight::Literal).unwrap().counts, vec![6, 2]);
    }

    #[test]
    fn pfs_zero_weights_fall_back_to_equal_split() {
        let stats = [warm(0, 1, 2, 0.0), warm(1, 1, 2, 0.0), warm(2, 1, 1, 0.0)];
        assert_eq!(pfs_allocate(7, &stats, PfsWeight::Literal).unwrap().counts, vec![3, 2, 2]);
    }

    #[test]
    fn pfs_errors() {
        assert!(pfs_allocate(3, &[], PfsWeight::Literal).is_err());
        assert!(pfs_allocate(3, &[MasterStats::new(0, 0)], PfsWeight::Literal).is_err());
    }

    #[test]
    fn remainder_ties_go_to_lower_index() {
        assert_eq!(largest_remainder(1, &[1.0, 1.0, 1.0]), vec![1, 0, 0]);
        assert_eq!(largest_remainder(5, &[1.0, 1.0, 1.0]), vec![2, 2, 1]);
        assert_eq!(largest_remainder(0, &[1.0, 2.0]), vec![0, 0]);
    }

    #[test]
    fn sld_examples() {
        assert_eq!(sld_partition(10, 2).unwrap().counts, vec![5, 5]);
        assert_eq!(sld_partition(7, 3).unwrap().counts, vec![3, 2, 2]);
        assert!(sld_partition(7, 0).is_err());
    }

    #[test]
    fn acwn_argmin_and_ties() {
        assert_eq!(acwn_select(&loads(&[3, 1, 2])).unwrap(), 1);
        assert_eq!(acwn_select(&loads(&[2, 2, 2])).unwrap(), 0);
        assert!(acwn_select(&[]).is_err());
    }

    #[test]
    fn acwn_round_robins_equal_masters() {
        let mut ns = loads(&[0, 0, 0, 0, 0]);
        for _ in 0..100 {
            let pick = acwn_select(&ns).unwrap();
            ns[pick].pending_load += 1;
            let max = ns.iter().map(|s| s.pending_load).max().unwrap();
            let min = ns.iter().map(|s| s.pending_load).min().unwrap();
            assert!(max - min <= 1);
        }
    }

    #[test]
    fn rand_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(rand_select(&loads(&[7]), &mut rng).unwrap(), 0);
        assert!(rand_select(&[], &mut rng).is_err());
        let ns = loads(&[0, 0, 0, 0]);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| rand_select(&ns, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    #[test]
    fn rand_is_uniform() {
        let ns = loads(&[0, 0, 0, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut hits = [0u32; 4];
        for _ in 0..10_000 {
            hits[rand_select(&ns, &mut rng).unwrap()] += 1;
        }
        for h in hits {
            let freq = h as f64 / 10_000.0;
            assert!((freq - 0.25).abs() <= 0.02, "{hits:?}");
        }
    }

    #[test]
    fn completion_bookkeeping() {
        let s = record_completion(&MasterStats::new(0, 1), 4.0).unwrap();
        assert_eq!(s.avg_exec_time(), Some(4.0));
        let s = record_completion(&record_completion(&MasterStats::new(0, 1), 2.0).unwrap(), 6.0).unwrap();
        assert_eq!(s.avg_exec_time(), Some(4.0));
        assert_eq!(MasterStats::new(0, 1).avg_exec_time(), None);
        assert!(record_completion(&s, -1.0).is_err());
        assert!(record_completion(&s, f64::NAN).is_err());
    }

    #[test]
    fn strategy_tokens() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert!("steal".parse::<Strategy>().is_err());
        assert!(!Strategy::Sld.is_dynamic());
    }
}

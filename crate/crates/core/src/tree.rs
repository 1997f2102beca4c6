//! The branch-and-bound tree over job prefixes and its integer node ids.
//!
//! Floor `k` holds every prefix of `k + 1` distinct jobs, `n!/(n-k-1)!` nodes
//! in all, each the root of a subtree with `(n-k-1)!` complete permutations.
//! Node ids number the floors consecutively:
//!
//! ```text
//! id(k, rank) = rank                                   k = 0
//! id(k, rank) = sum_{i=1}^{k} n!/(n-i)! + rank         k >= 1
//! ```
//!
//! where `rank` is the lexicographic position of the prefix among all
//! prefixes of the same length, computed in the factorial number system.
//! Ids therefore cover `0..sum_{i=1}^{n} n!/(n-i)!` densely.

use std::fmt;

use crate::bound::Bounder;
use crate::error::{Error, Result};
use crate::instance::{validate_prefix, CompletionFront, Instance, Time};

/// Largest job count whose node ids fit in 128 bits.
pub const MAX_CODEC_JOBS: usize = 33;

/// Default cap on the number of particles a frontier split may produce.
pub const DEFAULT_PARTICLE_CAP: u128 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u128);

impl NodeId {
    pub fn value(self) -> u128 {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn check_floor(n: usize, k: usize) -> Result<()> {
    if n == 0 || k >= n {
        return Err(Error::invalid(format!("floor {k} out of range for {n} jobs")));
    }
    Ok(())
}

/// `a * (a-1) * ... * (a-b+1)`, the number of ordered selections of `b` out of `a`.
fn falling(a: usize, b: usize) -> Option<u128> {
    (0..b).try_fold(1u128, |acc, i| acc.checked_mul((a - i) as u128))
}

/// Number of nodes on floor `k`: `n!/(n-k-1)!`.
pub fn floor_size(n: usize, k: usize) -> Result<u128> {
    check_floor(n, k)?;
    falling(n, k + 1).ok_or_else(|| Error::capacity(format!("floor {k} of {n} jobs exceeds 128 bits")))
}

/// Number of complete permutations below a floor-`k` node: `(n-k-1)!`.
pub fn leaves_count(n: usize, k: usize) -> Result<u128> {
    check_floor(n, k)?;
    falling(n - k - 1, n - k - 1)
        .ok_or_else(|| Error::capacity(format!("({}-1)! exceeds 128 bits", n - k)))
}

/// Precomputed floor offsets and selection counts for one job count.
#[derive(Debug, Clone)]
pub struct TreeCodec {
    n: usize,
    /// `offsets[k]` is the id of the first node on floor `k`; `offsets[n]`
    /// is the total node count.
    offsets: Vec<u128>,
    /// `weights[len][t] = falling(n - t - 1, len - t - 1)`, the rank weight of
    /// position `t` in a prefix of length `len`.
    weights: Vec<Vec<u128>>,
}

impl TreeCodec {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("codec needs at least one job"));
        }
        if n > MAX_CODEC_JOBS {
            return Err(Error::capacity(format!(
                "{n} jobs exceed the 128-bit id range (max {MAX_CODEC_JOBS})"
            )));
        }
        let mut offsets = vec![0u128; n + 1];
        for k in 0..n {
            let size = floor_size(n, k)?;
            offsets[k + 1] = offsets[k]
                .checked_add(size)
                .ok_or_else(|| Error::capacity("node count exceeds 128 bits"))?;
        }
        let weights = (0..=n)
            .map(|len| {
                (0..len)
                    .map(|t| falling(n - t - 1, len - t - 1).expect("bounded by floor size"))
                    .collect()
            })
            .collect();
        Ok(Self { n, offsets, weights })
    }

    pub fn jobs(&self) -> usize {
        self.n
    }

    /// Total number of nodes, `sum_{i=1}^{n} n!/(n-i)!`.
    pub fn node_count(&self) -> u128 {
        self.offsets[self.n]
    }

    /// Id of the first node on floor `k`.
    pub fn floor_offset(&self, k: usize) -> Result<u128> {
        check_floor(self.n, k)?;
        Ok(self.offsets[k])
    }

    /// Lexicographic rank of a prefix among prefixes of the same length.
    pub fn rank(&self, prefix: &[usize]) -> Result<u128> {
        if prefix.is_empty() {
            return Err(Error::invalid("cannot rank the empty prefix"));
        }
        validate_prefix(prefix, self.n)?;
        let weights = &self.weights[prefix.len()];
        let mut used = 0u64;
        let mut rank = 0u128;
        for (t, &job) in prefix.iter().enumerate() {
            let smaller_used = (used & ((1u64 << job) - 1)).count_ones() as usize;
            rank += (job - smaller_used) as u128 * weights[t];
            used |= 1 << job;
        }
        Ok(rank)
    }

    pub fn encode(&self, prefix: &[usize]) -> Result<NodeId> {
        let rank = self.rank(prefix)?;
        Ok(NodeId(self.offsets[prefix.len() - 1] + rank))
    }

    /// Floor of an id.
    pub fn floor_of(&self, id: NodeId) -> Result<usize> {
        if id.0 >= self.node_count() {
            return Err(Error::invalid(format!(
                "id {} out of range 0..{}",
                id.0,
                self.node_count()
            )));
        }
        // offsets is sorted; the floor is the last offset not above id
        Ok(self.offsets.partition_point(|&o| o <= id.0) - 1)
    }

    pub fn decode(&self, id: NodeId) -> Result<Vec<usize>> {
        let k = self.floor_of(id)?;
        let len = k + 1;
        let mut rank = id.0 - self.offsets[k];
        let mut free: Vec<usize> = (0..self.n).collect();
        let mut prefix = Vec::with_capacity(len);
        for &w in &self.weights[len] {
            let idx = (rank / w) as usize;
            rank %= w;
            prefix.push(free.remove(idx));
        }
        Ok(prefix)
    }
}

/// Id of `prefix` in the tree over `n` jobs.
pub fn encode_id(n: usize, prefix: &[usize]) -> Result<NodeId> {
    TreeCodec::new(n)?.encode(prefix)
}

/// Prefix identified by `id` in the tree over `n` jobs.
pub fn decode_id(n: usize, id: NodeId) -> Result<Vec<usize>> {
    TreeCodec::new(n)?.decode(id)
}

/// Ids of every floor-`k_split` node in ascending order, at most `cap` of them.
pub fn split_frontier(codec: &TreeCodec, k_split: usize, cap: u128) -> Result<Vec<NodeId>> {
    let size = floor_size(codec.jobs(), k_split)?;
    if size > cap {
        return Err(Error::capacity(format!(
            "floor {k_split} holds {size} particles, cap is {cap}"
        )));
    }
    let start = codec.floor_offset(k_split)?;
    Ok((start..start + size).map(NodeId).collect())
}

/// A tree node: a non-empty job prefix with its cached front and bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subproblem {
    prefix: Vec<usize>,
    front: CompletionFront,
    bound: Time,
}

impl Subproblem {
    pub fn new(inst: &Instance, bounder: &Bounder, prefix: Vec<usize>) -> Result<Self> {
        if prefix.is_empty() {
            return Err(Error::invalid("a subproblem fixes at least one job"));
        }
        let front = CompletionFront::of_prefix(inst, &prefix)?;
        let remaining = remaining_jobs(inst.jobs(), &prefix);
        let bound = bounder.bound(inst, front.as_slice(), &remaining);
        Ok(Self { prefix, front, bound })
    }

    pub fn from_id(inst: &Instance, codec: &TreeCodec, bounder: &Bounder, id: NodeId) -> Result<Self> {
        if codec.jobs() != inst.jobs() {
            return Err(Error::invalid(format!(
                "codec built for {} jobs, instance has {}",
                codec.jobs(),
                inst.jobs()
            )));
        }
        Self::new(inst, bounder, codec.decode(id)?)
    }

    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }

    /// Depth `k`: the node fixes `k + 1` jobs.
    pub fn floor(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn front(&self) -> &CompletionFront {
        &self.front
    }

    pub fn bound(&self) -> Time {
        self.bound
    }

    pub fn is_leaf(&self, n: usize) -> bool {
        self.prefix.len() == n
    }

    /// Unscheduled jobs in ascending order.
    pub fn remaining(&self, n: usize) -> Vec<usize> {
        remaining_jobs(n, &self.prefix)
    }
}

pub(crate) fn remaining_jobs(n: usize, prefix: &[usize]) -> Vec<usize> {
    let mut used = vec![false; n];
    for &j in prefix {
        used[j] = true;
    }
    (0..n).filter(|&j| !used[j]).collect()
}

/// One child per unscheduled job, ordered by the appended job index.
pub fn children(inst: &Instance, bounder: &Bounder, sub: &Subproblem) -> Result<Vec<Subproblem>> {
    let n = inst.jobs();
    if sub.is_leaf(n) {
        return Err(Error::InvalidState(format!(
            "node at floor {} is a leaf and has no children",
            sub.floor()
        )));
    }
    let remaining = sub.remaining(n);
    let mut out = Vec::new();
    bounder.child_bounds(inst, sub.front.as_slice(), &remaining, &mut out);
    Ok(out
        .into_iter()
        .map(|c| {
            let mut prefix = sub.prefix.clone();
            prefix.push(c.job);
            Subproblem {
                prefix,
                front: CompletionFront::from_vec(c.front),
                bound: c.bound,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::BoundKind;
    use crate::random::generate_random;

    #[test]
    fn floor_sizes() {
        assert_eq!(floor_size(3, 0).unwrap(), 3);
        assert_eq!(floor_size(3, 2).unwrap(), 6);
        assert_eq!(floor_size(20, 0).unwrap(), 20);
        assert_eq!(floor_size(4, 1).unwrap(), 12);
        assert!(matches!(floor_size(3, 3), Err(Error::InvalidArgument(_))));
        assert!(matches!(floor_size(40, 39), Err(Error::Capacity(_))));
    }

    #[test]
    fn leaf_counts() {
        assert_eq!(leaves_count(3, 2).unwrap(), 1);
        assert_eq!(leaves_count(3, 0).unwrap(), 2);
        assert!(leaves_count(3, 5).is_err());
        assert!(matches!(leaves_count(40, 0), Err(Error::Capacity(_))));
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_id(3, &[0]).unwrap(), NodeId(0));
        assert_eq!(encode_id(3, &[2]).unwrap(), NodeId(2));
        assert_eq!(encode_id(3, &[0, 1]).unwrap(), NodeId(3));
        assert_eq!(decode_id(3, NodeId(0)).unwrap(), vec![0]);
        assert_eq!(decode_id(3, NodeId(3)).unwrap(), vec![0, 1]);
        // last node of the tree is the lexicographically last full permutation
        assert_eq!(decode_id(3, NodeId(14)).unwrap(), vec![2, 1, 0]);
        assert!(decode_id(3, NodeId(15)).is_err());
    }

    #[test]
    fn encode_errors() {
        assert!(matches!(encode_id(3, &[]), Err(Error::InvalidArgument(_))));
        assert!(matches!(encode_id(3, &[1, 1]), Err(Error::InvalidArgument(_))));
        assert!(matches!(encode_id(3, &[3]), Err(Error::InvalidArgument(_))));
        assert!(matches!(encode_id(34, &[0]), Err(Error::Capacity(_))));
    }

    #[test]
    fn codec_capacity_edge() {
        let codec = TreeCodec::new(MAX_CODEC_JOBS).unwrap();
        let last: Vec<usize> = (0..MAX_CODEC_JOBS).rev().collect();
        let id = codec.encode(&last).unwrap();
        assert_eq!(id.0, codec.node_count() - 1);
        assert_eq!(codec.decode(id).unwrap(), last);
        assert!(TreeCodec::new(MAX_CODEC_JOBS + 1).is_err());
    }

    #[test]
    fn twenty_jobs_fit_in_64_bits() {
        let codec = TreeCodec::new(20).unwrap();
        assert!(codec.node_count() - 1 <= u64::MAX as u128);
        let codec = TreeCodec::new(21).unwrap();
        assert!(codec.node_count() - 1 > u64::MAX as u128);
    }

    #[test]
    fn frontier_split() {
        let c3 = TreeCodec::new(3).unwrap();
        assert_eq!(
            split_frontier(&c3, 0, DEFAULT_PARTICLE_CAP).unwrap(),
            vec![NodeId(0), NodeId(1), NodeId(2)]
        );
        let c4 = TreeCodec::new(4).unwrap();
        let ids = split_frontier(&c4, 1, DEFAULT_PARTICLE_CAP).unwrap();
        assert_eq!(ids.len(), 12);
        assert!(ids.iter().all(|&id| c4.floor_of(id).unwrap() == 1));
        assert!(matches!(split_frontier(&c4, 3, 10), Err(Error::Capacity(_))));
        assert!(split_frontier(&c4, 4, DEFAULT_PARTICLE_CAP).is_err());
    }

    #[test]
    fn children_of_a_prefix() {
        let inst = generate_random(3, 2, 50.0, 25.0, 5);
        let bounder = Bounder::new(&inst, BoundKind::Machine);
        let sub = Subproblem::new(&inst, &bounder, vec![1]).unwrap();
        let kids = children(&inst, &bounder, &sub).unwrap();
        let prefixes: Vec<&[usize]> = kids.iter().map(|c| c.prefix()).collect();
        assert_eq!(prefixes, vec![&[1, 0][..], &[1, 2][..]]);
        for k in &kids {
            assert_eq!(k, &Subproblem::new(&inst, &bounder, k.prefix().to_vec()).unwrap());
        }
        let leaf = Subproblem::new(&inst, &bounder, vec![1, 0, 2]).unwrap();
        assert!(matches!(children(&inst, &bounder, &leaf), Err(Error::InvalidState(_))));
    }

    #[test]
    fn subproblem_from_id() {
        let inst = generate_random(4, 3, 50.0, 25.0, 8);
        let codec = TreeCodec::new(4).unwrap();
        let bounder = Bounder::new(&inst, BoundKind::Machine);
        let id = codec.encode(&[2, 0]).unwrap();
        let sub = Subproblem::from_id(&inst, &codec, &bounder, id).unwrap();
        assert_eq!(sub.prefix(), &[2, 0]);
        assert_eq!(sub.floor(), 1);
        assert_eq!(sub.remaining(4), vec![1, 3]);
        let wrong = TreeCodec::new(5).unwrap();
        assert!(Subproblem::from_id(&inst, &wrong, &bounder, id).is_err());
    }
}

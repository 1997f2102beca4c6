//! Permutation flowshop branch and bound with load-distribution strategies.
//!
//! * [`instance`]: instances, makespan evaluation and completion fronts.
//! * [`johnson`], [`bound`]: Johnson's two-machine rule and lower bounds.
//! * [`taillard`], [`random`]: benchmark parsing, writing and generation.
//! * [`tree`]: floor arithmetic, node-id codec, frontier splitting.
//! * [`search`], [`brute`]: depth-first branch and bound and its oracle.
//! * [`balance`]: SLD, RAND, ACWN and PFS allocation.
//! * [`exec`]: rayon fan-out with a sequential fallback.

pub mod balance;
pub mod bound;
pub mod brute;
pub mod error;
pub mod exec;
pub mod instance;
pub mod johnson;
pub mod random;
pub mod search;
pub mod taillard;
pub mod tree;

pub use balance::{
    acwn_select, pfs_allocate, rand_select, record_completion, sld_partition, AllocationPlan,
    MasterStats, PfsWeight, Strategy,
};
pub use bound::{lower_bound, BoundKind, Bounder};
pub use brute::{brute_force, brute_force_with};
pub use error::{Error, Result};
pub use exec::Execution;
pub use instance::{extend_front, makespan, CompletionFront, Instance, Permutation, PublishedBounds, Time};
pub use johnson::johnson_order;
pub use random::generate_random;
pub use search::{
    solve_sequential, solve_with, Incumbent, Progress, SearchObserver, SearchOutcome, SearchStats,
    SharedIncumbent, SubtreeSearch,
};
pub use taillard::{parse_taillard, parse_taillard_named, taillard_instance, write_taillard};
pub use tree::{
    children, decode_id, encode_id, floor_size, leaves_count, split_frontier, NodeId, Subproblem,
    TreeCodec,
};

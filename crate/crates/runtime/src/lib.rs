//! Hierarchical supervisor/master/worker branch and bound.
//!
//! One supervisor coordinates masters; each master owns a queue of task
//! particles (tree node ids) and feeds its workers. Actors are plain step
//! functions ([`Supervisor::step`], [`Master::step`], [`Worker::step`]) that
//! map an input to outgoing messages, driven either by a deterministic
//! discrete-event simulator or by one thread per actor.
//!
//! ```
//! use flowbal_core::{generate_random, solve_sequential, Strategy};
//! use flowbal_runtime::{run_experiment, RunConfig, Topology, Transfer};
//!
//! let inst = generate_random(6, 3, 50.0, 25.0, 7);
//! let cfg = RunConfig::new(Topology::uniform(2, 2), Strategy::Pfs, Transfer::MultiInOne);
//! let metrics = run_experiment(&inst, &cfg).unwrap();
//! assert!(metrics.complete);
//! assert_eq!(metrics.makespan, solve_sequential(&inst, None, None).makespan);
//! ```

pub mod actor;
pub mod error;
pub mod experiment;
pub mod master;
pub mod message;
mod sim;
pub mod supervisor;
mod threads;
pub mod topology;
pub mod worker;

pub use actor::{Input, Output, Problem, Transfer};
pub use error::{Result, RuntimeError};
pub use experiment::{
    initial_allocation, run_experiment, Audit, KindTally, MasterMetrics, Mode, RunConfig, RunMetrics,
};
pub use master::{Master, Slot};
pub use message::{
    decode, encode, transfer_cost, ActorId, LoadReport, Message, MessageKind, Payload, TraceRecord, WireFormat,
};
pub use supervisor::{needs_rebalance, Supervisor};
pub use topology::{HetPreset, HeterogeneityModel, Layout, Topology};
pub use worker::Worker;

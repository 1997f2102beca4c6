//! Inputs and outputs shared by the actor step functions.
//!
//! Actors never touch a clock, a queue or another actor. A driver feeds
//! them [`Input`]s and carries out the [`Output`]s, which is what lets the
//! simulator and the thread runtime share one implementation.

use std::fmt;
use std::str::FromStr;

use flowbal_core::{Bounder, Instance, NodeId, TreeCodec};

use crate::error::{Result, RuntimeError};
use crate::message::{ActorId, Message};

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Deliver(Message),
    /// Supervisor timer.
    Tick,
    /// A worker's current compute slice has elapsed.
    SliceDone,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Send(Message),
    /// A worker just expanded `nodes` nodes and is busy until they are paid for.
    Compute { nodes: u64 },
    /// A worker finished (searched or pruned) a particle.
    ParticleDone { id: NodeId, nodes: u64 },
    /// The supervisor has seen every particle completed.
    Finish,
}

/// How surplus particles travel between masters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Transfer {
    /// One shallow particle per rebalance message.
    #[default]
    OneInOne,
    /// A counted batch of deep particles per message.
    MultiInOne,
}

impl Transfer {
    pub const ALL: [Transfer; 2] = [Transfer::OneInOne, Transfer::MultiInOne];

    pub fn as_str(self) -> &'static str {
        match self {
            Transfer::OneInOne => "1in1",
            Transfer::MultiInOne => "Min1",
        }
    }
}

impl fmt::Display for Transfer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Transfer {
    type Err = RuntimeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1in1" | "one-in-one" | "oneinone" | "single" => Ok(Transfer::OneInOne),
            "min1" | "multi-in-one" | "multiinone" | "batch" => Ok(Transfer::MultiInOne),
            _ => Err(RuntimeError::config(format!("unknown transfer scheme `{s}`"))),
        }
    }
}

/// Read-only problem data every worker needs.
#[derive(Debug, Clone)]
pub struct Problem {
    pub inst: Instance,
    pub codec: TreeCodec,
    pub bounder: Bounder,
}

pub(crate) fn send(src: ActorId, dst: ActorId, payload: crate::message::Payload) -> Output {
    Output::Send(Message::new(src, dst, payload))
}

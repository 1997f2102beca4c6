use flowbal_core::{NodeId, SubtreeSearch, Time};

use crate::actor::{send, Input, Output, Problem};
use crate::error::{Result, RuntimeError};
use crate::message::{ActorId, Payload};

struct Task {
    id: NodeId,
    search: SubtreeSearch,
}

/// Searches one granted particle at a time, in slices of a fixed node count.
///
/// Each slice is computed when it starts; the driver then holds the worker
/// busy until the slice has been paid for and delivers [`Input::SliceDone`].
/// At the end of a slice the worker reports a strictly better solution to its
/// master and either asks for a refresh (particle unfinished) or for the
/// next particle.
pub struct Worker {
    id: ActorId,
    master: ActorId,
    slice_nodes: u64,
    upper: Time,
    best: Option<(Time, Vec<usize>)>,
    reported: Time,
    current: Option<Task>,
    terminated: bool,
}

impl Worker {
    pub fn new(id: ActorId, master: ActorId, slice_nodes: u64) -> Self {
        Self {
            id,
            master,
            slice_nodes: slice_nodes.max(1),
            upper: Time::MAX,
            best: None,
            reported: Time::MAX,
            current: None,
            terminated: false,
        }
    }

    pub fn id(&self) -> ActorId {
        self.id
    }

    pub fn is_busy(&self) -> bool {
        self.current.is_some()
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    /// Incumbent value this worker prunes against.
    pub fn upper(&self) -> Time {
        self.upper
    }

    /// Best complete permutation this worker found itself.
    pub fn own_best(&self) -> Option<(Time, &[usize])> {
        self.best.as_ref().map(|(t, p)| (*t, p.as_slice()))
    }

    /// Applies an externally known incumbent. Larger values are ignored.
    pub fn tighten(&mut self, value: Time) {
        if value < self.upper {
            self.upper = value;
            if let Some(task) = &mut self.current {
                task.search.tighten(value);
            }
        }
    }

    /// First action of a fresh worker.
    pub fn start(&self) -> Vec<Output> {
        vec![send(self.id, self.master, Payload::AskForTasks)]
    }

    /// Handles one input. `allowance` caps the nodes the next slice may expand.
    pub fn step(&mut self, problem: &Problem, input: Input, allowance: u64) -> Result<Vec<Output>> {
        if self.terminated {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        match input {
            Input::Deliver(msg) => {
                if msg.src != self.master {
                    return Err(RuntimeError::protocol(format!(
                        "worker {} got {} from {}, expected its master {}",
                        self.id,
                        msg.kind(),
                        msg.src,
                        self.master
                    )));
                }
                match msg.payload {
                    Payload::TaskGrant(Some(id)) => {
                        if self.current.is_some() {
                            return Err(RuntimeError::protocol(format!(
                                "worker {} granted {id} while busy",
                                self.id
                            )));
                        }
                        let prefix = problem.codec.decode(id).map_err(|e| {
                            RuntimeError::protocol(format!("worker {} granted bad id {id}: {e}", self.id))
                        })?;
                        let mut search = SubtreeSearch::new(&problem.inst, prefix)?;
                        search.tighten(self.upper);
                        self.current = Some(Task { id, search });
                        self.run_slice(problem, allowance, &mut out);
                    }
                    Payload::TaskGrant(None) => {}
                    Payload::BestSolution(v) => self.tighten(v),
                    Payload::Terminate => {
                        self.terminated = true;
                        self.current = None;
                    }
                    other => {
                        return Err(RuntimeError::protocol(format!(
                            "worker {} cannot handle {}",
                            self.id,
                            other.kind()
                        )))
                    }
                }
            }
            Input::SliceDone => {
                let Some(task) = &self.current else {
                    return Err(RuntimeError::protocol(format!("worker {} has no slice running", self.id)));
                };
                if let Some((t, perm)) = task.search.best() {
                    if self.best.as_ref().is_none_or(|(b, _)| t < *b) {
                        self.best = Some((t, perm.to_vec()));
                    }
                }
                if let Some((t, _)) = self.best {
                    self.upper = self.upper.min(t);
                    if t < self.reported {
                        self.reported = t;
                        out.push(send(self.id, self.master, Payload::BestSolution(t)));
                    }
                }
                if task.search.is_finished() {
                    let task = self.current.take().expect("checked above");
                    out.push(Output::ParticleDone {
                        id: task.id,
                        nodes: task.search.stats().nodes_expanded,
                    });
                    out.push(send(self.id, self.master, Payload::AskForTasks));
                } else {
                    out.push(send(self.id, self.master, Payload::UpdateSolutionRequest { quota: None }));
                    self.run_slice(problem, allowance, &mut out);
                }
            }
            Input::Tick => {
                return Err(RuntimeError::protocol(format!("worker {} got a timer tick", self.id)));
            }
        }
        Ok(out)
    }

    fn run_slice(&mut self, problem: &Problem, allowance: u64, out: &mut Vec<Output>) {
        let task = self.current.as_mut().expect("slice without a task");
        let before = task.search.stats().nodes_expanded;
        let limit = self.slice_nodes.min(allowance);
        task.search.run(&problem.inst, &problem.bounder, limit, &mut ());
        out.push(Output::Compute {
            nodes: task.search.stats().nodes_expanded - before,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::Message;
    use flowbal_core::{generate_random, makespan, BoundKind, Bounder, Permutation, TreeCodec};

    fn problem(n: usize, m: usize, seed: u64) -> Problem {
        let inst = generate_random(n, m, 50.0, 25.0, seed);
        Problem {
            bounder: Bounder::new(&inst, BoundKind::Machine),
            codec: TreeCodec::new(n).unwrap(),
            inst,
        }
    }

    fn grant(id: NodeId) -> Input {
        Input::Deliver(Message::new(ActorId(1), ActorId(2), Payload::TaskGrant(Some(id))))
    }

    fn nodes_of(out: &[Output]) -> u64 {
        out.iter()
            .find_map(|o| match o {
                Output::Compute { nodes } => Some(*nodes),
                _ => None,
            })
            .expect("compute output")
    }

    /// Runs a particle to completion; returns (virtual time at `speed`, nodes).
    fn drive(w: &mut Worker, p: &Problem, id: NodeId, speed: f64) -> (f64, u64) {
        let mut out = w.step(p, grant(id), u64::MAX).unwrap();
        let mut nodes = 0;
        loop {
            nodes += nodes_of(&out);
            out = w.step(p, Input::SliceDone, u64::MAX).unwrap();
            if out.iter().any(|o| matches!(o, Output::ParticleDone { .. })) {
                return (nodes as f64 / speed, nodes);
            }
        }
    }

    #[test]
    fn leaf_particle_is_one_evaluation() {
        let p = problem(4, 3, 1);
        let leaf = p.codec.encode(&[2, 0, 3, 1]).unwrap();
        let mut w = Worker::new(ActorId(2), ActorId(1), 10);
        let out = w.step(&p, grant(leaf), u64::MAX).unwrap();
        assert_eq!(out, vec![Output::Compute { nodes: 1 }]);
        let out = w.step(&p, Input::SliceDone, u64::MAX).unwrap();
        let expected = makespan(&p.inst, &Permutation::new(vec![2, 0, 3, 1])).unwrap();
        assert_eq!(w.own_best().unwrap(), (expected, &[2, 0, 3, 1][..]));
        assert_eq!(
            out,
            vec![
                send(ActorId(2), ActorId(1), Payload::BestSolution(expected)),
                Output::ParticleDone { id: leaf, nodes: 1 },
                send(ActorId(2), ActorId(1), Payload::AskForTasks),
            ]
        );
        assert!(!w.is_busy());
    }

    #[test]
    fn speed_two_takes_half_the_virtual_time() {
        let p = problem(8, 4, 3);
        let root = p.codec.encode(&[0]).unwrap();
        let mut slow = Worker::new(ActorId(2), ActorId(1), 4);
        let mut fast = Worker::new(ActorId(2), ActorId(1), 8);
        let (t1, n1) = drive(&mut slow, &p, root, 1.0);
        let (t2, n2) = drive(&mut fast, &p, root, 2.0);
        assert_eq!(n1, n2);
        assert!(n1 > 8, "particle too small: {n1} nodes");
        assert_eq!(t2 * 2.0, t1);
    }

    #[test]
    fn refresh_requested_between_slices() {
        let p = problem(7, 4, 3);
        let mut w = Worker::new(ActorId(2), ActorId(1), 5);
        w.step(&p, grant(p.codec.encode(&[1]).unwrap()), u64::MAX).unwrap();
        let out = w.step(&p, Input::SliceDone, u64::MAX).unwrap();
        assert!(out.contains(&send(ActorId(2), ActorId(1), Payload::UpdateSolutionRequest { quota: None })));
        assert!(matches!(out.last(), Some(Output::Compute { .. })));
    }

    #[test]
    fn incumbent_only_tightens() {
        let mut w = Worker::new(ActorId(2), ActorId(1), 5);
        let p = problem(4, 2, 9);
        let msg = |v| Input::Deliver(Message::new(ActorId(1), ActorId(2), Payload::BestSolution(v)));
        w.step(&p, msg(100), 5).unwrap();
        w.step(&p, msg(120), 5).unwrap();
        assert_eq!(w.upper(), 100);
    }

    #[test]
    fn protocol_errors() {
        let p = problem(4, 2, 9);
        let mut w = Worker::new(ActorId(2), ActorId(1), 5);
        assert!(w.step(&p, grant(NodeId(p.codec.node_count())), 5).is_err());
        assert!(w.step(&p, Input::SliceDone, 5).is_err());
        let stranger = Input::Deliver(Message::new(ActorId(9), ActorId(2), Payload::BestSolution(3)));
        assert!(w.step(&p, stranger, 5).is_err());
        w.step(&p, grant(NodeId(0)), 5).unwrap();
        assert!(w.step(&p, grant(NodeId(1)), 5).is_err());
    }

    #[test]
    fn terminate_stops_everything() {
        let p = problem(4, 2, 9);
        let mut w = Worker::new(ActorId(2), ActorId(1), 5);
        w.step(&p, grant(NodeId(0)), 5).unwrap();
        let stop = Input::Deliver(Message::new(ActorId(1), ActorId(2), Payload::Terminate));
        assert!(w.step(&p, stop, 5).unwrap().is_empty());
        assert!(w.is_terminated() && !w.is_busy());
        assert!(w.step(&p, Input::SliceDone, 5).unwrap().is_empty());
    }
}

//! Exhaustive enumeration, the reference oracle for the search.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::instance::{CompletionFront, Instance, Permutation, Time};

/// Largest job count [`brute_force`] accepts.
pub const BRUTE_FORCE_MAX_JOBS: usize = 9;

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next = Some((0..n).collect::<Vec<usize>>());
    std::iter::from_fn(move || {
        let cur = next.take()?;
        let mut succ = cur.clone();
        if next_permutation(&mut succ) {
            next = Some(succ);
        }
        Some(cur)
    })
}

/// Advances `v` to its lexicographic successor; false when `v` was the last.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).expect("pivot has a successor");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Minimum-makespan permutation by exhaustive enumeration; ties go to the
/// lexicographically smallest permutation.
pub fn brute_force(inst: &Instance) -> Result<(Permutation, Time)> {
    brute_force_with(inst, Execution::default())
}

pub fn brute_force_with(inst: &Instance, exec: Execution) -> Result<(Permutation, Time)> {
    let n = inst.jobs();
    if n > BRUTE_FORCE_MAX_JOBS {
        return Err(Error::capacity(format!(
            "brute force is limited to {BRUTE_FORCE_MAX_JOBS} jobs, instance has {n}"
        )));
    }
    // one independent enumeration per first job; results are combined in
    // first-job order, which preserves the lexicographic tie rule
    let branches = exec.map((0..n).collect(), |first| best_with_first(inst, first));
    let (t, p) = branches
        .into_iter()
        .min_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .expect("at least one job");
    Ok((Permutation::new(p), t))
}

fn best_with_first(inst: &Instance, first: usize) -> (Time, Vec<usize>) {
    let n = inst.jobs();
    let rest: Vec<usize> = (0..n).filter(|&j| j != first).collect();
    let head = CompletionFront::empty(inst.machines()).extend(inst, first).expect("in range");
    let mut best: Option<(Time, Vec<usize>)> = None;
    for order in permutations(rest.len()) {
        let mut front = head.clone();
        for &i in &order {
            front.push_job(inst, rest[i]);
        }
        let t = front.last();
        if best.as_ref().is_none_or(|(b, _)| t < *b) {
            let mut perm = Vec::with_capacity(n);
            perm.push(first);
            perm.extend(order.iter().map(|&i| rest[i]));
            best = Some((t, perm));
        }
    }
    best.expect("non-empty enumeration")
}

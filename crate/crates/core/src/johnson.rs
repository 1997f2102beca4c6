use std::cmp::Reverse;

use crate::error::{Error, Result};
use crate::instance::{Instance, Permutation, Time};

/// Johnson's rule for two machines.
///
/// Jobs that are shorter on the first machine go first in ascending order of
/// their first-machine time; the rest follow in descending order of their
/// second-machine time. Ties go to the lower job index. The order is optimal
/// for `F2 || Cmax`.
pub fn johnson_order(inst: &Instance) -> Result<Permutation> {
    if inst.machines() != 2 {
        return Err(Error::invalid(format!(
            "Johnson's rule needs exactly 2 machines, instance has {}",
            inst.machines()
        )));
    }
    let pairs: Vec<(Time, Time)> = inst.rows().map(|r| (r[0], r[1])).collect();
    Ok(Permutation::new(johnson_sequence(&pairs, 0..pairs.len())))
}

/// Johnson order of the selected jobs given their `(first, second)` times.
pub(crate) fn johnson_sequence(
    pairs: &[(Time, Time)],
    jobs: impl IntoIterator<Item = usize>,
) -> Vec<usize> {
    let (mut head, mut tail): (Vec<usize>, Vec<usize>) =
        jobs.into_iter().partition(|&j| pairs[j].0 < pairs[j].1);
    head.sort_by_key(|&j| (pairs[j].0, j));
    tail.sort_by_key(|&j| (Reverse(pairs[j].1), j));
    head.extend(tail);
    head
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::makespan;

    #[test]
    fn textbook_case() {
        let inst = Instance::from_rows("j", &[vec![1, 9], vec![9, 1]]).unwrap();
        assert_eq!(johnson_order(&inst).unwrap().as_slice(), &[0, 1]);
        let rev = Instance::from_rows("j", &[vec![9, 1], vec![1, 9]]).unwrap();
        assert_eq!(johnson_order(&rev).unwrap().as_slice(), &[1, 0]);
    }

    #[test]
    fn single_job() {
        let inst = Instance::from_rows("j", &[vec![4, 2]]).unwrap();
        assert_eq!(johnson_order(&inst).unwrap().as_slice(), &[0]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let inst =
            Instance::from_rows("j", &[vec![3, 3], vec![2, 5], vec![2, 5], vec![3, 3]]).unwrap();
        // equal times fall into the second group, ordered by index on ties
        assert_eq!(johnson_order(&inst).unwrap().as_slice(), &[1, 2, 0, 3]);
    }

    #[test]
    fn wrong_machine_count() {
        let inst = Instance::from_rows("j", &[vec![1, 2, 3]]).unwrap();
        assert!(matches!(johnson_order(&inst), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn classic_five_job_example() {
        // processing times from the usual textbook illustration, optimum 24
        let rows = [vec![3, 6], vec![5, 2], vec![1, 2], vec![6, 6], vec![7, 5]];
        let inst = Instance::from_rows("j", &rows).unwrap();
        let order = johnson_order(&inst).unwrap();
        assert_eq!(order.as_slice(), &[2, 0, 3, 4, 1]);
        assert_eq!(makespan(&inst, &order).unwrap(), 24);
    }
}

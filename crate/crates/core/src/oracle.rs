//! Exhaustive reference solver over all `k^n` assignments.
//!
//! Uses nothing but [`Instance::evaluate`], so its answers are independent of
//! the dynamic program.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::instance::{Assignment, Instance, ScheduleEval};

pub const DEFAULT_ORACLE_CEILING: u128 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    /// First optimal feasible assignment in enumeration order.
    pub optimum: Option<(Assignment, ScheduleEval)>,
    /// Distinct `(loads, mems)` over all assignments.
    pub all_vectors: BTreeSet<(Vec<u64>, Vec<u64>)>,
    /// Nondominated `(makespan, max memory)` pairs, ascending makespan.
    pub pareto: Vec<(u64, u64)>,
}

pub fn brute_force(instance: &Instance) -> Result<OracleResult> {
    brute_force_with(instance, DEFAULT_ORACLE_CEILING)
}

pub fn brute_force_with(instance: &Instance, ceiling: u128) -> Result<OracleResult> {
    let n = instance.n();
    let k = instance.k();
    let total = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > ceiling {
        return Err(Error::Resource {
            phase: 0,
            count: total,
            ceiling,
        });
    }
    let mut digits = vec![0usize; n];
    let mut optimum: Option<(Assignment, ScheduleEval)> = None;
    let mut all_vectors = BTreeSet::new();
    let mut pairs = BTreeSet::new();
    loop {
        let assignment = Assignment::new(digits.clone());
        let eval = instance.evaluate(&assignment)?;
        pairs.insert((eval.makespan, eval.memory.iter().copied().max().unwrap_or(0)));
        all_vectors.insert((eval.load.clone(), eval.memory.clone()));
        if eval.feasible && optimum.as_ref().is_none_or(|(_, best)| eval.makespan < best.makespan) {
            optimum = Some((assignment, eval));
        }
        // mixed-radix increment, job 0 fastest
        let mut i = 0;
        while i < n {
            digits[i] += 1;
            if digits[i] < k {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    let pairs: Vec<(u64, u64)> = pairs.into_iter().collect();
    let pareto = pairs
        .iter()
        .copied()
        .filter(|&(p, m)| {
            !pairs
                .iter()
                .any(|&(q, r)| q <= p && r <= m && (q, r) != (p, m))
        })
        .collect();
    Ok(OracleResult {
        optimum,
        all_vectors,
        pareto,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Costs, Graph};

    fn path4(caps: Vec<u64>) -> Instance {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        Instance::new(g, Costs::Identical(vec![1; 4]), vec![1; 4], caps).unwrap()
    }

    #[test]
    fn path4_optimum_is_two() {
        let r = brute_force(&path4(vec![3, 3])).unwrap();
        let (a, eval) = r.optimum.unwrap();
        assert_eq!(eval.makespan, 2);
        // first in enumeration order, job 0 counting fastest
        assert_eq!(a.machine_of, vec![1, 1, 0, 0]);
        assert!(r.all_vectors.len() <= 16);
        assert!(r.pareto.contains(&(2, 3)));
    }

    #[test]
    fn single_job_picks_cheapest_fitting_machine() {
        let g = Graph::edgeless(1);
        let inst = Instance::new(g, Costs::Unrelated(vec![vec![2, 5]]), vec![3], vec![2, 3]).unwrap();
        let (a, eval) = brute_force(&inst).unwrap().optimum.unwrap();
        assert_eq!((a.machine_of[0], eval.makespan), (1, 5));
        let tight = inst.with_capacities(vec![2, 2]).unwrap();
        assert!(brute_force(&tight).unwrap().optimum.is_none());
    }

    #[test]
    fn edgeless_pair_splits() {
        let inst = Instance::new(Graph::edgeless(2), Costs::Identical(vec![1, 1]), vec![1, 1], vec![1, 1]).unwrap();
        assert_eq!(brute_force(&inst).unwrap().optimum.unwrap().1.makespan, 1);
    }

    #[test]
    fn ceiling_is_enforced() {
        let inst = path4(vec![3, 3]);
        assert!(matches!(brute_force_with(&inst, 15), Err(Error::Resource { count: 16, .. })));
    }
}

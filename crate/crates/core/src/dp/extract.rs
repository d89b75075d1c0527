use serde::Serialize;

use super::{DpRun, NO_DECISION};
use crate::instance::{Assignment, ScheduleEval};
use crate::pareto::nondominated;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Solution {
    pub assignment: Assignment,
    pub eval: ScheduleEval,
}

impl DpRun {
    /// Follows parent links from final state `index` back to phase 0.
    pub fn reconstruct(&self, index: usize) -> Assignment {
        let mut machine_of = vec![usize::MAX; self.n];
        let mut idx = index;
        for record in self.history.iter().rev() {
            let Some(links) = &record.links else { continue };
            let link = links[idx];
            if let Some(j) = record.assigned {
                debug_assert_ne!(link.machine, NO_DECISION);
                machine_of[j] = link.machine as usize;
            }
            idx = link.pred as usize;
        }
        debug_assert!(machine_of.iter().all(|&m| m != usize::MAX), "every job is placed once");
        Assignment::new(machine_of)
    }

    fn solution(&self, index: usize, capacities: &[u64]) -> Solution {
        let state = self.space.state(index);
        let load = state.loads().to_vec();
        let memory = state.mems().to_vec();
        let feasible = memory.iter().zip(capacities).all(|(m, c)| m <= c);
        Solution {
            assignment: self.reconstruct(index),
            eval: ScheduleEval {
                makespan: state.makespan(),
                load,
                memory,
                feasible,
            },
        }
    }
}

/// Minimum-makespan final state whose memory loads pass `accept`; ties go to
/// the lexicographically smallest `(loads, mems)`.
pub fn extract_best_by(run: &DpRun, capacities: &[u64], accept: impl Fn(&[u64]) -> bool) -> Option<Solution> {
    let mut best: Option<(u64, usize)> = None;
    for (i, state) in run.space.iter().enumerate() {
        if !accept(state.mems()) {
            continue;
        }
        let better = match best {
            None => true,
            Some((m, j)) => {
                let prev = run.space.state(j);
                (state.makespan(), state.coords()) < (m, prev.coords())
            }
        };
        if better {
            best = Some((state.makespan(), i));
        }
    }
    best.map(|(_, i)| run.solution(i, capacities))
}

/// Optimal schedule with `mems[l] <= capacities[l]` on every machine.
pub fn extract_best(run: &DpRun, capacities: &[u64]) -> Option<Solution> {
    extract_best_by(run, capacities, |mems| mems.iter().zip(capacities).all(|(m, c)| m <= c))
}

/// Nondominated `(makespan, max memory)` pairs over the final states.
pub fn extract_pareto(run: &DpRun) -> Vec<(u64, u64)> {
    nondominated(run.space.iter().map(|s| (s.makespan(), s.max_mem())).collect())
}

//! The trimmed dynamic program.
//!
//! After every phase, states whose `2k` coordinates fall in the same
//! geometric boxes `{0}`, `[Δ^l, Δ^{l+1})` and whose frontiers agree are
//! merged into the lexicographically smallest one. With `Δ = 1 + eps/(8n)` a
//! surviving state stays within `Δ^i` of every exact state after phase `i`,
//! which gives the `(1 + eps, 1 + eps)` guarantee after all phases.

use std::collections::{BTreeMap, HashSet};

use num_integer::Integer;
use serde::Serialize;

use crate::dp::{extract_best_by, extract_pareto, DpOptions, DpRun, Engine, PhaseInfo, Reducer, Solution, StateSpace};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::layout::Layout;
use crate::rational::{GeometricBoxes, Ratio};
use crate::treedecomp::NiceTreeDecomposition;

/// `Δ` and the box counts derived from `eps` and the instance.
#[derive(Debug, Clone)]
pub struct TrimParams {
    pub epsilon: Ratio,
    pub n: usize,
    /// Phases the guarantee is certified for.
    pub phases: usize,
    /// `Δ = delta_num / delta_den`, in lowest terms.
    pub delta_num: u128,
    pub delta_den: u128,
    /// `ceil(log_Δ c_sum)`.
    pub l1: u64,
    /// `ceil(log_Δ w_sum)`.
    pub l2: u64,
    k: usize,
    boxes: GeometricBoxes,
}

impl TrimParams {
    /// Parameters for a decomposition with at most `4n` nodes.
    pub fn new(epsilon: Ratio, instance: &Instance) -> Result<Self> {
        Self::for_phases(epsilon, instance, 4 * instance.n())
    }

    /// Parameters certified for `phases` phases. The step is `Δ = 1 + eps/(8n)`
    /// unless `phases > 4n`, where it shrinks to `1 + eps/(2 * phases)`.
    pub fn for_phases(epsilon: Ratio, instance: &Instance, phases: usize) -> Result<Self> {
        // beyond 2, Δ^{4n} <= 1 + eps is no longer assured
        if epsilon.num() > 2 * epsilon.den() {
            return Err(Error::input("epsilon", format!("{epsilon} exceeds 2")));
        }
        let n = instance.n();
        if n == 0 {
            return Err(Error::input("instance", "no jobs"));
        }
        let scale = (8 * n).max(2 * phases) as u128;
        let den = scale * epsilon.den() as u128;
        let num = den + epsilon.num() as u128;
        let g = num.gcd(&den);
        let (p, q) = (num / g, den / g);
        let mut boxes = GeometricBoxes::new(p, q);
        if !boxes.power_at_most(phases as u32, epsilon.one_plus()) {
            return Err(Error::Internal(format!("Δ^{phases} exceeds 1 + {epsilon}")));
        }
        let l1 = boxes.ceil_log(instance.cost_sum());
        let l2 = boxes.ceil_log(instance.weight_sum());
        Ok(TrimParams {
            epsilon,
            n,
            phases,
            delta_num: p,
            delta_den: q,
            l1,
            l2,
            k: instance.k(),
            boxes,
        })
    }

    pub fn delta(&self) -> String {
        format!("{}/{}", self.delta_num, self.delta_den)
    }

    /// `-1` for zero, otherwise `floor(log_Δ v)`.
    pub fn box_index(&mut self, value: u64) -> i64 {
        self.boxes.index(value)
    }

    /// Box indices of a state's `2k` coordinates.
    pub fn box_of(&mut self, coords: &[u64]) -> Vec<i64> {
        coords.iter().map(|&v| self.boxes.index(v)).collect()
    }

    /// `a <= Δ^l * b`, exactly.
    pub fn within(&mut self, a: u64, b: u64, l: u32) -> bool {
        self.boxes.within(a, b, l)
    }

    /// `(L1+2)^k (L2+2)^k (k 2^{k-1})^live`, saturating.
    pub fn space_bound(&self, live: usize) -> u128 {
        let k = self.k as u32;
        let frontier = self.k as u128 * (1u128 << (k - 1));
        (self.l1 as u128 + 2)
            .saturating_pow(k)
            .saturating_mul((self.l2 as u128 + 2).saturating_pow(k))
            .saturating_mul(frontier.saturating_pow(live as u32))
    }
}

/// Keeps the first state of every `(boxes, frontier)` class; on sorted rows
/// that is the lexicographically smallest `(loads, mems)`.
pub struct Trim<'p> {
    params: &'p mut TrimParams,
}

impl<'p> Trim<'p> {
    pub fn new(params: &'p mut TrimParams) -> Self {
        Trim { params }
    }
}

impl Reducer for Trim<'_> {
    fn reduce(&mut self, space: &StateSpace) -> Option<Vec<usize>> {
        let mut seen = HashSet::with_capacity(space.len());
        let mut keep = Vec::with_capacity(space.len());
        for (i, s) in space.iter().enumerate() {
            let mut key: Vec<u64> = s.coords().iter().map(|&v| (self.params.box_index(v) + 1) as u64).collect();
            key.extend_from_slice(s.frontier_raw());
            if seen.insert(key) {
                keep.push(i);
            }
        }
        (keep.len() < space.len()).then_some(keep)
    }
}

#[derive(Debug, Clone)]
pub struct FptasOptions {
    pub dp: DpOptions,
    /// With `false` every state is its own box and the run is exact.
    pub trim: bool,
}

impl Default for FptasOptions {
    fn default() -> Self {
        FptasOptions {
            dp: DpOptions::default(),
            trim: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CapacityExcess {
    pub machine: usize,
    pub memory: u64,
    pub capacity: u64,
    /// `memory / capacity` in lowest terms.
    pub factor: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub epsilon: Ratio,
    pub delta: String,
    pub phases: usize,
    pub max_space: usize,
    pub makespan: u64,
    pub loads: Vec<u64>,
    pub mems: Vec<u64>,
    pub capacity_excess: Vec<CapacityExcess>,
}

#[derive(Debug, Clone)]
pub struct FptasOutcome {
    pub solution: Solution,
    pub certificate: Certificate,
}

/// Runs the trimmed program and returns the run with the parameters used.
pub fn run_trimmed(
    instance: &Instance,
    ntd: &NiceTreeDecomposition,
    layout: &Layout,
    epsilon: Ratio,
    opts: &FptasOptions,
    observer: impl FnMut(&PhaseInfo, &StateSpace),
) -> Result<(DpRun, TrimParams)> {
    let mut params = TrimParams::for_phases(epsilon, instance, layout.len())?;
    let engine = Engine::new(instance, opts.dp.clone())?;
    let run = if opts.trim {
        let mut trim = Trim::new(&mut params);
        engine.run(ntd, layout, Some(&mut trim), observer)?
    } else {
        engine.run(ntd, layout, None, observer)?
    };
    Ok((run, params))
}

/// Best makespan among final states with `mems[l] <= (1 + eps) M_l`.
pub fn run_fptas(
    instance: &Instance,
    ntd: &NiceTreeDecomposition,
    layout: &Layout,
    epsilon: Ratio,
) -> Result<Option<FptasOutcome>> {
    run_fptas_with(instance, ntd, layout, epsilon, &FptasOptions::default(), |_, _| {})
}

pub fn run_fptas_with(
    instance: &Instance,
    ntd: &NiceTreeDecomposition,
    layout: &Layout,
    epsilon: Ratio,
    opts: &FptasOptions,
    observer: impl FnMut(&PhaseInfo, &StateSpace),
) -> Result<Option<FptasOutcome>> {
    let (run, params) = run_trimmed(instance, ntd, layout, epsilon, opts, observer)?;
    let relaxed = epsilon.one_plus();
    let caps = instance.capacities();
    let accept = |mems: &[u64]| mems.iter().zip(caps).all(|(&m, &c)| relaxed.scales_above(m, c));
    let Some(solution) = extract_best_by(&run, caps, accept) else {
        return Ok(None);
    };
    let capacity_excess = solution
        .eval
        .memory
        .iter()
        .zip(caps)
        .enumerate()
        .filter(|(_, (m, c))| m > c)
        .map(|(machine, (&memory, &capacity))| {
            let g = memory.gcd(&capacity);
            CapacityExcess {
                machine,
                memory,
                capacity,
                factor: format!("{}/{}", memory / g, capacity / g),
            }
        })
        .collect();
    let certificate = Certificate {
        epsilon,
        delta: params.delta(),
        phases: run.stats.phases,
        max_space: run.stats.peak_states,
        makespan: solution.eval.makespan,
        loads: solution.eval.load.clone(),
        mems: solution.eval.memory.clone(),
        capacity_excess,
    };
    Ok(Some(FptasOutcome { solution, certificate }))
}

/// Nondominated `(makespan, max memory)` pairs of the trimmed final states,
/// capacities ignored.
pub fn approximate_pareto(
    instance: &Instance,
    ntd: &NiceTreeDecomposition,
    layout: &Layout,
    epsilon: Ratio,
) -> Result<Vec<(u64, u64)>> {
    let (run, _) = run_trimmed(instance, ntd, layout, epsilon, &FptasOptions::default(), |_, _| {})?;
    Ok(extract_pareto(&run))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DominationReport {
    /// Exact states examined over all phases.
    pub checked: usize,
    /// Trimmed states over all phases.
    pub trimmed: usize,
    /// `(phase, coordinates)` of exact states with no dominating trimmed state.
    pub violations: Vec<(usize, Vec<u64>)>,
}

/// Runs the exact and the trimmed program side by side and checks that every
/// exact state after phase `i` has a trimmed state with the same frontier and
/// every coordinate at most `Δ^i` times larger.
pub fn check_domination(
    instance: &Instance,
    ntd: &NiceTreeDecomposition,
    layout: &Layout,
    epsilon: Ratio,
) -> Result<DominationReport> {
    let mut exact = Vec::with_capacity(layout.len());
    let opts = FptasOptions {
        trim: false,
        ..FptasOptions::default()
    };
    run_trimmed(instance, ntd, layout, epsilon, &opts, |_, s| exact.push(s.clone()))?;
    let mut trimmed = Vec::with_capacity(layout.len());
    let (_, mut params) = run_trimmed(instance, ntd, layout, epsilon, &FptasOptions::default(), |_, s| {
        trimmed.push(s.clone())
    })?;
    let mut report = DominationReport::default();
    for (i, (e, t)) in exact.iter().zip(&trimmed).enumerate() {
        let phase = i + 1;
        report.trimmed += t.len();
        let mut by_frontier: BTreeMap<&[u64], Vec<&[u64]>> = BTreeMap::new();
        for s in t.iter() {
            by_frontier.entry(s.frontier_raw()).or_default().push(s.coords());
        }
        for s in e.iter() {
            report.checked += 1;
            let ok = by_frontier.get(s.frontier_raw()).is_some_and(|cands| {
                cands.iter().any(|c| {
                    c.iter()
                        .zip(s.coords())
                        .all(|(&a, &b)| params.within(a, b, phase as u32))
                })
            });
            if !ok {
                report.violations.push((phase, s.coords().to_vec()));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{extract_best, run_exact};
    use crate::instance::{Costs, Graph};
    use crate::layout::bottom_up_layout;
    use crate::oracle::brute_force;
    use crate::treedecomp::{decompose_min_fill, make_nice};

    fn pipeline(inst: &Instance) -> (NiceTreeDecomposition, Layout) {
        let ntd = make_nice(&decompose_min_fill(inst.graph()), inst.graph()).unwrap();
        let layout = bottom_up_layout(&ntd);
        (ntd, layout)
    }

    fn path4(caps: Vec<u64>) -> Instance {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        Instance::new(g, Costs::Identical(vec![1; 4]), vec![1; 4], caps).unwrap()
    }

    fn one_job() -> Instance {
        Instance::new(Graph::edgeless(1), Costs::Identical(vec![4]), vec![3], vec![5, 5]).unwrap()
    }

    fn eps(s: &str) -> Ratio {
        s.parse().unwrap()
    }

    #[test]
    fn delta_is_exact() {
        let p = TrimParams::new(eps("2"), &one_job()).unwrap();
        assert_eq!(p.delta(), "5/4");
        let ten = Instance::new(Graph::edgeless(10), Costs::Identical(vec![1; 10]), vec![1; 10], vec![9, 9]).unwrap();
        assert_eq!(TrimParams::new(eps("1/10"), &ten).unwrap().delta(), "801/800");
        assert!(TrimParams::new(eps("2.5"), &ten).is_err());
        // more phases than 4n shrink the step
        assert_eq!(TrimParams::for_phases(eps("2"), &one_job(), 5).unwrap().delta(), "6/5");
    }

    #[test]
    fn box_indices() {
        let mut p = TrimParams::new(eps("2"), &one_job()).unwrap();
        assert_eq!(p.box_of(&[0, 0, 0, 0]), vec![-1; 4]);
        assert_eq!(p.box_index(1), 0);
        assert_eq!(p.box_index(2), 3);
        // (5/4)^7 ~ 4.77 >= 4 > (5/4)^6 ~ 3.81
        assert_eq!(p.l1, 7);
        assert_eq!(p.l2, 5);
    }

    #[test]
    fn l1_within_the_log_bound() {
        let inst = Instance::new(Graph::edgeless(6), Costs::Identical(vec![9; 6]), vec![1; 6], vec![9, 9]).unwrap();
        for e in ["1/10", "1/2", "1", "2"] {
            let p = TrimParams::new(eps(e), &inst).unwrap();
            let bound = ((1.0 + 48.0 / eps(e).to_f64()) * (54f64).ln()).ceil() as u64;
            assert!(p.l1 <= bound, "{e}: {} > {bound}", p.l1);
        }
    }

    #[test]
    fn trim_merges_one_box() {
        let inst = Instance::new(Graph::edgeless(1), Costs::Identical(vec![200]), vec![1], vec![9, 9]).unwrap();
        let mut p = TrimParams::new(eps("2"), &inst).unwrap();
        // 100 and 101 share a box for Δ = 5/4
        assert_eq!(p.box_index(100), p.box_index(101));
        let merged = StateSpace::from_rows(1, vec![], vec![100, 0, 101, 0]).unwrap();
        assert_eq!(Trim::new(&mut p).reduce(&merged), Some(vec![0]));
        let apart = StateSpace::from_rows(1, vec![], vec![1, 0, 100, 0]).unwrap();
        assert_eq!(Trim::new(&mut p).reduce(&apart), None);
    }

    #[test]
    fn path4_guarantee() {
        let inst = path4(vec![3, 3]);
        let (ntd, layout) = pipeline(&inst);
        let out = run_fptas(&inst, &ntd, &layout, eps("1")).unwrap().unwrap();
        assert!(out.solution.eval.makespan <= 4);
        assert!(out.solution.eval.memory.iter().all(|&m| m <= 6));
        assert_eq!(out.certificate.phases, layout.len());
        let json = serde_json::to_value(&out.certificate).unwrap();
        assert_eq!(json["epsilon"], "1/1");
        let half = run_fptas(&inst, &ntd, &layout, eps("0.5")).unwrap().unwrap();
        assert!(half.solution.eval.makespan <= 3);
    }

    #[test]
    fn zero_capacity_is_infeasible() {
        let inst = path4(vec![0, 0]);
        let (ntd, layout) = pipeline(&inst);
        assert!(run_fptas(&inst, &ntd, &layout, eps("1")).unwrap().is_none());
    }

    #[test]
    fn untrimmed_run_is_exact() {
        let inst = crate::instance::Generator::new(crate::instance::GraphKind::GridMesh { rows: 2, cols: 4 }, 2)
            .generate(11)
            .unwrap();
        let (ntd, layout) = pipeline(&inst);
        let opts = FptasOptions {
            trim: false,
            ..FptasOptions::default()
        };
        let (run, _) = run_trimmed(&inst, &ntd, &layout, eps("1"), &opts, |_, _| {}).unwrap();
        let exact = run_exact(&inst, &ntd, &layout).unwrap();
        assert_eq!(run.space, exact.space);
        assert_eq!(extract_best(&run, inst.capacities()), extract_best(&exact, inst.capacities()));
    }

    #[test]
    fn small_eps_finds_the_optimum() {
        let inst = path4(vec![3, 3]);
        let (ntd, layout) = pipeline(&inst);
        let out = run_fptas(&inst, &ntd, &layout, eps("1/100")).unwrap().unwrap();
        assert_eq!(out.solution.eval.makespan, brute_force(&inst).unwrap().optimum.unwrap().1.makespan);
    }

    #[test]
    fn single_job_pareto() {
        let inst = one_job();
        let (ntd, layout) = pipeline(&inst);
        assert_eq!(approximate_pareto(&inst, &ntd, &layout, eps("1")).unwrap(), vec![(4, 3)]);
    }

    #[test]
    fn domination_holds_on_path4() {
        let inst = Instance::new(
            Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap(),
            Costs::Identical(vec![7, 30, 31, 90]),
            vec![60, 61, 5, 2],
            vec![99, 99],
        )
        .unwrap();
        let (ntd, layout) = pipeline(&inst);
        let report = check_domination(&inst, &ntd, &layout, eps("2")).unwrap();
        assert!(report.checked > 0);
        assert!(report.violations.is_empty(), "{:?}", report.violations);
    }
}

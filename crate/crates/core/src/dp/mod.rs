//! Exact dynamic program over a nice decomposition, one node per phase.
//!
//! A state is a flat row of `u64`: `k` loads, `k` memory loads, then one
//! packed slot per live job (sorted by job id) holding the job's machine and
//! the mask of other machines that already store its data.

mod extract;
mod step;

pub use extract::{extract_best, extract_best_by, extract_pareto, Solution};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Instance, JobId, MachineId};
use crate::layout::{is_bottom_up, Layout};
use crate::treedecomp::{NiceTreeDecomposition, NodeId, NodeKind};

pub const DEFAULT_STATE_CEILING: usize = 10_000_000;

pub(crate) const NO_DECISION: u8 = u8::MAX;

pub(crate) fn pack(machine: MachineId, held: u32) -> u64 {
    machine as u64 | (held as u64) << 8
}

pub(crate) fn slot_machine(slot: u64) -> MachineId {
    (slot & 0xff) as MachineId
}

pub(crate) fn slot_held(slot: u64) -> u32 {
    (slot >> 8) as u32
}

/// Deliberate transition bugs for self-testing verification harnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Never charge an introduced job's data to its neighbors' machines.
    SkipNeighborCharge,
}

#[derive(Debug, Clone)]
pub struct DpOptions {
    /// Worker threads for expansion inside a phase; `0` uses the global pool.
    pub threads: usize,
    /// Largest state space tolerated at any phase.
    pub ceiling: usize,
    pub fault: Option<Fault>,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions {
            threads: 0,
            ceiling: DEFAULT_STATE_CEILING,
            fault: None,
        }
    }
}

/// Read-only view of one state.
#[derive(Debug, Clone, Copy)]
pub struct StateRef<'a> {
    row: &'a [u64],
    k: usize,
    live: &'a [JobId],
}

impl<'a> StateRef<'a> {
    pub fn loads(&self) -> &'a [u64] {
        &self.row[..self.k]
    }

    pub fn mems(&self) -> &'a [u64] {
        &self.row[self.k..2 * self.k]
    }

    /// Loads followed by memory loads.
    pub fn coords(&self) -> &'a [u64] {
        &self.row[..2 * self.k]
    }

    pub fn makespan(&self) -> u64 {
        self.loads().iter().copied().max().unwrap_or(0)
    }

    pub fn max_mem(&self) -> u64 {
        self.mems().iter().copied().max().unwrap_or(0)
    }

    /// Packed frontier slots aligned with the space's live jobs.
    pub fn frontier_raw(&self) -> &'a [u64] {
        &self.row[2 * self.k..]
    }

    /// `(job, machine, machines other than `machine` holding the job's data)`.
    pub fn frontier(&self) -> impl Iterator<Item = (JobId, MachineId, Vec<MachineId>)> + 'a {
        let k = self.k;
        self.live.iter().zip(self.frontier_raw()).map(move |(&j, &slot)| {
            let held = slot_held(slot);
            (j, slot_machine(slot), (0..k).filter(|&b| held >> b & 1 == 1).collect())
        })
    }

    pub fn machine_of(&self, job: JobId) -> Option<MachineId> {
        let at = self.live.binary_search(&job).ok()?;
        Some(slot_machine(self.frontier_raw()[at]))
    }
}

/// The deduplicated states after some phase, sorted by row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    k: usize,
    phase: usize,
    live: Vec<JobId>,
    rows: Vec<u64>,
}

impl StateSpace {
    /// The single all-zero state with an empty frontier.
    pub fn initial(k: usize) -> Self {
        StateSpace {
            k,
            phase: 0,
            live: Vec::new(),
            rows: vec![0; 2 * k],
        }
    }

    /// A space at phase 0 from raw rows, which are sorted and deduplicated.
    pub fn from_rows(k: usize, live: Vec<JobId>, rows: Vec<u64>) -> Result<Self> {
        let width = 2 * k + live.len();
        if k == 0 || !rows.len().is_multiple_of(width) || !live.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::input("state_space", "rows do not match k and the live jobs"));
        }
        let m = rows.len() / width;
        let links = (0..m as u32).map(|pred| Link { pred, machine: NO_DECISION }).collect();
        let (rows, _) = dedup_sorted(width, rows, links);
        Ok(StateSpace { k, phase: 0, live, rows })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    /// The live jobs `J_L(i)`, sorted.
    pub fn live(&self) -> &[JobId] {
        &self.live
    }

    pub(crate) fn width(&self) -> usize {
        2 * self.k + self.live.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.width()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn state(&self, i: usize) -> StateRef<'_> {
        let w = self.width();
        StateRef {
            row: &self.rows[i * w..(i + 1) * w],
            k: self.k,
            live: &self.live,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = StateRef<'_>> + '_ {
        (0..self.len()).map(move |i| self.state(i))
    }

    pub(crate) fn rows(&self) -> &[u64] {
        &self.rows
    }

    /// Keeps the states at the given increasing positions.
    pub(crate) fn retain_indices(&mut self, keep: &[usize]) {
        let w = self.width();
        let mut rows = Vec::with_capacity(keep.len() * w);
        for &i in keep {
            rows.extend_from_slice(&self.rows[i * w..(i + 1) * w]);
        }
        self.rows = rows;
    }
}

/// Back-reference of a state to the state it came from in the previous phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Link {
    pub pred: u32,
    pub machine: u8,
}

#[derive(Debug, Clone)]
pub(crate) struct PhaseRecord {
    /// Job placed by the decision stored in the links, if any.
    pub assigned: Option<JobId>,
    /// `None` when every state is carried over unchanged.
    pub links: Option<Vec<Link>>,
}

/// Everything about the current phase that the transition needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseContext {
    pub phase: usize,
    pub node: NodeId,
    pub kind: NodeKind,
    /// `Z_i`, sorted.
    pub bag: Vec<JobId>,
}

impl PhaseContext {
    pub fn new(ntd: &NiceTreeDecomposition, layout: &Layout, phase: usize) -> Self {
        let node = layout.node_at(phase);
        let nice = ntd.node(node);
        PhaseContext {
            phase,
            node,
            kind: nice.kind,
            bag: nice.bag.clone(),
        }
    }

    /// `E_{Z_i}`: graph edges with both ends in the bag.
    pub fn bag_edges(&self, instance: &Instance) -> Vec<(JobId, JobId)> {
        let g = instance.graph();
        let mut out = Vec::new();
        for (i, &u) in self.bag.iter().enumerate() {
            for &v in &self.bag[i + 1..] {
                if g.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

/// Summary of one completed phase, as written by `--trace`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseInfo {
    pub phase: usize,
    pub node: NodeId,
    pub kind: &'static str,
    pub states: usize,
    pub live: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunStats {
    pub phases: usize,
    pub peak_states: usize,
    pub total_states: usize,
    pub max_live: usize,
}

/// Final state space plus the links needed to rebuild assignments.
#[derive(Debug, Clone)]
pub struct DpRun {
    pub space: StateSpace,
    pub stats: RunStats,
    pub(crate) history: Vec<PhaseRecord>,
    pub(crate) n: usize,
}

/// Post-phase reduction hook; returns the increasing positions to keep, or
/// `None` to keep everything.
pub trait Reducer {
    fn reduce(&mut self, space: &StateSpace) -> Option<Vec<usize>>;
}

/// Applies transitions with a fixed instance, options and worker pool.
pub struct Engine<'a> {
    instance: &'a Instance,
    opts: DpOptions,
    pool: Option<rayon::ThreadPool>,
}

impl<'a> Engine<'a> {
    pub fn new(instance: &'a Instance, opts: DpOptions) -> Result<Self> {
        let pool = if opts.threads == 0 {
            None
        } else {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(opts.threads)
                    .build()
                    .map_err(|e| Error::Internal(format!("thread pool: {e}")))?,
            )
        };
        Ok(Engine { instance, opts, pool })
    }

    pub fn instance(&self) -> &Instance {
        self.instance
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    /// `S_i` from `S_{i-1}`.
    pub fn step(&self, space: &StateSpace, ctx: &PhaseContext) -> Result<StateSpace> {
        Ok(self.advance(space, ctx)?.0)
    }

    pub(crate) fn advance(&self, space: &StateSpace, ctx: &PhaseContext) -> Result<(StateSpace, PhaseRecord)> {
        let (mut next, record) = self.install(|| step::apply(self.instance, &self.opts, space, ctx))?;
        next.phase = ctx.phase;
        if next.len() > self.opts.ceiling {
            return Err(Error::Resource {
                phase: ctx.phase,
                count: next.len() as u128,
                ceiling: self.opts.ceiling as u128,
            });
        }
        Ok((next, record))
    }

    /// Runs every phase of `layout`, applying `reducer` after each one and
    /// reporting each finished phase to `observer`.
    pub fn run(
        &self,
        ntd: &NiceTreeDecomposition,
        layout: &Layout,
        mut reducer: Option<&mut dyn Reducer>,
        mut observer: impl FnMut(&PhaseInfo, &StateSpace),
    ) -> Result<DpRun> {
        let instance = self.instance;
        if !is_bottom_up(ntd, layout) {
            return Err(Error::input("layout", "not a bottom-up layout of this decomposition"));
        }
        ntd.check(instance.graph())
            .map_err(|m| Error::input("nice_decomposition", m))?;
        let mut space = StateSpace::initial(instance.k());
        let mut history = Vec::with_capacity(layout.len());
        let mut stats = RunStats {
            phases: layout.len(),
            peak_states: 1,
            total_states: 1,
            max_live: 0,
        };
        for phase in 1..=layout.len() {
            let ctx = PhaseContext::new(ntd, layout, phase);
            let (mut next, mut record) = self.advance(&space, &ctx)?;
            if let Some(r) = reducer.as_deref_mut() {
                if let Some(keep) = r.reduce(&next) {
                    record.links = Some(match record.links.take() {
                        Some(links) => keep.iter().map(|&i| links[i]).collect(),
                        None => keep
                            .iter()
                            .map(|&i| Link {
                                pred: i as u32,
                                machine: NO_DECISION,
                            })
                            .collect(),
                    });
                    next.retain_indices(&keep);
                }
            }
            space = next;
            history.push(record);
            stats.peak_states = stats.peak_states.max(space.len());
            stats.total_states += space.len();
            stats.max_live = stats.max_live.max(space.live.len());
            observer(
                &PhaseInfo {
                    phase,
                    node: ctx.node,
                    kind: ctx.kind.name(),
                    states: space.len(),
                    live: space.live.len(),
                },
                &space,
            );
        }
        Ok(DpRun {
            space,
            stats,
            history,
            n: instance.n(),
        })
    }
}

pub fn run_exact(instance: &Instance, ntd: &NiceTreeDecomposition, layout: &Layout) -> Result<DpRun> {
    run_exact_with(instance, ntd, layout, &DpOptions::default(), |_, _| {})
}

pub fn run_exact_with(
    instance: &Instance,
    ntd: &NiceTreeDecomposition,
    layout: &Layout,
    opts: &DpOptions,
    observer: impl FnMut(&PhaseInfo, &StateSpace),
) -> Result<DpRun> {
    Engine::new(instance, opts.clone())?.run(ntd, layout, None, observer)
}

fn single_step(instance: &Instance, space: &StateSpace, ctx: &PhaseContext, expect: &str) -> Result<StateSpace> {
    if ctx.kind.name() != expect {
        return Err(Error::Internal(format!("expected a {expect} node, got {}", ctx.kind.name())));
    }
    Engine::new(instance, DpOptions::default())?.step(space, ctx)
}

pub fn step_leaf(instance: &Instance, space: &StateSpace, ctx: &PhaseContext) -> Result<StateSpace> {
    single_step(instance, space, ctx, "leaf")
}

pub fn step_introduce(instance: &Instance, space: &StateSpace, ctx: &PhaseContext) -> Result<StateSpace> {
    single_step(instance, space, ctx, "introduce")
}

pub fn step_forget(instance: &Instance, space: &StateSpace, ctx: &PhaseContext) -> Result<StateSpace> {
    single_step(instance, space, ctx, "forget")
}

pub fn step_join(instance: &Instance, space: &StateSpace, ctx: &PhaseContext) -> Result<StateSpace> {
    single_step(instance, space, ctx, "join")
}

/// Sorts candidate rows, keeps the first of every run of equal rows and
/// returns the surviving rows with their links.
pub(crate) fn dedup_sorted(width: usize, rows: Vec<u64>, links: Vec<Link>) -> (Vec<u64>, Vec<Link>) {
    let m = links.len();
    let mut idx: Vec<u32> = (0..m as u32).collect();
    let row = |i: u32| &rows[i as usize * width..(i as usize + 1) * width];
    idx.par_sort_unstable_by(|&a, &b| {
        row(a)
            .cmp(row(b))
            .then_with(|| links[a as usize].cmp(&links[b as usize]))
    });
    let mut out_rows = Vec::with_capacity(rows.len());
    let mut out_links = Vec::with_capacity(m);
    let mut last: Option<u32> = None;
    for i in idx {
        if let Some(prev) = last {
            if row(prev) == row(i) {
                continue;
            }
        }
        out_rows.extend_from_slice(row(i));
        out_links.push(links[i as usize]);
        last = Some(i);
    }
    (out_rows, out_links)
}

use rayon::prelude::*;

use super::{dedup_sorted, pack, slot_held, slot_machine, DpOptions, Fault, Link, PhaseContext, PhaseRecord, StateSpace, NO_DECISION};
use crate::error::{Error, Result};
use crate::instance::{Instance, JobId, MachineId};
use crate::treedecomp::NodeKind;

/// Input states handled per parallel work item.
const CHUNK: usize = 256;

/// Charges the edges between job `j` (slot `pj`, weight `wj`) placed on
/// machine `a` and its bag neighbors `(slot, weight)`.
fn charge(row: &mut [u64], k: usize, pj: usize, wj: u64, a: MachineId, nbrs: &[(usize, u64)], fault: Option<Fault>) {
    for &(pn, wn) in nbrs {
        let other = row[2 * k + pn];
        let b = slot_machine(other);
        if b == a {
            continue;
        }
        if slot_held(other) >> a & 1 == 0 {
            row[k + a] += wn;
            row[2 * k + pn] = pack(b, slot_held(other) | 1 << a);
        }
        let own = row[2 * k + pj];
        if slot_held(own) >> b & 1 == 0 {
            if fault != Some(Fault::SkipNeighborCharge) {
                row[k + b] += wj;
            }
            row[2 * k + pj] = pack(a, slot_held(own) | 1 << b);
        }
    }
}

/// Expands every input row with `f`, in parallel over chunks, keeping chunk order.
fn expand(
    space: &StateSpace,
    out_width: usize,
    f: impl Fn(usize, &[u64], &mut Vec<u64>, &mut Vec<Link>) + Sync,
) -> (Vec<u64>, Vec<Link>) {
    let w = space.width();
    let parts: Vec<(Vec<u64>, Vec<Link>)> = space
        .rows()
        .par_chunks(w * CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut rows = Vec::with_capacity(chunk.len() / w * out_width);
            let mut links = Vec::with_capacity(chunk.len() / w);
            for (i, row) in chunk.chunks(w).enumerate() {
                f(c * CHUNK + i, row, &mut rows, &mut links);
            }
            (rows, links)
        })
        .collect();
    let mut rows = Vec::with_capacity(parts.iter().map(|p| p.0.len()).sum());
    let mut links = Vec::with_capacity(parts.iter().map(|p| p.1.len()).sum());
    for (r, l) in parts {
        rows.extend(r);
        links.extend(l);
    }
    (rows, links)
}

fn finish(space: &StateSpace, live: Vec<JobId>, assigned: Option<JobId>, rows: Vec<u64>, links: Vec<Link>) -> (StateSpace, PhaseRecord) {
    let width = 2 * space.k + live.len();
    let (rows, links) = dedup_sorted(width, rows, links);
    (
        StateSpace {
            k: space.k,
            phase: space.phase,
            live,
            rows,
        },
        PhaseRecord {
            assigned,
            links: Some(links),
        },
    )
}

fn carry_over(space: &StateSpace) -> (StateSpace, PhaseRecord) {
    (space.clone(), PhaseRecord { assigned: None, links: None })
}

/// Bag neighbors of `j` as `(slot index in live, weight)`.
fn neighbor_slots(instance: &Instance, live: &[JobId], bag: &[JobId], j: JobId) -> Result<Vec<(usize, u64)>> {
    let g = instance.graph();
    bag.iter()
        .filter(|&&x| x != j && g.has_edge(j, x))
        .map(|&x| {
            live.binary_search(&x)
                .map(|pos| (pos, instance.weight(x)))
                .map_err(|_| Error::Internal(format!("bag job {x} is not live")))
        })
        .collect()
}

/// Places a job that has never been seen on each machine in turn.
fn place_fresh(instance: &Instance, opts: &DpOptions, space: &StateSpace, ctx: &PhaseContext, j: JobId) -> Result<(StateSpace, PhaseRecord)> {
    let k = space.k;
    let pos = space.live.binary_search(&j).expect_err("fresh job is not live");
    let mut live = space.live.clone();
    live.insert(pos, j);
    let nbrs = neighbor_slots(instance, &live, &ctx.bag, j)?;
    let wj = instance.weight(j);
    let out_width = 2 * k + live.len();
    let fault = opts.fault;
    let (rows, links) = expand(space, out_width, |s, row, rows, links| {
        for a in 0..k {
            let start = rows.len();
            rows.extend_from_slice(&row[..2 * k + pos]);
            rows.push(pack(a, 0));
            rows.extend_from_slice(&row[2 * k + pos..]);
            let new = &mut rows[start..];
            new[a] += instance.cost(j, a);
            new[k + a] += wj;
            charge(new, k, pos, wj, a, &nbrs, fault);
            links.push(Link {
                pred: s as u32,
                machine: a as u8,
            });
        }
    });
    Ok(finish(space, live, Some(j), rows, links))
}

/// Re-introduction of a job placed in an earlier branch: only new edges count.
fn revisit(instance: &Instance, opts: &DpOptions, space: &StateSpace, ctx: &PhaseContext, j: JobId, pos: usize) -> Result<(StateSpace, PhaseRecord)> {
    let k = space.k;
    let nbrs = neighbor_slots(instance, &space.live, &ctx.bag, j)?;
    if nbrs.is_empty() {
        return Ok(carry_over(space));
    }
    let wj = instance.weight(j);
    let fault = opts.fault;
    let (rows, links) = expand(space, space.width(), |s, row, rows, links| {
        let start = rows.len();
        rows.extend_from_slice(row);
        let new = &mut rows[start..];
        let a = slot_machine(new[2 * k + pos]);
        charge(new, k, pos, wj, a, &nbrs, fault);
        links.push(Link {
            pred: s as u32,
            machine: NO_DECISION,
        });
    });
    Ok(finish(space, space.live.clone(), None, rows, links))
}

fn drop_job(space: &StateSpace, j: JobId) -> Result<(StateSpace, PhaseRecord)> {
    let k = space.k;
    let pos = space
        .live
        .binary_search(&j)
        .map_err(|_| Error::Internal(format!("forgotten job {j} is not live")))?;
    let mut live = space.live.clone();
    live.remove(pos);
    let (rows, links) = expand(space, space.width() - 1, |s, row, rows, links| {
        rows.extend_from_slice(&row[..2 * k + pos]);
        rows.extend_from_slice(&row[2 * k + pos + 1..]);
        links.push(Link {
            pred: s as u32,
            machine: NO_DECISION,
        });
    });
    Ok(finish(space, live, None, rows, links))
}

pub(super) fn apply(instance: &Instance, opts: &DpOptions, space: &StateSpace, ctx: &PhaseContext) -> Result<(StateSpace, PhaseRecord)> {
    if space.k != instance.k() {
        return Err(Error::Internal("state space and instance disagree on k".into()));
    }
    match ctx.kind {
        NodeKind::Leaf => {
            let &[j] = ctx.bag.as_slice() else {
                return Err(Error::Internal(format!("leaf bag has {} jobs", ctx.bag.len())));
            };
            if space.live.binary_search(&j).is_ok() {
                Ok(carry_over(space))
            } else {
                place_fresh(instance, opts, space, ctx, j)
            }
        }
        NodeKind::Introduce(j) => match space.live.binary_search(&j) {
            Ok(pos) => revisit(instance, opts, space, ctx, j, pos),
            Err(_) => place_fresh(instance, opts, space, ctx, j),
        },
        NodeKind::Forget(j) => drop_job(space, j),
        NodeKind::Join => Ok(carry_over(space)),
    }
}

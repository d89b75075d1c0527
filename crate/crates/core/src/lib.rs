//! Makespan scheduling on `k` machines where each machine must also hold the
//! data of every graph-neighbor of the jobs it runs.
//!
//! The pipeline builds a tree decomposition of the neighborhood graph, turns
//! it into a nice decomposition, orders its nodes bottom-up with the
//! heavy-subtree-first layout, and runs a dynamic program over that order.
//! The exact program ([`dp`]) is pseudo-polynomial; the trimmed program
//! ([`fptas`]) keeps one state per geometric box and frontier and returns a
//! schedule within `(1 + eps)` of the optimal makespan while exceeding each
//! memory capacity by at most a factor `(1 + eps)`.
//!
//! [`oracle`] enumerates every assignment and is used to cross-check both.

pub mod cli;
pub mod dp;
pub mod error;
pub mod fptas;
pub mod instance;
pub mod layout;
pub mod oracle;
pub mod pareto;
pub mod rational;
pub mod treedecomp;

pub use error::{Error, Result};
pub use instance::{Assignment, Costs, Graph, Instance, ScheduleEval};

/// Machines are tracked in a 32-bit mask inside the state frontier.
pub const MAX_MACHINES: usize = 32;

/// Min-fill decomposition, nice conversion and the heavy-first bottom-up
/// layout: everything the dynamic programs need besides the instance.
pub fn prepare(
    instance: &Instance,
) -> Result<(treedecomp::NiceTreeDecomposition, layout::Layout)> {
    let td = treedecomp::decompose_min_fill(instance.graph());
    let ntd = treedecomp::make_nice(&td, instance.graph())?;
    let layout = layout::bottom_up_layout(&ntd);
    Ok((ntd, layout))
}

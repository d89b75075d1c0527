//! Bottom-up layouts of a nice decomposition and the live job sets they induce.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::JobId;
use crate::treedecomp::{NiceTreeDecomposition, NodeId, NodeKind};

/// Bijection between decomposition nodes and phases `1..=len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    order: Vec<NodeId>,
    phase_of: Vec<usize>,
}

impl Layout {
    /// Wraps an explicit node order (`order[i]` is processed at phase `i + 1`).
    pub fn from_order(order: Vec<NodeId>) -> Result<Self> {
        let mut phase_of = vec![0; order.len()];
        for (i, &u) in order.iter().enumerate() {
            if u >= order.len() || phase_of[u] != 0 {
                return Err(Error::input("layout", format!("not a permutation: node {u}")));
            }
            phase_of[u] = i + 1;
        }
        Ok(Layout { order, phase_of })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Node processed at `phase` (1-based).
    pub fn node_at(&self, phase: usize) -> NodeId {
        self.order[phase - 1]
    }

    pub fn phase_of(&self, node: NodeId) -> usize {
        self.phase_of[node]
    }

    pub fn order(&self) -> &[NodeId] {
        &self.order
    }

    /// JSON array mapping phase `i + 1` to its node id.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.order).expect("plain integers serialize")
    }
}

/// Finishing-time order of a depth-first search from `root` that descends
/// into the child with the larger subtree first (ties: smaller id).
pub fn heavy_first_order(root: NodeId, children: &[Vec<NodeId>]) -> Vec<NodeId> {
    let mut size = vec![1usize; children.len()];
    for u in crate::treedecomp::post_order(root, |x| children[x].as_slice()) {
        size[u] += children[u].iter().map(|&c| size[c]).sum::<usize>();
    }
    let mut order = Vec::with_capacity(children.len());
    let mut stack = vec![(root, false)];
    while let Some((u, expanded)) = stack.pop() {
        if expanded {
            order.push(u);
            continue;
        }
        stack.push((u, true));
        let mut kids = children[u].clone();
        kids.sort_by_key(|&c| (std::cmp::Reverse(size[c]), c));
        for &c in kids.iter().rev() {
            stack.push((c, false));
        }
    }
    order
}

pub fn bottom_up_layout(ntd: &NiceTreeDecomposition) -> Layout {
    let children: Vec<Vec<NodeId>> = ntd.nodes().iter().map(|n| n.children.clone()).collect();
    Layout::from_order(heavy_first_order(ntd.root(), &children)).expect("dfs visits every node once")
}

/// Every child is processed before its parent.
pub fn is_bottom_up(ntd: &NiceTreeDecomposition, layout: &Layout) -> bool {
    layout.len() == ntd.len()
        && ntd.nodes().iter().enumerate().all(|(u, node)| {
            node.children
                .iter()
                .all(|&c| layout.phase_of(c) < layout.phase_of(u))
        })
}

/// Critical sets along `order`: after each phase, the processed nodes whose
/// parent has not been processed yet (this always includes the current node).
pub fn critical_sets(parent: &[Option<NodeId>], order: &[NodeId]) -> Vec<Vec<NodeId>> {
    let mut done = vec![false; parent.len()];
    let mut open: Vec<NodeId> = Vec::new();
    let mut out = Vec::with_capacity(order.len());
    for &u in order {
        done[u] = true;
        open.retain(|&v| parent[v].is_none_or(|p| !done[p]));
        open.push(u);
        let mut set = open.clone();
        set.sort_unstable();
        out.push(set);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrontierProfile {
    /// `live[i]` is `J_L(i)`; `live[0]` is empty.
    pub live: Vec<Vec<JobId>>,
    pub max_size: usize,
    /// `critical_sets[i - 1]` belongs to phase `i`.
    pub critical_sets: Vec<Vec<NodeId>>,
}

impl FrontierProfile {
    pub fn max_critical(&self) -> usize {
        self.critical_sets.iter().map(Vec::len).max().unwrap_or(0)
    }
}

pub fn frontier_profile(ntd: &NiceTreeDecomposition, layout: &Layout) -> Result<FrontierProfile> {
    if !is_bottom_up(ntd, layout) {
        return Err(Error::input("layout", "not a bottom-up layout of this decomposition"));
    }
    let mut live: Vec<Vec<JobId>> = vec![Vec::new()];
    let mut current: Vec<JobId> = Vec::new();
    for &u in layout.order() {
        let node = ntd.node(u);
        match node.kind {
            NodeKind::Leaf | NodeKind::Introduce(_) => {
                for &j in &node.bag {
                    if let Err(at) = current.binary_search(&j) {
                        current.insert(at, j);
                    }
                }
            }
            NodeKind::Forget(j) => {
                if let Ok(at) = current.binary_search(&j) {
                    current.remove(at);
                }
            }
            NodeKind::Join => {}
        }
        live.push(current.clone());
    }
    let parent: Vec<Option<NodeId>> = ntd.nodes().iter().map(|n| n.parent).collect();
    let max_size = live.iter().map(Vec::len).max().unwrap_or(0);
    Ok(FrontierProfile {
        live,
        max_size,
        critical_sets: critical_sets(&parent, layout.order()),
    })
}

/// `⌈log₂ x⌉` for `x ≥ 1`.
pub fn ceil_log2(x: usize) -> usize {
    assert!(x >= 1);
    (usize::BITS - (x - 1).leading_zeros()) as usize
}

/// Largest critical set the heavy-first layout may produce for `n` jobs.
pub fn critical_bound(n: usize) -> usize {
    ceil_log2(4 * n)
}

/// Bound on `J_L^max` for a decomposition with bags of at most `max_bag_size` jobs.
pub fn frontier_bound(n: usize, max_bag_size: usize) -> usize {
    max_bag_size * critical_bound(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treedecomp::make_nice;
    use crate::treedecomp::tests::{fig2_graph, fig2_td};

    fn chain(len: usize) -> NiceTreeDecomposition {
        let mut spec = vec![(NodeKind::Leaf, vec![])];
        for i in 1..len {
            spec.push((NodeKind::Introduce(i), vec![i - 1]));
        }
        NiceTreeDecomposition::from_spec(&spec, &[(0, 0)], len - 1).unwrap()
    }

    #[test]
    fn chain_is_processed_leaf_first() {
        let ntd = chain(4);
        let layout = bottom_up_layout(&ntd);
        assert_eq!(layout.order(), &[0, 1, 2, 3]);
        assert_eq!(layout.phase_of(0), 1);
        assert_eq!(layout.phase_of(3), 4);
        let profile = frontier_profile(&ntd, &layout).unwrap();
        assert_eq!(profile.live[2], vec![0, 1]);
        assert_eq!(profile.max_size, 4);
        for (i, set) in profile.critical_sets.iter().enumerate() {
            assert_eq!(set, &vec![layout.node_at(i + 1)]);
        }
    }

    #[test]
    fn heavier_subtree_goes_first() {
        // join 8 over a 5-node chain ending in 4 and a 3-node chain ending in 7
        let mut children = vec![Vec::new(); 9];
        for u in (1..5).chain(6..8) {
            children[u].push(u - 1);
        }
        children[8] = vec![7, 4];
        assert_eq!(heavy_first_order(8, &children), (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn bottom_up_check() {
        let ntd = chain(2);
        assert!(!is_bottom_up(&ntd, &Layout::from_order(vec![1, 0]).unwrap()));
        assert!(is_bottom_up(&ntd, &Layout::from_order(vec![0, 1]).unwrap()));
        assert!(frontier_profile(&ntd, &Layout::from_order(vec![1, 0]).unwrap()).is_err());
        assert!(Layout::from_order(vec![0, 0]).is_err());
    }

    /// The 174-node tree drawn for the frontier argument, ids = labels - 1.
    fn fig4_children() -> Vec<Vec<NodeId>> {
        let label = |l: usize| l - 1;
        let mut children = vec![Vec::new(); 174];
        for (lo, hi) in [(1, 100), (101, 140), (141, 160), (161, 165)] {
            for l in lo + 1..=hi {
                children[label(l)].push(label(l - 1));
            }
        }
        children[label(167)] = vec![label(165), label(166)];
        children[label(168)] = vec![label(167)];
        children[label(169)] = vec![label(168)];
        children[label(170)] = vec![label(160), label(169)];
        children[label(171)] = vec![label(140), label(170)];
        children[label(172)] = vec![label(100), label(171)];
        children[label(173)] = vec![label(172)];
        children[label(174)] = vec![label(173)];
        children
    }

    #[test]
    fn fig4_critical_set() {
        let children = fig4_children();
        let order = heavy_first_order(173, &children);
        assert_eq!(order, (0..174).collect::<Vec<_>>());
        let mut parent = vec![None; 174];
        for (u, kids) in children.iter().enumerate() {
            for &c in kids {
                parent[c] = Some(u);
            }
        }
        let sets = critical_sets(&parent, &order);
        let at_166: Vec<usize> = sets[165].iter().map(|&u| u + 1).collect();
        assert_eq!(at_166, vec![100, 140, 160, 165, 166]);
        assert_eq!(sets[173], vec![173]);
    }

    #[test]
    fn fig2_profile_respects_bounds() {
        let g = fig2_graph();
        let ntd = make_nice(&fig2_td(), &g).unwrap();
        let layout = bottom_up_layout(&ntd);
        assert!(is_bottom_up(&ntd, &layout));
        let profile = frontier_profile(&ntd, &layout).unwrap();
        assert!(profile.max_size <= frontier_bound(5, ntd.max_bag_size()));
        assert!(profile.max_critical() <= critical_bound(5));
        assert!(profile.live.last().unwrap().len() <= ntd.node(ntd.root()).bag.len());
        assert!(layout.to_json().starts_with('['));
    }

    #[test]
    fn log2_rounding() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(critical_bound(5), 5);
    }
}

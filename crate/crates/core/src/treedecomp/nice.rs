use std::collections::BTreeSet;

use serde::Serialize;

use super::{NodeId, TreeDecomposition};
use crate::error::{Error, Result};
use crate::instance::{Graph, JobId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum NodeKind {
    Leaf,
    Introduce(JobId),
    Forget(JobId),
    Join,
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Leaf => "leaf",
            NodeKind::Introduce(_) => "introduce",
            NodeKind::Forget(_) => "forget",
            NodeKind::Join => "join",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiceNode {
    pub kind: NodeKind,
    pub bag: Vec<JobId>,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
}

/// Rooted decomposition in which every node is a Leaf, Introduce, Forget or Join.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiceTreeDecomposition {
    nodes: Vec<NiceNode>,
    root: NodeId,
}

impl NiceTreeDecomposition {
    /// Assembles a nice decomposition from `(kind, children)` pairs. Leaf bags
    /// come from `leaf_jobs`; every other bag is derived from its children.
    pub fn from_spec(spec: &[(NodeKind, Vec<NodeId>)], leaf_jobs: &[(NodeId, JobId)], root: NodeId) -> Result<Self> {
        let len = spec.len();
        if root >= len {
            return Err(Error::input("root", "root outside node range"));
        }
        let mut parent = vec![None; len];
        for (u, (_, children)) in spec.iter().enumerate() {
            for &c in children {
                if c >= len || parent[c].is_some() || c == u {
                    return Err(Error::input("children", format!("node {u} has an invalid child {c}")));
                }
                parent[c] = Some(u);
            }
        }
        let order = post_order(root, |u| spec[u].1.as_slice());
        if order.len() != len {
            return Err(Error::input("children", "nodes unreachable from the root"));
        }
        let mut bags: Vec<Vec<JobId>> = vec![Vec::new(); len];
        for &u in &order {
            let (kind, children) = &spec[u];
            let first = children.first().map(|&c| bags[c].clone()).unwrap_or_default();
            bags[u] = match *kind {
                NodeKind::Leaf => {
                    let j = leaf_jobs
                        .iter()
                        .find(|(node, _)| *node == u)
                        .map(|&(_, j)| j)
                        .ok_or_else(|| Error::input("leaf_jobs", format!("leaf {u} has no job")))?;
                    vec![j]
                }
                NodeKind::Introduce(j) => {
                    let mut b = first;
                    b.push(j);
                    b.sort_unstable();
                    b
                }
                NodeKind::Forget(j) => {
                    let mut b = first;
                    b.retain(|&x| x != j);
                    b
                }
                NodeKind::Join => first,
            };
        }
        let nodes = spec
            .iter()
            .enumerate()
            .map(|(u, (kind, children))| NiceNode {
                kind: *kind,
                bag: bags[u].clone(),
                children: children.clone(),
                parent: parent[u],
            })
            .collect();
        let ntd = NiceTreeDecomposition { nodes, root };
        ntd.check_local().map_err(|m| Error::input("nice", m))?;
        Ok(ntd)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[NiceNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NiceNode {
        &self.nodes[id]
    }

    pub fn max_bag_size(&self) -> usize {
        self.nodes.iter().map(|n| n.bag.len()).max().unwrap_or(0)
    }

    pub fn width(&self) -> usize {
        self.max_bag_size().saturating_sub(1)
    }

    /// Number of nodes in the subtree below (and including) each node.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![1; self.len()];
        for u in post_order(self.root, |u| self.nodes[u].children.as_slice()) {
            sizes[u] += self.nodes[u].children.iter().map(|&c| sizes[c]).sum::<usize>();
        }
        sizes
    }

    /// The plain `(T, X)` pair, tree edges as `(child, parent)`.
    pub fn underlying(&self) -> TreeDecomposition {
        let bags = self.nodes.iter().map(|n| n.bag.clone()).collect();
        let edges = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(u, n)| n.parent.map(|p| (u, p)))
            .collect();
        TreeDecomposition::new(bags, edges)
    }

    /// Verifies the node-type rules, parent links and the forget-once property.
    pub fn check_local(&self) -> std::result::Result<(), String> {
        if self.nodes[self.root].parent.is_some() {
            return Err("root has a parent".into());
        }
        let mut forgotten = BTreeSet::new();
        for (u, node) in self.nodes.iter().enumerate() {
            for &c in &node.children {
                if self.nodes[c].parent != Some(u) {
                    return Err(format!("child {c} of {u} does not link back"));
                }
            }
            if u != self.root && node.parent.is_none() {
                return Err(format!("node {u} has no parent"));
            }
            if node.bag.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("bag of node {u} is not sorted"));
            }
            let child_bag = |i: usize| &self.nodes[node.children[i]].bag;
            match node.kind {
                NodeKind::Leaf => {
                    if !node.children.is_empty() || node.bag.len() != 1 {
                        return Err(format!("leaf {u} must have no children and one job"));
                    }
                }
                NodeKind::Introduce(j) => {
                    if node.children.len() != 1 {
                        return Err(format!("introduce {u} must have one child"));
                    }
                    let c = child_bag(0);
                    if c.contains(&j) || node.bag.len() != c.len() + 1 || !node.bag.contains(&j) || !c.iter().all(|x| node.bag.contains(x)) {
                        return Err(format!("introduce {u} of job {j} has inconsistent bags"));
                    }
                }
                NodeKind::Forget(j) => {
                    if node.children.len() != 1 {
                        return Err(format!("forget {u} must have one child"));
                    }
                    let c = child_bag(0);
                    if node.bag.contains(&j) || c.len() != node.bag.len() + 1 || !c.contains(&j) || !node.bag.iter().all(|x| c.contains(x)) {
                        return Err(format!("forget {u} of job {j} has inconsistent bags"));
                    }
                    if !forgotten.insert(j) {
                        return Err(format!("job {j} is forgotten twice"));
                    }
                }
                NodeKind::Join => {
                    if node.children.len() != 2 {
                        return Err(format!("join {u} must have two children"));
                    }
                    if child_bag(0) != &node.bag || child_bag(1) != &node.bag {
                        return Err(format!("join {u} children bags differ"));
                    }
                }
            }
        }
        let reached = post_order(self.root, |u| self.nodes[u].children.as_slice()).len();
        if reached != self.len() {
            return Err("nodes unreachable from the root".into());
        }
        Ok(())
    }

    /// Local rules plus the three decomposition conditions for `graph`.
    pub fn check(&self, graph: &Graph) -> std::result::Result<(), String> {
        self.check_local()?;
        self.underlying().validate(graph).map_err(|v| v.to_string())?;
        Ok(())
    }
}

pub(crate) fn post_order<'a>(root: NodeId, children: impl Fn(NodeId) -> &'a [NodeId]) -> Vec<NodeId> {
    let mut order = Vec::new();
    let mut stack = vec![(root, false)];
    while let Some((u, expanded)) = stack.pop() {
        if expanded {
            order.push(u);
            continue;
        }
        stack.push((u, true));
        for &c in children(u).iter().rev() {
            stack.push((c, false));
        }
    }
    order
}

struct Builder {
    nodes: Vec<NiceNode>,
}

impl Builder {
    fn push(&mut self, kind: NodeKind, bag: Vec<JobId>, children: Vec<NodeId>) -> NodeId {
        let id = self.nodes.len();
        for &c in &children {
            self.nodes[c].parent = Some(id);
        }
        self.nodes.push(NiceNode {
            kind,
            bag,
            children,
            parent: None,
        });
        id
    }

    fn leaf(&mut self, j: JobId) -> NodeId {
        self.push(NodeKind::Leaf, vec![j], Vec::new())
    }

    fn introduce(&mut self, child: NodeId, j: JobId) -> NodeId {
        let mut bag = self.nodes[child].bag.clone();
        let at = bag.binary_search(&j).expect_err("introduced job already present");
        bag.insert(at, j);
        self.push(NodeKind::Introduce(j), bag, vec![child])
    }

    fn forget(&mut self, child: NodeId, j: JobId) -> NodeId {
        let mut bag = self.nodes[child].bag.clone();
        let at = bag.binary_search(&j).expect("forgotten job present");
        bag.remove(at);
        self.push(NodeKind::Forget(j), bag, vec![child])
    }

    fn join(&mut self, left: NodeId, right: NodeId) -> NodeId {
        let bag = self.nodes[left].bag.clone();
        debug_assert_eq!(bag, self.nodes[right].bag);
        self.push(NodeKind::Join, bag, vec![left, right])
    }

    fn introduce_all(&mut self, mut top: NodeId, target: &[JobId]) -> NodeId {
        let missing: Vec<JobId> = target
            .iter()
            .copied()
            .filter(|j| self.nodes[top].bag.binary_search(j).is_err())
            .collect();
        for j in missing {
            top = self.introduce(top, j);
        }
        top
    }

    fn join_unioned(&mut self, a: NodeId, branch: NodeId) -> NodeId {
        let shared = union(&self.nodes[a].bag, &self.nodes[branch].bag);
        let a = self.introduce_all(a, &shared);
        let branch = self.introduce_all(branch, &shared);
        self.join(a, branch)
    }

    /// Introduces the jobs of `target` missing from `start` one at a time,
    /// splicing in every pending leaf bag as soon as the current bag holds
    /// its shared part and has room for its private jobs.
    fn grow(&mut self, start: Option<NodeId>, target: &[JobId], pending: &mut Vec<Pending>, max_bag: usize) -> NodeId {
        let mut top = start;
        if top.is_none() {
            // open with the shared part that lets the most leaf bags splice in
            let seed = pending
                .iter()
                .filter(|p| !p.shared.is_empty() && is_subset(&p.shared, target))
                .max_by_key(|p| {
                    let fits = pending.iter().filter(|q| q.fits(&p.shared, max_bag)).count();
                    (fits, std::cmp::Reverse(p.shared.clone()))
                })
                .map(|p| p.shared.clone());
            if let Some(seed) = seed {
                let mut t = self.leaf(seed[0]);
                for &j in &seed[1..] {
                    t = self.introduce(t, j);
                }
                top = Some(t);
            }
        }
        loop {
            if let Some(t) = top {
                top = Some(self.splice_fitting(t, pending, max_bag));
            }
            let current: &[JobId] = top.map(|t| self.nodes[t].bag.as_slice()).unwrap_or(&[]);
            let missing: Vec<JobId> = target
                .iter()
                .copied()
                .filter(|j| current.binary_search(j).is_err())
                .collect();
            let Some(&fallback) = missing.first() else { break };
            let next = missing
                .iter()
                .copied()
                .max_by_key(|&x| {
                    let grown = union(current, &[x]);
                    let fits = pending.iter().filter(|p| p.fits(&grown, max_bag)).count();
                    (fits, std::cmp::Reverse(x))
                })
                .unwrap_or(fallback);
            top = Some(match top {
                None => self.leaf(next),
                Some(t) => self.introduce(t, next),
            });
        }
        let top = top.expect("target is nonempty");
        self.splice_fitting(top, pending, max_bag)
    }

    fn splice_fitting(&mut self, mut top: NodeId, pending: &mut Vec<Pending>, max_bag: usize) -> NodeId {
        let mut i = 0;
        while i < pending.len() {
            if pending[i].fits(&self.nodes[top].bag, max_bag) {
                let p = pending.remove(i);
                for &j in &p.private {
                    top = self.introduce(top, j);
                }
                for &j in &p.private {
                    top = self.forget(top, j);
                }
            } else {
                i += 1;
            }
        }
        top
    }

    fn forget_outside(&mut self, mut top: NodeId, keep: &[JobId]) -> NodeId {
        let gone: Vec<JobId> = self.nodes[top]
            .bag
            .iter()
            .copied()
            .filter(|j| keep.binary_search(j).is_err())
            .collect();
        for j in gone {
            top = self.forget(top, j);
        }
        top
    }
}

/// A leaf bag of the input split into jobs shared with its parent bag and
/// jobs that occur nowhere else.
struct Pending {
    shared: Vec<JobId>,
    private: Vec<JobId>,
}

impl Pending {
    fn fits(&self, bag: &[JobId], max_bag: usize) -> bool {
        bag.len() + self.private.len() <= max_bag && is_subset(&self.shared, bag)
    }
}

fn union(a: &[JobId], b: &[JobId]) -> Vec<JobId> {
    let mut out: Vec<JobId> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn is_subset(a: &[JobId], b: &[JobId]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

/// Converts a valid tree decomposition into a nice one of the same width.
///
/// The node with the largest id becomes the root. Adjacent bags where one
/// contains the other are contracted first, so the result has at most one
/// Forget per job and a Join only where the tree actually branches. Children
/// are attached heaviest subtree first, ties by node id.
pub fn make_nice(td: &TreeDecomposition, graph: &Graph) -> Result<NiceTreeDecomposition> {
    td.validate(graph)
        .map_err(|v| Error::input("tree_decomposition", v.to_string()))?;
    let len = td.len();
    let adj = td.adjacency().map_err(|v| Error::input("tree_decomposition", v.to_string()))?;
    let root = len - 1;

    let mut bag: Vec<Vec<JobId>> = td.bags().to_vec();
    let mut parent: Vec<Option<NodeId>> = vec![None; len];
    let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); len];
    let mut seen = vec![false; len];
    let mut queue = std::collections::VecDeque::from([root]);
    seen[root] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some(u);
                children[u].push(v);
                queue.push_back(v);
            }
        }
    }

    // contract edges whose bags are nested
    let mut alive = vec![true; len];
    loop {
        let mut changed = false;
        for u in post_order(root, |x| children[x].as_slice()) {
            let Some(p) = parent[u] else { continue };
            if !alive[u] {
                continue;
            }
            let nested = is_subset(&bag[u], &bag[p]) || is_subset(&bag[p], &bag[u]);
            if !nested {
                continue;
            }
            if bag[u].len() > bag[p].len() {
                bag[p] = std::mem::take(&mut bag[u]);
            }
            alive[u] = false;
            let moved = std::mem::take(&mut children[u]);
            children[p].retain(|&c| c != u);
            for &c in &moved {
                parent[c] = Some(p);
            }
            children[p].extend(moved);
            children[p].sort_unstable();
            changed = true;
        }
        if !changed {
            break;
        }
    }

    let order = post_order(root, |x| children[x].as_slice());
    let mut size = vec![1usize; len];
    for &u in &order {
        size[u] += children[u].iter().map(|&c| size[c]).sum::<usize>();
    }
    for list in children.iter_mut() {
        list.sort_by_key(|&c| (std::cmp::Reverse(size[c]), c));
    }

    let max_bag = td.max_bag_size();
    let mut b = Builder { nodes: Vec::new() };
    let mut top: Vec<Option<NodeId>> = vec![None; len];
    for &u in &order {
        if u != root && children[u].is_empty() {
            continue;
        }
        let target = &bag[u];
        let mut pending = Vec::new();
        let mut branches: Vec<NodeId> = Vec::new();
        for &c in &children[u] {
            if children[c].is_empty() {
                let (shared, private): (Vec<JobId>, Vec<JobId>) =
                    bag[c].iter().partition(|j| target.binary_search(j).is_ok());
                pending.push(Pending { shared, private });
            } else {
                let branch = top[c].expect("child built before parent");
                branches.push(b.forget_outside(branch, target));
            }
        }
        for branch in branches.iter_mut() {
            *branch = b.splice_fitting(*branch, &mut pending, max_bag);
        }
        // branches with identical top bags join without extra introduces
        let mut acc: Option<NodeId> = None;
        let mut groups: Vec<NodeId> = Vec::new();
        for branch in branches {
            match groups.iter_mut().find(|g| b.nodes[**g].bag == b.nodes[branch].bag) {
                Some(g) => *g = b.join(*g, branch),
                None => groups.push(branch),
            }
        }
        // merge the remaining groups, each time the one adding the fewest jobs
        while !groups.is_empty() {
            let pick = match acc {
                None => 0,
                Some(a) => (0..groups.len())
                    .min_by_key(|&i| union(&b.nodes[a].bag, &b.nodes[groups[i]].bag).len())
                    .expect("nonempty"),
            };
            let g = groups.remove(pick);
            acc = Some(match acc {
                None => g,
                Some(a) => {
                    let shared = union(&b.nodes[a].bag, &b.nodes[g].bag);
                    let a = b.grow(Some(a), &shared, &mut pending, max_bag);
                    let g = b.grow(Some(g), &shared, &mut pending, max_bag);
                    b.join(a, g)
                }
            });
        }
        let mut root_chain = b.grow(acc, target, &mut pending, max_bag);
        // leftover leaf children, one branch per distinct shared part
        while let Some(first) = pending.first() {
            let shared = first.shared.clone();
            let (mut group, rest): (Vec<Pending>, Vec<Pending>) =
                pending.into_iter().partition(|p| p.shared == shared);
            pending = rest;
            let branch = if shared.is_empty() {
                // a separate component hanging off this bag
                let lone = group.remove(0);
                let top = b.leaf(lone.private[0]);
                let top = b.introduce_all(top, &lone.private);
                let top = b.splice_fitting(top, &mut group, max_bag);
                b.forget_outside(top, &[])
            } else {
                b.grow(None, &shared, &mut group, max_bag)
            };
            pending.extend(group);
            root_chain = b.join_unioned(root_chain, branch);
        }
        top[u] = Some(root_chain);
    }
    let root_id = top[root].expect("root built");
    let ntd = NiceTreeDecomposition { nodes: b.nodes, root: root_id };
    debug_assert_eq!(ntd.check_local(), Ok(()));
    Ok(ntd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treedecomp::tests::{fig2_graph, fig2_td};

    #[test]
    fn fig2_becomes_nice_width_two() {
        let g = fig2_graph();
        let ntd = make_nice(&fig2_td(), &g).unwrap();
        ntd.check(&g).unwrap();
        assert_eq!(ntd.width(), 2);
        assert!(ntd.len() <= 20, "{} nodes", ntd.len());
    }

    #[test]
    fn single_bag_is_single_leaf() {
        let g = Graph::edgeless(1);
        let td = TreeDecomposition::new(vec![vec![0]], vec![]);
        let ntd = make_nice(&td, &g).unwrap();
        assert_eq!(ntd.len(), 1);
        assert_eq!(ntd.node(ntd.root()).kind, NodeKind::Leaf);
    }

    #[test]
    fn nested_pair_is_leaf_then_introduce() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let td = TreeDecomposition::new(vec![vec![0], vec![0, 1]], vec![(0, 1)]);
        let ntd = make_nice(&td, &g).unwrap();
        assert_eq!(ntd.len(), 2);
        assert_eq!(ntd.node(0).kind, NodeKind::Leaf);
        assert_eq!(ntd.node(0).bag, vec![0]);
        assert_eq!(ntd.node(1).kind, NodeKind::Introduce(1));
        assert_eq!(ntd.width(), 1);
    }

    #[test]
    fn invalid_input_is_rejected() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let td = TreeDecomposition::new(vec![vec![0], vec![1]], vec![(0, 1)]);
        assert!(make_nice(&td, &g).is_err());
    }

    #[test]
    fn from_spec_rejects_broken_rules() {
        // join whose children disagree
        let spec = vec![
            (NodeKind::Leaf, vec![]),
            (NodeKind::Leaf, vec![]),
            (NodeKind::Join, vec![0, 1]),
        ];
        assert!(NiceTreeDecomposition::from_spec(&spec, &[(0, 0), (1, 1)], 2).is_err());
        assert!(NiceTreeDecomposition::from_spec(&spec, &[(0, 0), (1, 0)], 2).is_ok());
    }
}

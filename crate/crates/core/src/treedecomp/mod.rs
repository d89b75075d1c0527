//! Tree decompositions of the neighborhood graph and their nice form.

mod minfill;
mod nice;
mod pace;

pub use minfill::{decompose_min_fill, min_fill_order};
pub use nice::{make_nice, NiceNode, NiceTreeDecomposition, NodeKind};
pub(crate) use nice::post_order;
pub use pace::{read_pace_td, write_pace_td};

use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;

use crate::instance::{Graph, JobId};

pub type NodeId = usize;

/// Tree `T` over bag nodes `0..len`, each node carrying a sorted job set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    bags: Vec<Vec<JobId>>,
    edges: Vec<(NodeId, NodeId)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WidthReport {
    pub width: usize,
    pub node_count: usize,
    pub max_bag_size: usize,
}

/// First violated condition found by [`TreeDecomposition::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Empty,
    NotATree(String),
    JobOutOfRange { node: NodeId, job: JobId },
    /// Condition 1: a job appears in no bag.
    UncoveredJob(JobId),
    /// Condition 2: no bag holds both endpoints.
    UncoveredEdge(JobId, JobId),
    /// Condition 3: the nodes holding the job do not induce a subtree.
    DisconnectedJob(JobId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "decomposition has no nodes"),
            Violation::NotATree(why) => write!(f, "not a tree: {why}"),
            Violation::JobOutOfRange { node, job } => write!(f, "bag {node} holds unknown job {job}"),
            Violation::UncoveredJob(j) => write!(f, "job {j} appears in no bag"),
            Violation::UncoveredEdge(u, v) => write!(f, "edge {{{u},{v}}} is not contained in any bag"),
            Violation::DisconnectedJob(j) => write!(f, "bags containing job {j} are not connected"),
        }
    }
}

impl TreeDecomposition {
    /// Bags are sorted and deduplicated; no validation against a graph happens here.
    pub fn new(bags: Vec<Vec<JobId>>, edges: Vec<(NodeId, NodeId)>) -> Self {
        let bags = bags
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        TreeDecomposition { bags, edges }
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn bags(&self) -> &[Vec<JobId>] {
        &self.bags
    }

    pub fn bag(&self, node: NodeId) -> &[JobId] {
        &self.bags[node]
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn max_bag_size(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn width_report(&self) -> WidthReport {
        let max_bag_size = self.max_bag_size();
        WidthReport {
            width: max_bag_size.saturating_sub(1),
            node_count: self.len(),
            max_bag_size,
        }
    }

    pub(crate) fn adjacency(&self) -> Result<Vec<Vec<NodeId>>, Violation> {
        let mut adj = vec![Vec::new(); self.len()];
        for &(a, b) in &self.edges {
            if a >= self.len() || b >= self.len() {
                return Err(Violation::NotATree(format!("edge {{{a},{b}}} references a missing node")));
            }
            if a == b {
                return Err(Violation::NotATree(format!("self-loop on node {a}")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        Ok(adj)
    }

    /// Checks that `T` is a tree and that the three decomposition conditions hold.
    pub fn validate(&self, graph: &Graph) -> Result<WidthReport, Violation> {
        if self.is_empty() {
            return Err(Violation::Empty);
        }
        let adj = self.adjacency()?;
        if self.edges.len() + 1 != self.len() {
            return Err(Violation::NotATree(format!(
                "{} nodes but {} edges",
                self.len(),
                self.edges.len()
            )));
        }
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        if reached != self.len() {
            return Err(Violation::NotATree("disconnected".into()));
        }

        let n = graph.n();
        let mut holders: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (node, bag) in self.bags.iter().enumerate() {
            for &j in bag {
                if j >= n {
                    return Err(Violation::JobOutOfRange { node, job: j });
                }
                holders[j].push(node);
            }
        }
        if let Some(j) = holders.iter().position(Vec::is_empty) {
            return Err(Violation::UncoveredJob(j));
        }
        for &(u, v) in graph.edges() {
            let covered = holders[u]
                .iter()
                .any(|&node| self.bags[node].binary_search(&v).is_ok());
            if !covered {
                return Err(Violation::UncoveredEdge(u, v));
            }
        }
        let mut inside = vec![false; self.len()];
        for (j, nodes) in holders.iter().enumerate() {
            for &node in nodes {
                inside[node] = true;
            }
            let mut stack = vec![nodes[0]];
            let mut visited = vec![nodes[0]];
            inside[nodes[0]] = false;
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if inside[v] {
                        inside[v] = false;
                        visited.push(v);
                        stack.push(v);
                    }
                }
            }
            let connected = visited.len() == nodes.len();
            for &node in nodes {
                inside[node] = false;
            }
            if !connected {
                return Err(Violation::DisconnectedJob(j));
            }
        }
        Ok(self.width_report())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Graph consistent with the worked example: jobs j1..j5 as 0..4.
    pub(crate) fn fig2_graph() -> Graph {
        Graph::new(5, [(0, 3), (0, 1), (1, 3), (0, 2), (2, 3), (1, 4)]).unwrap()
    }

    pub(crate) fn fig2_td() -> TreeDecomposition {
        TreeDecomposition::new(
            vec![vec![0, 3], vec![0, 1, 3], vec![0, 2, 3], vec![1, 4]],
            vec![(0, 1), (0, 2), (1, 3)],
        )
    }

    #[test]
    fn fig2_is_valid_width_two() {
        let report = fig2_td().validate(&fig2_graph()).unwrap();
        assert_eq!(report.width, 2);
        assert_eq!(report.node_count, 4);
    }

    #[test]
    fn missing_edge_is_reported() {
        let mut edges = fig2_graph().edges().to_vec();
        edges.push((2, 4));
        let g = Graph::new(5, edges).unwrap();
        assert_eq!(fig2_td().validate(&g), Err(Violation::UncoveredEdge(2, 4)));
    }

    #[test]
    fn disconnected_occurrence_is_reported() {
        let g = Graph::edgeless(2);
        let td = TreeDecomposition::new(vec![vec![0], vec![1], vec![0]], vec![(0, 1), (1, 2)]);
        assert_eq!(td.validate(&g), Err(Violation::DisconnectedJob(0)));
    }

    #[test]
    fn tree_shape_is_checked() {
        let g = Graph::edgeless(1);
        let cyc = TreeDecomposition::new(vec![vec![0]; 3], vec![(0, 1), (1, 2), (2, 0)]);
        assert!(matches!(cyc.validate(&g), Err(Violation::NotATree(_))));
        let split = TreeDecomposition::new(vec![vec![0], vec![0], vec![0], vec![0]], vec![(0, 1), (2, 3), (0, 1)]);
        assert!(matches!(split.validate(&g), Err(Violation::NotATree(_))));
        assert_eq!(TreeDecomposition::new(vec![], vec![]).validate(&g), Err(Violation::Empty));
    }

    #[test]
    fn uncovered_job_and_range() {
        let g = Graph::edgeless(2);
        let td = TreeDecomposition::new(vec![vec![0]], vec![]);
        assert_eq!(td.validate(&g), Err(Violation::UncoveredJob(1)));
        let td = TreeDecomposition::new(vec![vec![0, 1, 5]], vec![]);
        assert_eq!(td.validate(&g), Err(Violation::JobOutOfRange { node: 0, job: 5 }));
    }
}

use std::collections::BTreeSet;

use super::TreeDecomposition;
use crate::instance::{Graph, JobId};

fn fill_in(adj: &[BTreeSet<JobId>], v: JobId) -> usize {
    let nbrs: Vec<JobId> = adj[v].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[i + 1..] {
            if !adj[a].contains(&b) {
                missing += 1;
            }
        }
    }
    missing
}

/// Min-fill elimination ordering; ties go to the lowest vertex id.
pub fn min_fill_order(graph: &Graph) -> Vec<JobId> {
    let n = graph.n();
    let mut adj: Vec<BTreeSet<JobId>> = (0..n)
        .map(|v| graph.neighbors(v).iter().copied().collect())
        .collect();
    let mut fill: Vec<usize> = (0..n).map(|v| fill_in(&adj, v)).collect();
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (fill[v], v))
            .expect("a vertex remains");
        alive[v] = false;
        order.push(v);
        let nbrs: Vec<JobId> = adj[v].iter().copied().collect();
        for &a in &nbrs {
            adj[a].remove(&v);
        }
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        adj[v].clear();
        // fill counts only change within distance two of v
        let mut touched: BTreeSet<JobId> = nbrs.iter().copied().collect();
        for &a in &nbrs {
            touched.extend(adj[a].iter().copied());
        }
        for u in touched {
            fill[u] = fill_in(&adj, u);
        }
    }
    order
}

/// Tree decomposition from the min-fill elimination ordering.
///
/// Node `t` holds the `t`-th eliminated vertex together with its neighbors at
/// elimination time, and hangs below the node of the earliest-eliminated such
/// neighbor. Trees of different components are chained root to root.
pub fn decompose_min_fill(graph: &Graph) -> TreeDecomposition {
    let n = graph.n();
    let order = min_fill_order(graph);
    let mut position = vec![0; n];
    for (t, &v) in order.iter().enumerate() {
        position[v] = t;
    }
    let mut adj: Vec<BTreeSet<JobId>> = (0..n)
        .map(|v| graph.neighbors(v).iter().copied().collect())
        .collect();
    let mut bags = Vec::with_capacity(n);
    let mut edges = Vec::new();
    let mut roots = Vec::new();
    for (t, &v) in order.iter().enumerate() {
        let nbrs: Vec<JobId> = adj[v].iter().copied().collect();
        let mut bag = nbrs.clone();
        bag.push(v);
        bags.push(bag);
        match nbrs.iter().map(|&u| position[u]).min() {
            Some(parent) => edges.push((t, parent)),
            None => roots.push(t),
        }
        for &a in &nbrs {
            adj[a].remove(&v);
        }
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
    }
    for pair in roots.windows(2) {
        edges.push((pair[0], pair[1]));
    }
    TreeDecomposition::new(bags, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate::{grid_mesh, random_partial_ktree};
    use rand::SeedableRng;

    #[test]
    fn path_has_width_one() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let td = decompose_min_fill(&g);
        assert_eq!(td.validate(&g).unwrap().width, 1);
    }

    #[test]
    fn clique_has_width_three() {
        let g = Graph::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let td = decompose_min_fill(&g);
        let report = td.validate(&g).unwrap();
        assert_eq!(report.width, 3);
        assert!(td.bags().iter().any(|b| b.len() == 4));
    }

    #[test]
    fn edgeless_chains_singletons() {
        let g = Graph::edgeless(3);
        let td = decompose_min_fill(&g);
        let report = td.validate(&g).unwrap();
        assert_eq!(report.width, 0);
        assert_eq!(td.len(), 3);
        assert_eq!(td.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn generated_graphs_decompose_validly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for seed in 0..20 {
            let g = random_partial_ktree(40 + seed, 1 + seed % 3, 0.8, &mut rng).unwrap();
            let td = decompose_min_fill(&g);
            assert!(td.validate(&g).is_ok());
        }
        let g = grid_mesh(4, 9).unwrap();
        let td = decompose_min_fill(&g);
        assert!(td.validate(&g).unwrap().width <= 4);
    }

    #[test]
    fn full_ktrees_are_recovered_exactly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for h in 1..=3 {
            let g = random_partial_ktree(25, h, 1.0, &mut rng).unwrap();
            assert_eq!(decompose_min_fill(&g).validate(&g).unwrap().width, h);
        }
    }
}

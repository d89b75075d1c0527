use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Costs, Graph, Instance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    /// 4-neighbor grid, job `r * cols + c` at row `r`, column `c`.
    GridMesh { rows: usize, cols: usize },
    /// Random subgraph of an `h`-tree on `n` vertices; each edge kept with
    /// probability `keep`.
    PartialKTree { n: usize, h: usize, keep: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CapacityRule {
    /// Same capacity on every machine.
    Uniform(u64),
    PerMachine(Vec<u64>),
    /// `ceil(weight_sum * num / (den * k))` on every machine.
    ShareOfTotal { num: u64, den: u64 },
}

/// Seeded instance generator.
#[derive(Debug, Clone)]
pub struct Generator {
    pub kind: GraphKind,
    pub costs: RangeInclusive<u64>,
    pub weights: RangeInclusive<u64>,
    pub machines: usize,
    pub capacity: CapacityRule,
    pub unrelated: bool,
}

impl Generator {
    pub fn new(kind: GraphKind, machines: usize) -> Self {
        Generator {
            kind,
            costs: 1..=9,
            weights: 1..=9,
            machines,
            capacity: CapacityRule::ShareOfTotal { num: 3, den: 2 },
            unrelated: false,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<Instance> {
        if self.costs.is_empty() {
            return Err(Error::input("cost_range", "range is empty"));
        }
        if self.weights.is_empty() {
            return Err(Error::input("weight_range", "range is empty"));
        }
        if self.machines == 0 {
            return Err(Error::input("k", "at least one machine is required"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = match self.kind {
            GraphKind::GridMesh { rows, cols } => grid_mesh(rows, cols)?,
            GraphKind::PartialKTree { n, h, keep } => random_partial_ktree(n, h, keep, &mut rng)?,
        };
        let n = graph.n();
        let k = self.machines;
        let costs = if self.unrelated {
            Costs::Unrelated(
                (0..n)
                    .map(|_| (0..k).map(|_| rng.gen_range(self.costs.clone())).collect())
                    .collect(),
            )
        } else {
            Costs::Identical((0..n).map(|_| rng.gen_range(self.costs.clone())).collect())
        };
        let weights: Vec<u64> = (0..n).map(|_| rng.gen_range(self.weights.clone())).collect();
        let capacities = match &self.capacity {
            CapacityRule::Uniform(c) => vec![*c; k],
            CapacityRule::PerMachine(v) => {
                if v.len() != k {
                    return Err(Error::input("capacities", format!("expected {k} entries")));
                }
                v.clone()
            }
            CapacityRule::ShareOfTotal { num, den } => {
                if *den == 0 {
                    return Err(Error::input("capacity_rule", "zero denominator"));
                }
                let total: u128 = weights.iter().map(|&w| w as u128).sum();
                let d = *den as u128 * k as u128;
                let cap = (total * *num as u128).div_ceil(d);
                vec![u64::try_from(cap).map_err(|_| Error::input("capacity_rule", "overflow"))?; k]
            }
        };
        Instance::new(graph, costs, weights, capacities)
    }
}

/// The `rows x cols` 4-neighbor grid graph.
pub fn grid_mesh(rows: usize, cols: usize) -> Result<Graph> {
    if rows == 0 || cols == 0 {
        return Err(Error::input("grid_mesh", "rows and cols must be positive"));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Graph::new(rows * cols, edges)
}

/// Builds an `h`-tree on `n` vertices by repeatedly attaching a new vertex to
/// a uniformly chosen `h`-clique, then keeps each edge with probability `keep`.
pub fn random_partial_ktree(n: usize, h: usize, keep: f64, rng: &mut impl Rng) -> Result<Graph> {
    if n == 0 {
        return Err(Error::input("n", "must be positive"));
    }
    if h == 0 {
        return Err(Error::input("h", "must be positive"));
    }
    if !(0.0..=1.0).contains(&keep) {
        return Err(Error::input("edge_keep_prob", "must lie in [0, 1]"));
    }
    let mut edges = Vec::new();
    let base = n.min(h + 1);
    for u in 0..base {
        for v in u + 1..base {
            edges.push((u, v));
        }
    }
    if n > h + 1 {
        let mut cliques: Vec<Vec<usize>> = Vec::new();
        let initial: Vec<usize> = (0..=h).collect();
        for skip in 0..=h {
            cliques.push(initial.iter().copied().filter(|&x| x != skip).collect());
        }
        for v in h + 1..n {
            let clique = cliques.choose(rng).expect("nonempty").clone();
            for &u in &clique {
                edges.push((u, v));
            }
            for skip in &clique {
                let mut next: Vec<usize> = clique.iter().copied().filter(|x| x != skip).collect();
                next.push(v);
                cliques.push(next);
            }
        }
    }
    if keep < 1.0 {
        edges.retain(|_| rng.gen_bool(keep));
    }
    Graph::new(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_row_is_path() {
        let g = grid_mesh(1, 6).unwrap();
        assert_eq!(g.edge_count(), 5);
        assert!((0..5).all(|i| g.has_edge(i, i + 1)));
    }

    #[test]
    fn grid_2x2_is_cycle() {
        let g = grid_mesh(2, 2).unwrap();
        assert_eq!(g.edge_count(), 4);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 3) && g.has_edge(3, 2) && g.has_edge(2, 0));
        assert!(!g.has_edge(0, 3));
    }

    #[test]
    fn full_two_tree_edge_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_partial_ktree(10, 2, 1.0, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 2 * 10 - 3);
        // every vertex beyond the base triangle has exactly two earlier neighbors
        for v in 3..10 {
            assert_eq!(g.neighbors(v).iter().filter(|&&u| u < v).count(), 2);
        }
    }

    #[test]
    fn ktree_edge_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for h in 1..5 {
            let g = random_partial_ktree(30, h, 1.0, &mut rng).unwrap();
            assert_eq!(g.edge_count(), h * (h + 1) / 2 + (30 - h - 1) * h);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let gen = Generator::new(GraphKind::PartialKTree { n: 12, h: 3, keep: 0.7 }, 3);
        assert_eq!(gen.generate(42).unwrap(), gen.generate(42).unwrap());
        assert_ne!(gen.generate(42).unwrap(), gen.generate(43).unwrap());
    }

    #[test]
    fn invalid_parameters() {
        assert!(grid_mesh(0, 3).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(random_partial_ktree(5, 0, 1.0, &mut rng).is_err());
        assert!(random_partial_ktree(5, 2, 1.5, &mut rng).is_err());
        let mut gen = Generator::new(GraphKind::GridMesh { rows: 2, cols: 2 }, 2);
        #[allow(clippy::reversed_empty_ranges)]
        {
            gen.costs = 5..=1;
        }
        assert!(gen.generate(0).is_err());
    }
}

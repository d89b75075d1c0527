//! Problem instances: jobs with processing costs and memory weights, the
//! neighborhood graph between them, and the machines they run on.
//!
//! A machine that processes the job set `J'` must hold the data of every job
//! in the closed neighborhood `N[J']`, so its memory load is the weight sum
//! over `N[J']` and not only over `J'`.

pub mod generate;
pub(crate) mod io;

pub use generate::{grid_mesh, random_partial_ktree, CapacityRule, Generator, GraphKind};
pub use io::{load_instance, load_pace_graph, read_pace_graph, InstanceFile, Sidecar};

use std::collections::BTreeSet;

use crate::error::{Error, Result};

pub type JobId = usize;
pub type MachineId = usize;

/// Undirected simple graph on jobs `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(JobId, JobId)>,
    adjacency: Vec<Vec<JobId>>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicate edges and out-of-range ids.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (JobId, JobId)>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::input(
                    "edges",
                    format!("edge {{{u},{v}}} references a job outside 0..{n}"),
                ));
            }
            if u == v {
                return Err(Error::input("edges", format!("self-loop on job {u}")));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::input(
                    "edges",
                    format!("duplicate edge {{{},{}}}", key.0, key.1),
                ));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: seen.into_iter().collect(),
            adjacency,
        })
    }

    pub fn edgeless(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
            adjacency: vec![Vec::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(min, max)` pairs in ascending order.
    pub fn edges(&self) -> &[(JobId, JobId)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, j: JobId) -> &[JobId] {
        &self.adjacency[j]
    }

    pub fn has_edge(&self, u: JobId, v: JobId) -> bool {
        u < self.n && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// `N[subset]`: the subset together with every neighbor of it.
    pub fn closed_neighborhood(&self, subset: &BTreeSet<JobId>) -> Result<BTreeSet<JobId>> {
        let mut out = subset.clone();
        for &j in subset {
            if j >= self.n {
                return Err(Error::input(
                    "subset",
                    format!("job {j} outside 0..{}", self.n),
                ));
            }
            out.extend(self.adjacency[j].iter().copied());
        }
        Ok(out)
    }
}

/// Processing costs, either one value per job or one per (job, machine).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Costs {
    Identical(Vec<u64>),
    Unrelated(Vec<Vec<u64>>),
}

impl Costs {
    pub fn cost(&self, job: JobId, machine: MachineId) -> u64 {
        match self {
            Costs::Identical(c) => c[job],
            Costs::Unrelated(c) => c[job][machine],
        }
    }

    pub fn is_unrelated(&self) -> bool {
        matches!(self, Costs::Unrelated(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    graph: Graph,
    costs: Costs,
    weights: Vec<u64>,
    capacities: Vec<u64>,
    cost_sum: u64,
    weight_sum: u64,
}

impl Instance {
    pub fn new(graph: Graph, costs: Costs, weights: Vec<u64>, capacities: Vec<u64>) -> Result<Self> {
        let n = graph.n();
        let k = capacities.len();
        if n == 0 {
            return Err(Error::input("n", "instance must contain at least one job"));
        }
        if k == 0 {
            return Err(Error::input("capacities", "at least one machine is required"));
        }
        if k > crate::MAX_MACHINES {
            return Err(Error::input(
                "k",
                format!("at most {} machines are supported", crate::MAX_MACHINES),
            ));
        }
        if weights.len() != n {
            return Err(Error::input(
                "weights",
                format!("expected {n} entries, found {}", weights.len()),
            ));
        }
        let cost_sum = match &costs {
            Costs::Identical(c) => {
                if c.len() != n {
                    return Err(Error::input(
                        "costs",
                        format!("expected {n} entries, found {}", c.len()),
                    ));
                }
                checked_sum(c.iter().copied(), "costs")?
            }
            Costs::Unrelated(rows) => {
                if rows.len() != n {
                    return Err(Error::input(
                        "costs",
                        format!("expected {n} rows, found {}", rows.len()),
                    ));
                }
                if let Some((j, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != k) {
                    return Err(Error::input(
                        "costs",
                        format!("row {j} has {} entries, expected {k}", row.len()),
                    ));
                }
                checked_sum(
                    rows.iter().map(|r| r.iter().copied().max().unwrap_or(0)),
                    "costs",
                )?
            }
        };
        let weight_sum = checked_sum(weights.iter().copied(), "weights")?;
        Ok(Instance {
            graph,
            costs,
            weights,
            capacities,
            cost_sum,
            weight_sum,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn k(&self) -> usize {
        self.capacities.len()
    }

    pub fn costs(&self) -> &Costs {
        &self.costs
    }

    pub fn cost(&self, job: JobId, machine: MachineId) -> u64 {
        self.costs.cost(job, machine)
    }

    pub fn weight(&self, job: JobId) -> u64 {
        self.weights[job]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn capacities(&self) -> &[u64] {
        &self.capacities
    }

    /// Upper bound on any machine load (the plain cost sum for identical machines).
    pub fn cost_sum(&self) -> u64 {
        self.cost_sum
    }

    pub fn weight_sum(&self) -> u64 {
        self.weight_sum
    }

    pub fn with_capacities(&self, capacities: Vec<u64>) -> Result<Self> {
        Instance::new(
            self.graph.clone(),
            self.costs.clone(),
            self.weights.clone(),
            capacities,
        )
    }

    /// Load, memory and makespan of a complete assignment.
    pub fn evaluate(&self, assignment: &Assignment) -> Result<ScheduleEval> {
        let n = self.n();
        let k = self.k();
        if assignment.machine_of.len() != n {
            return Err(Error::input(
                "assignment",
                format!("expected {n} entries, found {}", assignment.machine_of.len()),
            ));
        }
        if let Some(j) = assignment.machine_of.iter().position(|&m| m >= k) {
            return Err(Error::input(
                "assignment",
                format!("job {j} mapped to machine {} outside 0..{k}", assignment.machine_of[j]),
            ));
        }
        let mut load = vec![0u64; k];
        let mut memory = vec![0u64; k];
        // holds[l] marks the jobs in N[J_l]
        let mut holds = vec![false; k * n];
        for (j, &m) in assignment.machine_of.iter().enumerate() {
            load[m] += self.cost(j, m);
            holds[m * n + j] = true;
            for &nb in self.graph.neighbors(j) {
                holds[m * n + nb] = true;
            }
        }
        for (m, mem) in memory.iter_mut().enumerate() {
            *mem = (0..n)
                .filter(|&j| holds[m * n + j])
                .map(|j| self.weights[j])
                .sum();
        }
        let makespan = load.iter().copied().max().unwrap_or(0);
        let feasible = memory.iter().zip(&self.capacities).all(|(m, c)| m <= c);
        Ok(ScheduleEval {
            load,
            memory,
            makespan,
            feasible,
        })
    }
}

fn checked_sum(mut values: impl Iterator<Item = u64>, field: &str) -> Result<u64> {
    values.try_fold(0u64, |acc, v| acc.checked_add(v)).ok_or_else(|| {
        Error::input(field, "sum over all jobs overflows 64-bit arithmetic")
    })
}

/// Machine index per job, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Assignment {
    pub machine_of: Vec<MachineId>,
}

impl Assignment {
    pub fn new(machine_of: Vec<MachineId>) -> Self {
        Assignment { machine_of }
    }

    pub fn jobs_on(&self, machine: MachineId) -> BTreeSet<JobId> {
        self.machine_of
            .iter()
            .enumerate()
            .filter(|(_, &m)| m == machine)
            .map(|(j, _)| j)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ScheduleEval {
    pub load: Vec<u64>,
    pub memory: Vec<u64>,
    pub makespan: u64,
    pub feasible: bool,
}

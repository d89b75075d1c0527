use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};

use super::{Costs, Graph, Instance};
use crate::error::{Error, Result};

/// On-disk JSON instance. Jobs and machines are 0-indexed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub k: usize,
    pub edges: Vec<[usize; 2]>,
    pub costs: CostsFile,
    pub weights: Vec<u64>,
    pub capacities: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostsFile {
    Identical(Vec<u64>),
    Unrelated(Vec<Vec<u64>>),
}

/// Job data accompanying a PACE `.gr` graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub costs: CostsFile,
    pub weights: Vec<u64>,
    pub capacities: Vec<u64>,
}

impl From<CostsFile> for Costs {
    fn from(c: CostsFile) -> Self {
        match c {
            CostsFile::Identical(v) => Costs::Identical(v),
            CostsFile::Unrelated(v) => Costs::Unrelated(v),
        }
    }
}

impl From<&Costs> for CostsFile {
    fn from(c: &Costs) -> Self {
        match c {
            Costs::Identical(v) => CostsFile::Identical(v.clone()),
            Costs::Unrelated(v) => CostsFile::Unrelated(v.clone()),
        }
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            n: inst.n(),
            k: inst.k(),
            edges: inst.graph().edges().iter().map(|&(u, v)| [u, v]).collect(),
            costs: inst.costs().into(),
            weights: inst.weights().to_vec(),
            capacities: inst.capacities().to_vec(),
        }
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Instance> {
        if file.capacities.len() != file.k {
            return Err(Error::input(
                "capacities",
                format!("expected k = {} entries, found {}", file.k, file.capacities.len()),
            ));
        }
        let graph = Graph::new(file.n, file.edges.iter().map(|e| (e[0], e[1])))?;
        Instance::new(graph, file.costs.into(), file.weights, file.capacities)
    }
}

impl Instance {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&InstanceFile::from(self)).expect("instance serializes")
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::parse(e.line(), format!("column {}: {e}", e.column()))
}

/// Reads a JSON instance.
pub fn load_instance<R: Read>(source: R) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_reader(source).map_err(json_error)?;
    Instance::try_from(file)
}

/// Parses a PACE 2017 `.gr` graph (`p tw <n> <m>` header, 1-indexed edges).
pub fn read_pace_graph<R: Read>(source: R) -> Result<Graph> {
    let reader = BufReader::new(source);
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "p" {
            if header.is_some() {
                return Err(Error::parse(lineno, "duplicate problem line"));
            }
            if fields.len() != 4 || fields[1] != "tw" {
                return Err(Error::parse(lineno, "expected `p tw <n> <m>`"));
            }
            let n = parse_count(fields[2], lineno)?;
            let m = parse_count(fields[3], lineno)?;
            header = Some((n, m));
            continue;
        }
        let Some((n, _)) = header else {
            return Err(Error::parse(lineno, "edge before `p tw` header"));
        };
        if fields.len() != 2 {
            return Err(Error::parse(lineno, "expected an edge line `<u> <v>`"));
        }
        let u = parse_vertex(fields[0], n, lineno)?;
        let v = parse_vertex(fields[1], n, lineno)?;
        if u == v {
            return Err(Error::parse(lineno, format!("self-loop on vertex {}", u + 1)));
        }
        edges.push((u, v));
    }
    let (n, m) = header.ok_or_else(|| Error::parse(0, "missing `p tw` header"))?;
    if edges.len() != m {
        return Err(Error::parse(
            0,
            format!("header announces {m} edges, found {}", edges.len()),
        ));
    }
    Graph::new(n, edges)
}

/// Reads a `.gr` graph plus a JSON sidecar with costs, weights and capacities.
pub fn load_pace_graph<G: Read, S: Read>(graph: G, sidecar: S) -> Result<Instance> {
    let graph = read_pace_graph(graph)?;
    let sidecar: Sidecar = serde_json::from_reader(sidecar).map_err(json_error)?;
    Instance::new(graph, sidecar.costs.into(), sidecar.weights, sidecar.capacities)
}

pub(crate) fn parse_count(field: &str, line: usize) -> Result<usize> {
    field
        .parse()
        .map_err(|_| Error::parse(line, format!("expected a nonnegative integer, found `{field}`")))
}

pub(crate) fn parse_vertex(field: &str, n: usize, line: usize) -> Result<usize> {
    let v = parse_count(field, line)?;
    if v == 0 || v > n {
        return Err(Error::parse(line, format!("vertex {v} outside 1..={n}")));
    }
    Ok(v - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = r#"{"n":5,"k":2,"edges":[[0,1],[0,2],[0,3],[1,3],[2,3],[1,4]],
        "costs":[1,2,3,4,5],"weights":[1,1,1,1,1],"capacities":[4,4]}"#;

    #[test]
    fn json_round_trip() {
        let inst = load_instance(FIG2.as_bytes()).unwrap();
        assert_eq!(inst.n(), 5);
        assert_eq!(inst.graph().edge_count(), 6);
        let again = load_instance(inst.to_json().as_bytes()).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn json_unrelated_costs() {
        let src = r#"{"n":2,"k":2,"edges":[],"costs":[[1,2],[3,4]],"weights":[0,0],"capacities":[0,0]}"#;
        let inst = load_instance(src.as_bytes()).unwrap();
        assert!(inst.costs().is_unrelated());
        assert_eq!(inst.cost(1, 0), 3);
    }

    #[test]
    fn json_errors_name_field_or_line() {
        let bad = r#"{"n":2,"k":2,"edges":[[0,0]],"costs":[1,1],"weights":[1,1],"capacities":[1,1]}"#;
        match load_instance(bad.as_bytes()) {
            Err(Error::Input { field, .. }) => assert_eq!(field, "edges"),
            other => panic!("unexpected {other:?}"),
        }
        let bad = "{\n\"n\": 2,\n\"k\": }";
        match load_instance(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let bad = r#"{"n":2,"k":3,"edges":[],"costs":[1,1],"weights":[1,1],"capacities":[1,1]}"#;
        assert!(matches!(load_instance(bad.as_bytes()), Err(Error::Input { .. })));
    }

    #[test]
    fn pace_graph() {
        let g = read_pace_graph("c comment\np tw 4 3\n1 2\n2 3\n3 4\n".as_bytes()).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.edge_count(), 3);
        assert!(g.has_edge(2, 3));
    }

    #[test]
    fn pace_graph_errors() {
        assert!(matches!(
            read_pace_graph("p tw 3 1\n1 1\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(read_pace_graph("p tw 3 1\n1 4\n".as_bytes()).is_err());
        assert!(read_pace_graph("1 2\n".as_bytes()).is_err());
        assert!(read_pace_graph("p tw 3 2\n1 2\n".as_bytes()).is_err());
    }

    #[test]
    fn pace_with_sidecar() {
        let side = r#"{"costs":[1,1,1,1],"weights":[2,2,2,2],"capacities":[5,5]}"#;
        let inst = load_pace_graph("p tw 4 3\n1 2\n2 3\n3 4\n".as_bytes(), side.as_bytes()).unwrap();
        assert_eq!(inst.k(), 2);
        assert_eq!(inst.weight_sum(), 8);
    }
}

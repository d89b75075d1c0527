use std::io::{BufRead, BufReader, Read, Write};

use super::TreeDecomposition;
use crate::error::{Error, Result};
use crate::instance::io::{parse_count, parse_vertex};

/// Reads a PACE 2017 `.td` file: `s td <bags> <max bag size> <n>`, then
/// `b <id> <v...>` lines and tree edges, all 1-indexed.
pub fn read_pace_td<R: Read>(source: R) -> Result<(TreeDecomposition, usize)> {
    let reader = BufReader::new(source);
    let mut header: Option<(usize, usize, usize)> = None;
    let mut bags: Vec<Option<Vec<usize>>> = Vec::new();
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "s" => {
                if header.is_some() {
                    return Err(Error::parse(lineno, "duplicate solution line"));
                }
                if fields.len() != 5 || fields[1] != "td" {
                    return Err(Error::parse(lineno, "expected `s td <bags> <max bag> <n>`"));
                }
                let count = parse_count(fields[2], lineno)?;
                let max_bag = parse_count(fields[3], lineno)?;
                let n = parse_count(fields[4], lineno)?;
                bags = vec![None; count];
                header = Some((count, max_bag, n));
            }
            "b" => {
                let Some((count, max_bag, n)) = header else {
                    return Err(Error::parse(lineno, "bag before `s td` header"));
                };
                if fields.len() < 2 {
                    return Err(Error::parse(lineno, "bag line without id"));
                }
                let id = parse_vertex(fields[1], count, lineno)?;
                if bags[id].is_some() {
                    return Err(Error::parse(lineno, format!("bag {} defined twice", id + 1)));
                }
                let content = fields[2..]
                    .iter()
                    .map(|f| parse_vertex(f, n, lineno))
                    .collect::<Result<Vec<_>>>()?;
                if content.len() > max_bag {
                    return Err(Error::parse(
                        lineno,
                        format!("bag of size {} exceeds declared maximum {max_bag}", content.len()),
                    ));
                }
                bags[id] = Some(content);
            }
            _ => {
                let Some((count, _, _)) = header else {
                    return Err(Error::parse(lineno, "edge before `s td` header"));
                };
                if fields.len() != 2 {
                    return Err(Error::parse(lineno, "expected a tree edge `<a> <b>`"));
                }
                let a = parse_vertex(fields[0], count, lineno)?;
                let b = parse_vertex(fields[1], count, lineno)?;
                edges.push((a, b));
            }
        }
    }
    let (_, _, n) = header.ok_or_else(|| Error::parse(0, "missing `s td` header"))?;
    let bags = bags
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.ok_or_else(|| Error::parse(0, format!("bag {} is never defined", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    Ok((TreeDecomposition::new(bags, edges), n))
}

pub fn write_pace_td<W: Write>(td: &TreeDecomposition, n: usize, mut out: W) -> Result<()> {
    writeln!(out, "s td {} {} {}", td.len(), td.max_bag_size(), n)?;
    for (i, bag) in td.bags().iter().enumerate() {
        write!(out, "b {}", i + 1)?;
        for v in bag {
            write!(out, " {}", v + 1)?;
        }
        writeln!(out)?;
    }
    for &(a, b) in td.edges() {
        writeln!(out, "{} {}", a + 1, b + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "c example\ns td 4 3 5\nb 1 1 4\nb 2 1 2 4\nb 3 1 3 4\nb 4 2 5\n1 2\n1 3\n2 4\n";

    #[test]
    fn reads_header_and_bags() {
        let (td, n) = read_pace_td(SAMPLE.as_bytes()).unwrap();
        assert_eq!(n, 5);
        assert_eq!(td.len(), 4);
        assert_eq!(td.bag(1), &[0, 1, 3]);
        assert_eq!(td.edges(), &[(0, 1), (0, 2), (1, 3)]);
    }

    #[test]
    fn writes_what_it_reads() {
        let (td, n) = read_pace_td(SAMPLE.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_pace_td(&td, n, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), SAMPLE.replace("c example\n", ""));
    }

    #[test]
    fn rejects_out_of_range() {
        let bad = "s td 1 2 5\nb 1 1 6\n";
        assert!(matches!(read_pace_td(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(read_pace_td("s td 2 2\n".as_bytes()).is_err());
        assert!(read_pace_td("s td 2 2 3\nb 1 1\n1 3\n".as_bytes()).is_err());
        assert!(read_pace_td("b 1 1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(bags in proptest::collection::vec(proptest::collection::btree_set(0usize..12, 0..5), 1..8),
                      seed in any::<u64>()) {
            let count = bags.len();
            let edges: Vec<(usize, usize)> = (1..count).map(|i| ((seed as usize).wrapping_add(i * 7) % i, i)).collect();
            let td = TreeDecomposition::new(bags.into_iter().map(|b| b.into_iter().collect()).collect(), edges);
            let mut buf = Vec::new();
            write_pace_td(&td, 12, &mut buf).unwrap();
            let (back, n) = read_pace_td(buf.as_slice()).unwrap();
            prop_assert_eq!(n, 12);
            prop_assert_eq!(back, td);
        }
    }
}

//! Whitespace-separated text formats: edge lists and `id value` tables.
//!
//! Lines starting with `#` and blank lines are skipped. Fields past the ones
//! a format needs are ignored.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};

/// Maps arbitrary string ids to dense integers in order of first appearance.
#[derive(Debug, Clone, Default)]
pub struct NodeIndex {
    names: Vec<String>,
    lookup: HashMap<String, NodeId>,
}

impl NodeIndex {
    pub fn intern(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.lookup.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_owned());
        self.lookup.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<NodeId> {
        self.lookup.get(name).copied()
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: DirectedGraph,
    pub index: NodeIndex,
    /// Self-loop lines dropped.
    pub self_loops: usize,
    /// Repeated edges dropped.
    pub duplicates: usize,
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Iterates `(line_number, fields)` over data lines.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split_whitespace().collect()))
        }
    })
}

pub fn parse_edge_list(text: &str, path: &Path) -> Result<LoadedGraph> {
    let mut index = NodeIndex::default();
    let mut pairs = Vec::new();
    for (line, fields) in data_lines(text) {
        if fields.len() < 2 {
            return Err(Error::Format {
                path: path.to_owned(),
                line,
                msg: "expected `source target`".into(),
            });
        }
        let u = index.intern(fields[0]);
        let v = index.intern(fields[1]);
        pairs.push((u, v));
    }
    let mut graph = DirectedGraph::new(index.len());
    let (mut self_loops, mut duplicates) = (0, 0);
    for (u, v) in pairs {
        if u == v {
            self_loops += 1;
        } else if graph.has_edge(u, v) {
            duplicates += 1;
        } else {
            graph.add_edge(u, v)?;
        }
    }
    Ok(LoadedGraph {
        graph,
        index,
        self_loops,
        duplicates,
    })
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<LoadedGraph> {
    let path = path.as_ref();
    parse_edge_list(&read_to_string(path)?, path)
}

/// Writes `source target` lines in canonical (sorted) order, using `names`
/// for node ids when given.
pub fn write_edge_list<W: Write>(out: &mut W, g: &DirectedGraph, names: Option<&[String]>) -> std::io::Result<()> {
    for (u, v) in g.sorted_edges() {
        match names {
            Some(names) => writeln!(out, "{} {}", names[u], names[v])?,
            None => writeln!(out, "{u} {v}")?,
        }
    }
    Ok(())
}

/// Parses `id value` lines into pairs, keeping file order.
pub fn parse_pairs<'a>(text: &'a str, path: &Path) -> Result<Vec<(&'a str, &'a str)>> {
    data_lines(text)
        .map(|(line, fields)| {
            if fields.len() < 2 {
                Err(Error::Format {
                    path: path.to_owned(),
                    line,
                    msg: "expected `id value`".into(),
                })
            } else {
                Ok((fields[0], fields[1]))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_extra_fields_and_dupes() {
        let text = "# header\nalice bob 12 extra\n\nbob carol\nalice bob\ncarol carol\n";
        let g = parse_edge_list(text, Path::new("x")).unwrap();
        assert_eq!(g.index.names(), &["alice", "bob", "carol"]);
        assert_eq!(g.graph.sorted_edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(g.duplicates, 1);
        assert_eq!(g.self_loops, 1);
    }

    #[test]
    fn reports_line_number() {
        let err = parse_edge_list("a b\n# c\nlonely\n", Path::new("edges.txt")).unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn writes_sorted_with_names() {
        let g = DirectedGraph::from_edges(3, [(2, 0), (0, 1)]).unwrap();
        let mut buf = Vec::new();
        let names = vec!["x".to_string(), "y".into(), "z".into()];
        write_edge_list(&mut buf, &g, Some(&names)).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x y\nz x\n");
    }
}

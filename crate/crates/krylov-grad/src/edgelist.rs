//! Whitespace-separated `u v` edge lists with `#` comments.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use krylov_grad_core::operator::SparseGraphOperator;

use crate::error::{Error, Result};

/// Adjacency operator plus the original node id of each row.
#[derive(Debug, Clone)]
pub struct EdgeListGraph {
    pub graph: SparseGraphOperator,
    /// `ids[k]` is the file id of node `k`; ids are sorted ascending.
    pub ids: Vec<u64>,
}

impl EdgeListGraph {
    /// Compact index of a file id.
    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<EdgeListGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), path)
}

/// Parses an edge list. Node ids are compacted to `0..n` in ascending order,
/// duplicate edges collapse and self-loops are dropped (their endpoint still
/// counts as a node). `origin` is only used in error messages.
pub fn parse_edge_list<R: BufRead>(reader: R, origin: impl AsRef<Path>) -> Result<EdgeListGraph> {
    let origin = origin.as_ref();
    let mut raw = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                origin,
                lineno,
                format!("expected two node ids, found {} fields", fields.len()),
            ));
        }
        let parse = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| Error::parse(origin, lineno, format!("invalid node id {s:?}")))
        };
        raw.push((parse(fields[0])?, parse(fields[1])?));
    }
    if raw.is_empty() {
        return Err(Error::parse(origin, 0, "edge list has no edges (n = 0)"));
    }
    let mut index = BTreeMap::new();
    for &(u, v) in &raw {
        index.insert(u, 0usize);
        index.insert(v, 0usize);
    }
    for (k, slot) in index.values_mut().enumerate() {
        *slot = k;
    }
    let edges: Vec<(usize, usize)> = raw.iter().map(|(u, v)| (index[u], index[v])).collect();
    let graph = SparseGraphOperator::from_edges(index.len(), &edges)?;
    Ok(EdgeListGraph {
        graph,
        ids: index.into_keys().collect(),
    })
}

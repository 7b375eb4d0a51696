//! Undirected weighted graphs and the Biq Mac text format.
//!
//! A Biq Mac file starts with `n m` and is followed by `m` lines `i j w`
//! with 1-based node indices.

use std::collections::HashSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: i64,
}

/// Simple graph: 0-based nodes, `i < j` on every edge, no self-loops and no
/// duplicate edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<Edge>,
}

impl Graph {
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize, i64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (a, b, weight) in edges {
            if a == b {
                return Err(Error::Input(format!("self-loop on node {a}")));
            }
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::Input(format!("edge ({a}, {b}) out of range for {n_nodes} nodes")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((i, j)) {
                return Err(Error::Input(format!("duplicate edge ({i}, {j})")));
            }
            out.push(Edge { i, j, weight });
        }
        Ok(Graph { n_nodes, edges: out })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_weight(&self) -> i64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Erdős–Rényi graph with unit weights, each edge present with
    /// probability `density`.
    pub fn random(n_nodes: usize, density: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n_nodes {
            for j in i + 1..n_nodes {
                if rng.random_bool(density) {
                    edges.push(Edge { i, j, weight: 1 });
                }
            }
        }
        Graph { n_nodes, edges }
    }

    pub fn to_biqmac(&self) -> String {
        let mut s = format!("{} {}\n", self.n_nodes, self.edges.len());
        for e in &self.edges {
            s.push_str(&format!("{} {} {}\n", e.i + 1, e.j + 1, e.weight));
        }
        s
    }
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse().map_err(|_| Error::Parse { line, msg: format!("{what} '{tok}' is not a non-negative integer") })
}

/// Parses a Biq Mac max-cut instance. Blank lines and lines starting with
/// `#` are skipped.
pub fn parse_biqmac(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing 'n m' header".into() })?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(Error::Parse { line: hline, msg: format!("expected 'n m', got '{header}'") });
    }
    let n = parse_usize(toks[0], hline, "node count")?;
    let m = parse_usize(toks[1], hline, "edge count")?;

    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Parse { line, msg: format!("expected 'i j w', got '{l}'") });
        }
        let a = parse_usize(toks[0], line, "node index")?;
        let b = parse_usize(toks[1], line, "node index")?;
        let w: i64 = toks[2]
            .parse()
            .map_err(|_| Error::Parse { line, msg: format!("weight '{}' is not an integer", toks[2]) })?;
        if a == 0 || b == 0 || a > n || b > n {
            return Err(Error::Parse { line, msg: format!("node index out of range 1..={n}") });
        }
        if a == b {
            return Err(Error::Parse { line, msg: format!("self-loop on node {a}") });
        }
        let (i, j) = if a < b { (a - 1, b - 1) } else { (b - 1, a - 1) };
        if !seen.insert((i, j)) {
            return Err(Error::Parse { line, msg: format!("duplicate edge {a} {b}") });
        }
        edges.push(Edge { i, j, weight: w });
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: text.lines().count(),
            msg: format!("header announces {m} edges, found {}", edges.len()),
        });
    }
    Ok(Graph { n_nodes: n, edges })
}

pub fn load_biqmac(path: &Path) -> Result<Graph> {
    parse_biqmac(&std::fs::read_to_string(path)?)
}

/// Parses a best-known-optimum sidecar: `instance_name optimum` per line,
/// `#` comments allowed.
pub fn parse_best_known(text: &str) -> Result<Vec<(String, i64)>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(line, l)| {
            let toks: Vec<&str> = l.split_whitespace().collect();
            match toks.as_slice() {
                [name, value] => value
                    .parse()
                    .map(|v| (name.to_string(), v))
                    .map_err(|_| Error::Parse { line, msg: format!("optimum '{value}' is not an integer") }),
                _ => Err(Error::Parse { line, msg: format!("expected 'instance optimum', got '{l}'") }),
            }
        })
        .collect()
}

/// Looks up the optimum recorded for an instance, matching on the file stem
/// or full file name.
pub fn best_known_for(table: &[(String, i64)], instance: &Path) -> Option<i64> {
    let name = instance.file_name()?.to_string_lossy();
    let stem = instance.file_stem().map(|s| s.to_string_lossy());
    table
        .iter()
        .find(|(k, _)| *k == name || stem.as_deref() == Some(k.as_str()))
        .map(|(_, v)| *v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let g = parse_biqmac("3 2\n1 2 1\n1 3 1").unwrap();
        assert_eq!(g.n_nodes(), 3);
        assert_eq!(g.edges(), &[Edge { i: 0, j: 1, weight: 1 }, Edge { i: 0, j: 2, weight: 1 }]);
        let g = parse_biqmac("2 0").unwrap();
        assert_eq!(g.n_nodes(), 2);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_biqmac("2 1\n1 1 1") {
            Err(Error::Parse { line: 2, msg }) => assert!(msg.contains("self-loop")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_biqmac("3 1\n1 4 1"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_biqmac("3 2\n1 2 1\n1 x 1"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_biqmac("3 2\n1 2 1"), Err(Error::Parse { .. })));
        assert!(matches!(parse_biqmac("3 2\n1 2 1\n2 1 1"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_biqmac(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_biqmac("3\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn round_trip_and_generator() {
        let g = Graph::random(12, 0.5, 3);
        assert_eq!(parse_biqmac(&g.to_biqmac()).unwrap(), g);
        assert_eq!(Graph::random(12, 0.5, 3), g);
        assert!(g.edges().iter().all(|e| e.i < e.j && e.j < 12));
    }

    #[test]
    fn constructor_validation() {
        assert!(Graph::new(3, [(1, 1, 1)]).is_err());
        assert!(Graph::new(3, [(0, 3, 1)]).is_err());
        assert!(Graph::new(3, [(0, 1, 1), (1, 0, 1)]).is_err());
        let g = Graph::new(3, [(2, 0, 5)]).unwrap();
        assert_eq!(g.edges()[0], Edge { i: 0, j: 2, weight: 5 });
    }

    #[test]
    fn best_known_sidecar() {
        let t = parse_best_known("# source\ng05_60.0 536\n\ng05_60.1 532 # note\n").unwrap();
        assert_eq!(t, vec![("g05_60.0".to_string(), 536), ("g05_60.1".to_string(), 532)]);
        assert_eq!(best_known_for(&t, Path::new("/x/g05_60.1")), Some(532));
        assert_eq!(best_known_for(&t, Path::new("g05_60.0.txt")), Some(536));
        assert_eq!(best_known_for(&t, Path::new("g05_60.9")), None);
        assert!(parse_best_known("a b c").is_err());
        assert!(parse_best_known("a b").is_err());
    }
}

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Dense symmetric similarity matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl SimilarityMatrix {
    /// Builds a matrix from rows, symmetrizing by averaging `s[i][j]` and `s[j][i]`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::parse(
                    i + 1,
                    format!("expected {n} columns, found {}", row.len()),
                ));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::parse(i + 1, format!("non-finite similarity {v}")));
            }
            entries.extend(row);
        }
        let mut m = SimilarityMatrix { n, entries };
        m.symmetrize();
        Ok(m)
    }

    fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let a = self.entries[i * n + j];
                let b = self.entries[j * n + i];
                if a != b {
                    let avg = 0.5 * (a + b);
                    self.entries[i * n + j] = avg;
                    self.entries[j * n + i] = avg;
                }
            }
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn has_negative(&self) -> bool {
        self.entries.iter().any(|&v| v < 0.0)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }
}

/// Undirected graph with nonnegative edge weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); n];
        for (line, &(u, v, w)) in edges.iter().enumerate() {
            let line = line + 1;
            if u >= n || v >= n {
                return Err(Error::parse(
                    line,
                    format!("edge ({u},{v}) references a node outside 0..{n}"),
                ));
            }
            if u == v {
                return Err(Error::parse(line, format!("self-loop on node {u}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::parse(line, format!("invalid edge weight {w}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::parse(line, format!("duplicate edge ({u},{v})")));
            }
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
        }
        Ok(WeightedGraph {
            n,
            edges,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adjacency[u]
    }
}

/// Parses `n` lines of `n` comma-separated floats.
pub fn parse_similarity_csv(text: &str) -> Result<SimilarityMatrix> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                let field = field.trim();
                field
                    .parse::<f64>()
                    .map_err(|_| Error::parse(i + 1, format!("`{field}` is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(Error::parse(
                    i + 1,
                    format!("ragged row: expected {first} fields, found {}", row.len()),
                ));
            }
        }
        rows.push(row);
    }
    let m = SimilarityMatrix::from_rows(rows)?;
    if m.has_negative() {
        log::warn!("similarity matrix has negative entries; nonnegativity of f is not guaranteed");
    }
    Ok(m)
}

pub fn load_similarity_csv(path: impl AsRef<Path>) -> Result<SimilarityMatrix> {
    parse_similarity_csv(&fs::read_to_string(path)?)
}

/// Parses `u,v,w` lines with 0-based node ids. The node count is `max id + 1` unless
/// `nodes` overrides it.
pub fn parse_edge_list(text: &str, nodes: Option<usize>) -> Result<WeightedGraph> {
    let mut edges = Vec::new();
    let mut lines = Vec::new();
    let mut max_id = None::<usize>;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                i + 1,
                format!("expected `u,v,w`, found {} fields", fields.len()),
            ));
        }
        let id = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(i + 1, format!("`{s}` is not a node id")))
        };
        let (u, v) = (id(fields[0])?, id(fields[1])?);
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("`{}` is not a weight", fields[2])))?;
        if !w.is_finite() || w < 0.0 {
            return Err(Error::parse(i + 1, format!("invalid edge weight {w}")));
        }
        if u == v {
            return Err(Error::parse(i + 1, format!("self-loop on node {u}")));
        }
        if let Some(n) = nodes {
            if u >= n || v >= n {
                return Err(Error::parse(
                    i + 1,
                    format!("edge ({u},{v}) references a node outside 0..{n}"),
                ));
            }
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v, w));
        lines.push(i + 1);
    }
    let n = nodes.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    // Re-map validation errors to the source line they came from.
    WeightedGraph::new(n, edges).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line: lines[line - 1],
            message,
        },
        other => other,
    })
}

pub fn load_edge_list(path: impl AsRef<Path>, nodes: Option<usize>) -> Result<WeightedGraph> {
    parse_edge_list(&fs::read_to_string(path)?, nodes)
}

pub fn write_similarity_csv<W: Write>(m: &SimilarityMatrix, mut out: W) -> Result<()> {
    for i in 0..m.size() {
        let line: Vec<String> = m.row(i).iter().map(f64::to_string).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_edge_list<W: Write>(g: &WeightedGraph, mut out: W) -> Result<()> {
    for &(u, v, w) in g.edges() {
        writeln!(out, "{u},{v},{w}")?;
    }
    Ok(())
}

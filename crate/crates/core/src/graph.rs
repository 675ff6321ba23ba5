//! Undirected weighted graphs for max-cut instances: construction, seeded
//! generators, and the 1-based edge-list text format.
//!
//! In memory vertices are 0-based; the text format is 1-based with an
//! optional `n m` header, one `i j [w]` line per edge, and `#` comments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("edge ({i}, {j}) is invalid for a graph on {n} vertices")]
    BadEdge { i: usize, j: usize, n: usize },
    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },
    #[error("edge weight must be finite, got {0}")]
    NonFiniteWeight(f64),
}

/// Undirected weighted graph. Edges are stored once per unordered pair as
/// `(i, j, w)` with `i < j`, sorted lexicographically; unweighted instances
/// carry weight 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    /// Builds a graph from explicit edges, normalizing each pair to `i < j`
    /// and sorting. Rejects self-loops, duplicates, out-of-range indices,
    /// and non-finite weights.
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self, GraphError> {
        let mut normalized: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len());
        for (a, b, w) in edges {
            if a == b || a >= n || b >= n {
                return Err(GraphError::BadEdge {
                    i: a,
                    j: b,
                    n,
                });
            }
            if !w.is_finite() {
                return Err(GraphError::NonFiniteWeight(w));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            normalized.push((i, j, w));
        }
        normalized.sort_by_key(|&(i, j, _)| (i, j));
        for pair in normalized.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(GraphError::DuplicateEdge {
                    i: pair[0].0,
                    j: pair[0].1,
                });
            }
        }
        Ok(Self {
            n,
            edges: normalized,
        })
    }

    /// Builds an unweighted graph (all weights 1).
    pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        Self::new(n, edges.iter().map(|&(i, j)| (i, j, 1.0)).collect())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j, w)` with `i < j`, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Sum of all edge weights; equals `|E|` for unweighted graphs.
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|&(_, _, w)| w).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(i, j, _) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }
}

/// Parses the 1-based edge-list format.
///
/// A two-field first data line is taken as the `n m` header when `m` matches
/// the number of remaining data lines; otherwise it is read as an unweighted
/// edge and `n` is inferred from the largest index seen.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    // (line number, fields)
    let mut data: Vec<(usize, Vec<&str>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        data.push((idx + 1, line.split_whitespace().collect()));
    }
    if data.is_empty() {
        return Err(GraphError::Parse {
            line: 1,
            msg: "no edge or header lines found".into(),
        });
    }

    let mut header: Option<(usize, usize)> = None;
    let first = &data[0];
    if first.1.len() == 2 {
        if let (Ok(n), Ok(m)) = (
            first.1[0].parse::<usize>(),
            first.1[1].parse::<usize>(),
        ) {
            if m == data.len() - 1 {
                header = Some((n, m));
            }
        }
    }

    let body = if header.is_some() { &data[1..] } else { &data[..] };
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(body.len());
    let mut max_index = 0usize;
    for (line, fields) in body {
        let (line, fields) = (*line, fields);
        if fields.len() != 2 && fields.len() != 3 {
            return Err(GraphError::Parse {
                line,
                msg: format!("expected 'i j' or 'i j w', got {} fields", fields.len()),
            });
        }
        let i: usize = fields[0].parse().map_err(|_| GraphError::Parse {
            line,
            msg: format!("bad vertex index '{}'", fields[0]),
        })?;
        let j: usize = fields[1].parse().map_err(|_| GraphError::Parse {
            line,
            msg: format!("bad vertex index '{}'", fields[1]),
        })?;
        if i < 1 || j < 1 {
            return Err(GraphError::Parse {
                line,
                msg: "vertex indices are 1-based".into(),
            });
        }
        if i == j {
            return Err(GraphError::Parse {
                line,
                msg: format!("self-loop at vertex {i}"),
            });
        }
        let w: f64 = if fields.len() == 3 {
            let w = fields[2].parse().map_err(|_| GraphError::Parse {
                line,
                msg: format!("bad edge weight '{}'", fields[2]),
            })?;
            if !f64::is_finite(w) {
                return Err(GraphError::Parse {
                    line,
                    msg: "edge weight must be finite".into(),
                });
            }
            w
        } else {
            1.0
        };
        max_index = max_index.max(i).max(j);
        let (lo, hi) = (i.min(j) - 1, i.max(j) - 1);
        if edges.iter().any(|&(a, b, _)| (a, b) == (lo, hi)) {
            return Err(GraphError::Parse {
                line,
                msg: format!("duplicate edge ({}, {})", lo + 1, hi + 1),
            });
        }
        edges.push((lo, hi, w));
    }

    let n = match header {
        Some((n, _)) => {
            if max_index > n {
                return Err(GraphError::Parse {
                    line: data[0].0,
                    msg: format!("header declares n={n} but an edge references vertex {max_index}"),
                });
            }
            n
        }
        None => max_index,
    };
    Graph::new(n, edges)
}

/// Serializes to the canonical text form: `n m` header, then one 1-based
/// `i j w` line per edge in lexicographic order.
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = format!("{} {}", g.vertex_count(), g.edge_count());
    for &(i, j, w) in g.edges() {
        out.push_str(&format!("\n{} {} {}", i + 1, j + 1, w));
    }
    out
}

/// Erdős–Rényi G(n, p): each of the n(n-1)/2 pairs is included independently
/// with probability `p`. Deterministic for a fixed seed.
pub fn gen_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    if n < 1 {
        return Err(GraphError::InvalidArgument("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(GraphError::InvalidArgument(format!(
            "edge probability must lie in [0, 1], got {p}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    Graph::new(n, edges)
}

/// Random 3-regular simple graph via the pairing model: three stubs per
/// vertex, shuffled and paired, rejecting pairings with loops or repeated
/// edges. Deterministic for a fixed seed.
pub fn gen_random_cubic(n: usize, seed: u64) -> Result<Graph, GraphError> {
    if n < 4 || n % 2 != 0 {
        return Err(GraphError::InvalidArgument(format!(
            "a cubic graph needs an even vertex count of at least 4, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| [v, v, v]).collect();
    // Acceptance probability for valid pairings is bounded away from zero,
    // so this loop terminates quickly in practice.
    for _ in 0..100_000 {
        stubs.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(3 * n / 2);
        let mut ok = true;
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b {
                ok = false;
                break;
            }
            let e = (a.min(b), a.max(b));
            if edges.contains(&e) {
                ok = false;
                break;
            }
            edges.push(e);
        }
        if ok {
            return Graph::unweighted(n, &edges);
        }
    }
    Err(GraphError::InvalidArgument(
        "pairing model failed to produce a simple cubic graph".into(),
    ))
}

/// Hypercube graph Q_d: 2^d vertices, adjacent iff binary labels differ in
/// exactly one bit. Bipartite by bit parity, so max-cut equals d * 2^(d-1).
pub fn gen_hypercube(d: usize) -> Result<Graph, GraphError> {
    if d < 1 {
        return Err(GraphError::InvalidArgument(
            "hypercube dimension must be at least 1".into(),
        ));
    }
    if d > 25 {
        return Err(GraphError::InvalidArgument(format!(
            "hypercube dimension {d} is too large"
        )));
    }
    let n = 1usize << d;
    let mut edges = Vec::with_capacity(d * (n >> 1));
    for v in 0..n {
        for b in 0..d {
            let u = v ^ (1 << b);
            if u > v {
                edges.push((v, u));
            }
        }
    }
    Graph::unweighted(n, &edges)
}

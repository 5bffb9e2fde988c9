//! Team selection instances built from regular graphs.
//!
//! Each edge becomes a round and each vertex an expert whose error is
//! `1/√2` on its incident edges and zero elsewhere. The resulting Gram
//! matrix is `A + D` (adjacency plus degrees), and for the indicator `x` of
//! a vertex set `S`, `xᵀQx = 2·i(S) + d·|S|` where `i(S)` counts edges
//! inside `S`. Minimizing over `|S| = m` therefore finds the sparsest
//! `m`-subgraph, and the largest `m` whose optimum equals `d·m` is the
//! independence number.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::heuristics::best_team;
use crate::model::{sse_weights, ErrorMatrix, Team};
use crate::tabu::{tabu_search, TabuParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularGraph {
    n_vertices: usize,
    degree: usize,
    /// Edges `(u, v)` with `u < v`, lexicographically sorted.
    edges: Vec<(usize, usize)>,
}

impl RegularGraph {
    /// Validates and normalizes an edge list.
    pub fn new(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::InvalidGraph("no vertices".into()));
        }
        let mut list = Vec::new();
        for (a, b) in edges {
            if a >= n_vertices || b >= n_vertices {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at {a}")));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("duplicate edge {:?}", w[0])));
        }
        let mut degrees = vec![0usize; n_vertices];
        for &(a, b) in &list {
            degrees[a] += 1;
            degrees[b] += 1;
        }
        let degree = degrees[0];
        if let Some(v) = degrees.iter().position(|&d| d != degree) {
            return Err(Error::InvalidGraph(format!(
                "not regular: vertex {v} has degree {}, vertex 0 has {degree}",
                degrees[v]
            )));
        }
        Ok(Self { n_vertices, degree, edges: list })
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGraph("cycles need at least 3 vertices".into()));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    /// Vertex `i` joined to `i ± o (mod n)` for every offset `o`.
    pub fn circulant(n: usize, offsets: &[usize]) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for &o in offsets {
                if o == 0 || 2 * o > n {
                    return Err(Error::InvalidGraph(format!("offset {o} invalid for n = {n}")));
                }
                let j = (i + o) % n;
                if 2 * o < n || i < j {
                    edges.push((i, j));
                }
            }
        }
        Self::new(n, edges)
    }

    pub fn petersen() -> Self {
        let outer = (0..5).map(|i| (i, (i + 1) % 5));
        let spokes = (0..5).map(|i| (i, i + 5));
        let inner = (0..5).map(|i| (5 + i, 5 + (i + 2) % 5));
        Self::new(10, outer.chain(spokes).chain(inner).collect::<Vec<_>>()).expect("Petersen graph is 3-regular")
    }

    /// Parses `n d` followed by one 0-based `u v` pair per line.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse_pair = |line: usize, l: &str| -> Result<(usize, usize)> {
            let nums: Vec<&str> = l.split_whitespace().collect();
            let bad = || Error::Parse { line: line + 1, column: 1, message: format!("expected two integers, got {l:?}") };
            if nums.len() != 2 {
                return Err(bad());
            }
            Ok((nums[0].parse().map_err(|_| bad())?, nums[1].parse().map_err(|_| bad())?))
        };
        let (hl, header) = lines.next().ok_or_else(|| Error::InvalidGraph("empty edge list".into()))?;
        let (n, d) = parse_pair(hl, header)?;
        let edges = lines.map(|(i, l)| parse_pair(i, l)).collect::<Result<Vec<_>>>()?;
        let g = Self::new(n, edges)?;
        if g.degree != d {
            return Err(Error::InvalidGraph(format!("header says degree {d}, graph has {}", g.degree)));
        }
        Ok(g)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_edge_list(&fs::read_to_string(path)?)
    }

    /// Parses `cycle:N`, `complete:N`, `circulant:N:a,b,..` or `petersen`;
    /// anything else is read as an edge-list file.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let num = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::InvalidGraph(format!("bad number {s:?} in {spec:?}")))
        };
        match parts.as_slice() {
            ["petersen"] => Ok(Self::petersen()),
            ["cycle", n] => Self::cycle(num(n)?),
            ["complete", n] => Self::complete(num(n)?),
            ["circulant", n, offs] => {
                let offsets = offs.split(',').map(num).collect::<Result<Vec<_>>>()?;
                Self::circulant(num(n)?, &offsets)
            }
            _ => Self::load(spec),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// Number of edges with both endpoints in `set`.
    pub fn inner_edges(&self, set: &[usize]) -> usize {
        let mut inside = vec![false; self.n_vertices];
        for &v in set {
            inside[v] = true;
        }
        self.edges.iter().filter(|&&(a, b)| inside[a] && inside[b]).count()
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n_vertices, self.degree);
        for (a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }
}

/// Error matrix with one round per edge (lexicographic edge order).
pub fn instance_from_graph(g: &RegularGraph) -> Result<ErrorMatrix> {
    if g.edges.is_empty() {
        return Err(Error::InvalidGraph("graph has no edges".into()));
    }
    let k = g.edges.len();
    let mut rows = vec![vec![0.0; k]; g.n_vertices];
    for (l, &(a, b)) in g.edges.iter().enumerate() {
        rows[a][l] = std::f64::consts::FRAC_1_SQRT_2;
        rows[b][l] = std::f64::consts::FRAC_1_SQRT_2;
    }
    ErrorMatrix::from_rows(rows)
}

/// Solver used on reduced instances.
#[derive(Debug, Clone)]
pub enum ReductionSolver {
    Exact { cap: u128 },
    Tabu(TabuParams),
}

impl Default for ReductionSolver {
    fn default() -> Self {
        Self::Exact { cap: 10_000_000 }
    }
}

/// Minimum of `xᵀ(A + D)x` over indicators of `m`-subsets, with the subset.
#[derive(Debug, Clone, PartialEq)]
pub struct MinEdges {
    /// Through the team-selection objective: `m² · 2 · g(x/m)`.
    pub value: f64,
    /// `2·i(S) + d·m`, counted on the graph.
    pub exact: usize,
    pub members: Vec<usize>,
}

pub fn min_edges_value(g: &RegularGraph, m: usize, solver: &ReductionSolver) -> Result<MinEdges> {
    let errors = instance_from_graph(g)?;
    let profile = errors.to_profile();
    let team: Team = match solver {
        ReductionSolver::Exact { cap } => best_team(&profile, m, *cap)?,
        ReductionSolver::Tabu(params) => tabu_search(&profile, m, params)?,
    };
    let mut w = vec![0.0; g.n_vertices];
    for &i in &team.members {
        w[i] = 1.0 / m as f64;
    }
    let mm = (m * m) as f64;
    let value = mm * 2.0 * sse_weights(&errors, &w)?;
    let exact = 2 * g.inner_edges(&team.members) + g.degree * m;
    Ok(MinEdges { value, exact, members: team.members })
}

/// Largest `m` whose reduced optimum equals `d·m`.
pub fn independence_number(g: &RegularGraph, solver: &ReductionSolver) -> Result<usize> {
    let mut alpha = 0;
    for m in 1..=g.n_vertices {
        let r = min_edges_value(g, m, solver)?;
        let target = g.degree * m;
        let float_match = (r.value - target as f64).abs() <= 1e-6;
        if r.exact == target {
            debug_assert!(float_match, "float path {} disagrees with exact {}", r.value, r.exact);
            alpha = m;
        } else if float_match {
            return Err(Error::InvalidGraph(format!(
                "float path {} matches d·m but exact count is {}",
                r.value, r.exact
            )));
        }
    }
    Ok(alpha)
}

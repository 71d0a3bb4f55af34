//! Social-network ingestion and topology statistics.
//!
//! Edge lists follow the SNAP / KONECT text convention: one edge per line,
//! two integer vertex labels separated by whitespace, `#` or `%` comment
//! lines. Trailing columns (KONECT weights and timestamps) are ignored.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

/// An ingested social graph with dense vertex labels `0..node_count`.
///
/// Undirected edges are stored with `u < v`. Directed edges keep their
/// orientation (`u -> v` means `u` may invite `v`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    node_count: usize,
    directed: bool,
    edges: Vec<(u32, u32)>,
    /// Original dataset label of each dense vertex. Debug output only.
    labels: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    /// Mean edges per node, `2|E| / |V|`.
    pub mean_degree: f64,
    pub clustering: f64,
}

impl SocialGraph {
    /// Builds a graph from raw labelled edges, applying the same cleanup as
    /// [`parse_edge_list`].
    pub fn from_edges<I>(edges: I, directed: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        let raw: Vec<(u64, u64)> = edges.into_iter().filter(|(u, v)| u != v).collect();
        if raw.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let labels: Vec<u64> = raw
            .iter()
            .flat_map(|&(u, v)| [u, v])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let dense = |label: u64| labels.binary_search(&label).unwrap() as u32;

        let mut set = BTreeSet::new();
        for (u, v) in raw {
            let (a, b) = (dense(u), dense(v));
            if directed {
                set.insert((a, b));
            } else {
                set.insert((a.min(b), a.max(b)));
            }
        }
        Ok(Self {
            node_count: labels.len(),
            directed,
            edges: set.into_iter().collect(),
            labels,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn label(&self, vertex: u32) -> u64 {
        self.labels[vertex as usize]
    }

    /// Neighbors a vertex may invite: out-neighbors for directed graphs,
    /// all neighbors otherwise. Each list is sorted ascending.
    pub fn invite_adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            if !self.directed {
                adj[v as usize].push(u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Symmetrized adjacency, sorted and deduplicated.
    pub fn undirected_adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Serializes to the edge-list format using dense labels.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 12);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            node_count: self.node_count,
            edge_count: self.edges.len(),
            mean_degree: mean_degree(self),
            clustering: clustering_coefficient(self),
        }
    }
}

/// Parses a SNAP/KONECT style edge list.
pub fn parse_edge_list<R: BufRead>(input: R, directed: bool) -> Result<SocialGraph> {
    let mut raw = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let mut endpoint = || -> Result<u64> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected two vertex ids".into(),
            })?;
            tok.parse::<u64>().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("not a vertex id: {tok:?}"),
            })
        };
        let u = endpoint()?;
        let v = endpoint()?;
        raw.push((u, v));
    }
    SocialGraph::from_edges(raw, directed)
}

/// Mean of the local clustering coefficients; direction is ignored and
/// vertices of degree below two contribute zero.
pub fn clustering_coefficient(g: &SocialGraph) -> f64 {
    if g.node_count == 0 {
        return 0.0;
    }
    let adj = g.undirected_adjacency();
    let mut total = 0.0;
    for (v, nbrs) in adj.iter().enumerate() {
        let d = nbrs.len();
        if d < 2 {
            continue;
        }
        // Each closed pair is seen from both of its endpoints.
        let mut links = 0usize;
        for &u in nbrs {
            links += sorted_intersection_len(nbrs, &adj[u as usize], v as u32);
        }
        total += links as f64 / (d * (d - 1)) as f64;
    }
    total / g.node_count as f64
}

fn sorted_intersection_len(a: &[u32], b: &[u32], skip: u32) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if a[i] != skip {
                    n += 1;
                }
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// `2|E| / |V|`: every edge is counted at both endpoints. For directed
/// graphs this is the mean of in-degree plus out-degree.
pub fn mean_degree(g: &SocialGraph) -> f64 {
    if g.node_count == 0 {
        return 0.0;
    }
    2.0 * g.edges.len() as f64 / g.node_count as f64
}

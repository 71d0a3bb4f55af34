//! Shared fixtures for integration tests.
//!
//! The acceptance criteria are pinned to the hamsterster topology. When the
//! `IPERSEA_HAMSTERSTER` variable names an edge-list file, that file is used.
//! Otherwise a seeded stand-in with the same size is generated: 2426
//! vertices, exactly 16631 edges, clustering near 0.08, grown by preferential
//! attachment with triad formation. `IPERSEA_WIKIVOTE` plays the same role
//! for wiki-Vote (7115 vertices, 100762 undirected edges).

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;

use ipersea::graph::parse_edge_list;
use ipersea::SocialGraph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HAMSTERSTER_NODES: usize = 2426;
pub const HAMSTERSTER_EDGES: usize = 16631;
pub const WIKIVOTE_NODES: usize = 7115;
pub const WIKIVOTE_EDGES: usize = 100_762;

/// Preferential attachment with triad formation: each new vertex links to
/// `m` existing vertices, the first chosen by degree, each later one a
/// neighbor of the previous choice with probability `triad` and by degree
/// otherwise. Per-vertex `m` is spread so the edge total is exactly `edges`.
pub fn clustered_scale_free(n: usize, edges: usize, triad: f64, seed: u64) -> SocialGraph {
    let m0 = 8usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    let mut ends: Vec<u32> = Vec::with_capacity(2 * edges);
    let add = |adj: &mut Vec<BTreeSet<u32>>, ends: &mut Vec<u32>, u: u32, v: u32| {
        if u == v || !adj[u as usize].insert(v) {
            return false;
        }
        adj[v as usize].insert(u);
        ends.extend([u, v]);
        true
    };
    for i in 0..m0 as u32 {
        for j in i + 1..m0 as u32 {
            add(&mut adj, &mut ends, i, j);
        }
    }
    let budget = edges - m0 * (m0 - 1) / 2;
    let rest = n - m0;
    for k in 0..rest {
        let u = (m0 + k) as u32;
        let want = budget * (k + 1) / rest - budget * k / rest;
        let (mut added, mut last, mut tries) = (0, None::<u32>, 0);
        while added < want && tries < 10_000 {
            tries += 1;
            if let Some(l) = last.filter(|_| rng.gen_bool(triad)) {
                let cands: Vec<u32> = adj[l as usize]
                    .iter()
                    .copied()
                    .filter(|&w| w != u && !adj[u as usize].contains(&w))
                    .collect();
                if let Some(&w) = cands.choose(&mut rng) {
                    if add(&mut adj, &mut ends, u, w) {
                        added += 1;
                        last = Some(w);
                        continue;
                    }
                }
            }
            let w = ends[rng.gen_range(0..ends.len())];
            if add(&mut adj, &mut ends, u, w) {
                added += 1;
                last = Some(w);
            }
        }
    }
    let list = adj
        .iter()
        .enumerate()
        .flat_map(|(u, s)| s.iter().map(move |&v| (u as u64, v as u64)))
        .filter(|(u, v)| u < v);
    SocialGraph::from_edges(list, false).expect("non-empty")
}

fn from_env(var: &str) -> Option<SocialGraph> {
    let path = std::env::var(var).ok()?;
    let file = File::open(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    Some(parse_edge_list(BufReader::new(file), false).expect("valid edge list"))
}

/// The hamsterster graph, or its stand-in. The flag is `true` for the real
/// dataset.
pub fn hamsterster() -> (SocialGraph, bool) {
    match from_env("IPERSEA_HAMSTERSTER") {
        Some(g) => (g, true),
        None => (surrogate_hamsterster(), false),
    }
}

pub fn wiki_vote() -> (SocialGraph, bool) {
    match from_env("IPERSEA_WIKIVOTE") {
        Some(g) => (g, true),
        None => (
            clustered_scale_free(WIKIVOTE_NODES, WIKIVOTE_EDGES, 0.3, 7115),
            false,
        ),
    }
}

/// Small connected graph for property tests: a ring plus `extra` random
/// chords.
pub fn small_graph(n: usize, extra: usize, seed: u64) -> SocialGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ring = (0..n as u64).map(|i| (i, (i + 1) % n as u64));
    let chords: Vec<(u64, u64)> = (0..extra)
        .map(|_| (rng.gen_range(0..n as u64), rng.gen_range(0..n as u64)))
        .filter(|(a, b)| a != b)
        .collect();
    SocialGraph::from_edges(ring.chain(chords), false).expect("non-empty")
}

pub fn surrogate_hamsterster() -> SocialGraph {
    clustered_scale_free(HAMSTERSTER_NODES, HAMSTERSTER_EDGES, 0.23, 2426)
}

pub fn label(name: &str, real: bool) -> String {
    if real {
        name.to_string()
    } else {
        format!("{name}-surrogate")
    }
}

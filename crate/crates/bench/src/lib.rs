//! Fixtures shared by the benchmarks.

use ipersea::{Result, SocialGraph};

/// Deterministic sparse graph: a ring plus two chord families, so every
/// vertex has degree about six and BFS reaches everything.
pub fn chorded_ring(n: u64) -> Result<SocialGraph> {
    let edges = (0..n).flat_map(|i| {
        [
            (i, (i + 1) % n),
            (i, (i * 7 + 3) % n),
            (i, (i * 31 + 11) % n),
        ]
    });
    SocialGraph::from_edges(edges, false)
}

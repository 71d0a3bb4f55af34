//! Oracle tests for edge-list ingestion, ID allocation, certificates and
//! replica placement.

mod common;

use std::io::Cursor;

use ipersea::graph::{clustering_coefficient, mean_degree, parse_edge_list};
use ipersea::idspace::{
    allocate_bootstrap_chunks, build_network, build_network_from, carve_subchunk, replica_keys,
    subchunk_size, verify_certificate_chain, Allocation, BootstrapTree, Chunk, IdCertificate,
    IdSpace,
};
use ipersea::{Error, NodeId, NodeIdx, SocialGraph};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn parse(text: &str, directed: bool) -> SocialGraph {
    parse_edge_list(Cursor::new(text), directed).unwrap()
}

#[test]
fn path_graph_counts() {
    let g = parse("0 1\n1 2", false);
    assert_eq!((g.node_count(), g.edge_count()), (3, 2));
}

#[test]
fn duplicates_and_self_loops_dropped() {
    let g = parse("0 1\n1 0\n0 0", false);
    assert_eq!((g.node_count(), g.edge_count()), (2, 1));
}

#[test]
fn comments_and_trailing_columns() {
    let g = parse(
        "% konect header\n# snap header\n\n10 20 1 1234\n20 30\t5\n",
        false,
    );
    assert_eq!((g.node_count(), g.edge_count()), (3, 2));
}

#[test]
fn malformed_lines_report_their_number() {
    match parse_edge_list(Cursor::new("0 1\n2 x\n"), false) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        parse_edge_list(Cursor::new("# only\n"), false),
        Err(Error::EmptyGraph)
    ));
}

#[test]
fn directed_keeps_both_orientations() {
    let g = parse("0 1\n1 0\n1 2", true);
    assert_eq!(g.edge_count(), 3);
    let u = parse("0 1\n1 0\n1 2", false);
    assert_eq!(u.edge_count(), 2);
}

#[test]
fn clustering_and_degree_oracles() {
    let tri = parse("0 1\n1 2\n2 0", false);
    assert_eq!(clustering_coefficient(&tri), 1.0);
    assert_eq!(mean_degree(&tri), 2.0);
    assert_eq!(clustering_coefficient(&parse("0 1\n1 2", false)), 0.0);
}

#[test]
fn hamsterster_size_and_degree() {
    let (g, real) = common::hamsterster();
    assert_eq!(g.node_count(), common::HAMSTERSTER_NODES);
    assert_eq!(g.edge_count(), common::HAMSTERSTER_EDGES);
    assert!((mean_degree(&g) - 13.711).abs() < 0.001);
    if real {
        assert!((clustering_coefficient(&g) - 0.08).abs() <= 0.01);
    }
}

#[test]
fn round_trip_through_text() {
    let g = common::small_graph(50, 80, 3);
    let again = parse(&g.to_edge_list(), false);
    assert_eq!(again.edge_count(), g.edge_count());
    assert_eq!(again.node_count(), g.node_count());
}

#[test]
fn bootstrap_chunk_oracles() {
    let c = allocate_bootstrap_chunks(IdSpace::new(4).unwrap(), 2).unwrap();
    assert_eq!(
        c,
        vec![Chunk { start: 0, len: 8 }, Chunk { start: 8, len: 8 }]
    );
    let c = allocate_bootstrap_chunks(IdSpace::new(31).unwrap(), 7).unwrap();
    assert_eq!(c[1].start, 306_783_378);
    assert_eq!(c.last().unwrap().end(), 1 << 31);
    let c = allocate_bootstrap_chunks(IdSpace::new(4).unwrap(), 1).unwrap();
    assert_eq!(c, vec![Chunk { start: 0, len: 16 }]);
}

/// Largest `s` with `s^den <= len^num`, by bisection over big integers.
fn exact_root(len: u64, num: u32, den: u32) -> u64 {
    let bound = BigUint::from(len).pow(num);
    let (mut lo, mut hi) = (1u64, len);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if BigUint::from(mid).pow(den) <= bound {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

#[test]
fn subchunk_size_matches_exact_root() {
    let exact = exact_root(1 << 28, 13, 20);
    let s = subchunk_size(1 << 28, 0.65);
    assert!(s.abs_diff(exact) <= 1, "{s} vs {exact}");
    assert!(s.abs_diff(301_124) <= 1);
    assert_eq!(subchunk_size(16, 0.65), 6);
    assert_eq!(subchunk_size(2, 0.65), 1);
    assert_eq!(subchunk_size(2, 0.1), 1);
}

proptest! {
    #[test]
    fn subchunk_size_brackets_exact_root(len in 2u64..(1 << 40), num in 1u32..20) {
        let cf = num as f64 / 20.0;
        let exact = exact_root(len, num, 20);
        prop_assert!(subchunk_size(len, cf).abs_diff(exact) <= 1);
    }
}

#[test]
fn sequential_carving() {
    let parent = Allocation::new(Chunk { start: 0, len: 16 });
    let (first, rest) = carve_subchunk(&parent, 0.65).unwrap();
    assert_eq!(
        (first.owner(), first),
        (NodeId(1), Chunk { start: 1, len: 6 })
    );
    let (second, rest) = carve_subchunk(&rest, 0.65).unwrap();
    assert_eq!(second, Chunk { start: 7, len: 6 });
    assert!(matches!(
        carve_subchunk(&rest, 0.65),
        Err(Error::AllocationExhausted { .. })
    ));
}

#[test]
fn certificate_oracles() {
    let root = IdCertificate::bootstrap(Chunk { start: 0, len: 16 });
    assert!(verify_certificate_chain(&root));
    let forged = IdCertificate {
        subject: NodeId(20),
        chunk: Chunk { start: 20, len: 4 },
        issuer: Some(NodeId(0)),
        parent: Some(root.clone().into()),
    };
    assert!(!verify_certificate_chain(&forged));
    let covering_issuer = IdCertificate {
        subject: NodeId(0),
        chunk: Chunk { start: 0, len: 4 },
        issuer: Some(NodeId(0)),
        parent: Some(root.into()),
    };
    assert!(!verify_certificate_chain(&covering_issuer));
}

#[test]
fn forced_bfs_on_a_path() {
    let g = parse("0 1\n1 2", false);
    let (tree, report) = build_network_from(&g, &[0], IdSpace::new(31).unwrap(), 0.65).unwrap();
    assert_eq!(report.admitted, 3);
    let by_vertex = |v: u32| tree.nodes().find(|(_, n)| n.vertex == Some(v)).unwrap().0;
    assert_eq!(tree.parent(by_vertex(1)), Some(by_vertex(0)));
    assert_eq!(tree.parent(by_vertex(2)), Some(by_vertex(1)));
}

#[test]
fn hamsterster_build_admits_nearly_everyone() {
    let (g, _) = common::hamsterster();
    let space = IdSpace::new(31).unwrap();
    let (tree, report) =
        build_network(&g, 7, space, 0.65, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert!(report.admitted * 100 >= 99 * g.node_count(), "{report:?}");
    assert_eq!(tree.roots().len(), 7);
    assert!(tree.nodes().all(|(i, _)| tree.verify(i)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn builds_are_valid(n in 10usize..300, extra in 0usize..600, boot in 1usize..8, seed: u64) {
        let g = common::small_graph(n, extra, seed);
        let space = IdSpace::new(31).unwrap();
        let (tree, report) = build_network(&g, boot.min(n), space, 0.65, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(tree.roots().len(), boot.min(n));
        prop_assert_eq!(report.admitted + report.dropped, g.node_count());
        for (i, node) in tree.nodes() {
            prop_assert!(tree.verify(i));
            if let Some(p) = node.parent {
                prop_assert!(tree.node(p).cert.chunk.contains_chunk(&node.cert.chunk));
            }
        }
    }

    #[test]
    fn sibling_chunks_are_disjoint(children in 1usize..40, bits in 12u32..40) {
        let mut tree = BootstrapTree::new(IdSpace::new(bits).unwrap(), 1, 0.65).unwrap();
        let mut got = Vec::new();
        for _ in 0..children {
            match tree.admit_child(NodeIdx(0), true, None) {
                Ok(c) => got.push(tree.node(c).cert.chunk),
                Err(_) => break,
            }
        }
        for (i, a) in got.iter().enumerate() {
            for b in &got[i + 1..] {
                prop_assert!(!a.overlaps(b));
            }
        }
    }
}

#[test]
fn replica_key_oracles() {
    let s4 = IdSpace::new(4).unwrap();
    let k: Vec<u64> = replica_keys(NodeId(0), 4, s4)
        .unwrap()
        .iter()
        .map(|k| k.0)
        .collect();
    assert_eq!(k, vec![0, 4, 8, 12]);
    let s31 = IdSpace::new(31).unwrap();
    let k = replica_keys(NodeId(5), 7, s31).unwrap();
    assert_eq!(
        &k[..3],
        &[NodeId(5), NodeId(306_783_383), NodeId(613_566_761)]
    );
    assert_eq!(replica_keys(NodeId(9), 1, s31).unwrap(), vec![NodeId(9)]);
    assert!(replica_keys(NodeId(9), 0, s31).is_err());
}

proptest! {
    #[test]
    fn replica_gaps_differ_by_at_most_one(key in 0u64..(1 << 31), r in 1usize..64) {
        let space = IdSpace::new(31).unwrap();
        let keys = replica_keys(NodeId(key), r, space).unwrap();
        let gaps: Vec<u64> = (0..r)
            .map(|i| keys[(i + 1) % r].0.wrapping_sub(keys[i].0) & (space.size() - 1))
            .map(|g| if r == 1 { space.size() } else { g })
            .collect();
        prop_assert!(gaps.iter().max().unwrap() - gaps.iter().min().unwrap() <= 1);
        prop_assert_eq!(gaps.iter().sum::<u64>(), space.size());
    }
}

//! The DHT view of a built network: routing tables for honest nodes, the
//! attacker directory for Sybils, and how each kind of node answers queries.

use std::collections::HashMap;
use std::ops::Range;

use rand::Rng;
use rayon::prelude::*;

use crate::adversary::{AttackerDirectory, ForgeMode};
use crate::dht::distance::{nearest_ranked, slice_in, xor_nearest, LookupKey};
use crate::dht::routing::{PeerRecord, RoutingTable};
use crate::dht::storage::{Storage, Value};
use crate::error::{Error, Result};
use crate::idspace::{BootstrapTree, IdSpace, NodeId, NodeIdx};
use crate::rng;

/// How a random bucket entry is drawn from the nodes in the bucket's range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillStrategy {
    /// Uniformly among the nodes in range.
    #[default]
    Uniform,
    /// The XOR-closest node to a uniform random point in range, so a node
    /// is drawn in proportion to the ID space it is closest to.
    ClosestToPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlayParams {
    /// Bucket capacity.
    pub k: usize,
    /// Random samples drawn per bucket after the region-stratified picks.
    pub fill_attempts: usize,
    /// Replication factor `R`, which also fixes the virtual regions.
    pub replication: usize,
    pub fill: FillStrategy,
}

impl Default for OverlayParams {
    fn default() -> Self {
        Self {
            k: 7,
            fill_attempts: 14,
            replication: 7,
            fill: FillStrategy::Uniform,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Overlay {
    space: IdSpace,
    replication: usize,
    ids: Vec<NodeId>,
    malicious: Vec<bool>,
    index: HashMap<u64, NodeIdx>,
    sorted: Vec<u64>,
    tables: Vec<Option<RoutingTable>>,
    attackers: AttackerDirectory,
}

impl Overlay {
    /// Fills a routing table for every honest node of `tree`.
    ///
    /// Each bucket gets, in order: one sampled node from every virtual
    /// region the bucket range overlaps, the node's tree neighbors, then up
    /// to `fill_attempts` samples over the whole bucket range. Samples are
    /// drawn per [`FillStrategy`].
    pub fn build(
        tree: &BootstrapTree,
        params: OverlayParams,
        forge: ForgeMode,
        seed: u64,
    ) -> Result<Self> {
        if params.k == 0 || params.replication == 0 {
            return Err(Error::InvalidArgument(
                "bucket size and replication must be positive".into(),
            ));
        }
        let space = tree.space();
        let ids: Vec<NodeId> = tree.nodes().map(|(_, n)| n.id).collect();
        let malicious: Vec<bool> = tree.nodes().map(|(_, n)| !n.honest).collect();
        let index: HashMap<u64, NodeIdx> = tree.nodes().map(|(i, n)| (n.id.0, i)).collect();
        let mut sorted: Vec<u64> = ids.iter().map(|id| id.0).collect();
        sorted.sort_unstable();
        let regions: Vec<Range<u64>> = (0..params.replication)
            .map(|r| space.region(r, params.replication))
            .collect();

        let tables = (0..tree.len())
            .into_par_iter()
            .map(|i| {
                let idx = NodeIdx(i as u32);
                tree.is_honest(idx).then(|| {
                    let mut rng = rng::stream(seed, i as u64);
                    fill_table(tree, idx, &sorted, &regions, params, &mut rng)
                })
            })
            .collect();

        let attackers = AttackerDirectory::new(
            ids.iter()
                .zip(&malicious)
                .filter(|(_, &m)| m)
                .map(|(&id, _)| id),
            space.bits(),
            forge,
        );
        Ok(Self {
            space,
            replication: params.replication,
            ids,
            malicious,
            index,
            sorted,
            tables,
            attackers,
        })
    }

    pub fn space(&self) -> IdSpace {
        self.space
    }

    pub fn replication(&self) -> usize {
        self.replication
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, idx: NodeIdx) -> NodeId {
        self.ids[idx.index()]
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn resolve(&self, id: NodeId) -> Option<NodeIdx> {
        self.index.get(&id.0).copied()
    }

    pub fn is_malicious(&self, idx: NodeIdx) -> bool {
        self.malicious[idx.index()]
    }

    pub fn table(&self, idx: NodeIdx) -> Option<&RoutingTable> {
        self.tables.get(idx.index()).and_then(Option::as_ref)
    }

    pub fn attackers(&self) -> &AttackerDirectory {
        &self.attackers
    }

    /// Lookup target for replica key `key`, scoped to the region holding it.
    pub fn replica_target(&self, key: NodeId) -> LookupKey {
        let r = self.space.region_of(key.0, self.replication);
        LookupKey::in_region(key, self.space.region(r, self.replication))
    }

    /// How `node` answers a routing query.
    pub fn respond_route(&self, node: NodeIdx, target: &LookupKey, beta: usize) -> Vec<PeerRecord> {
        match self.table(node) {
            Some(table) => table.closest_peers(target, beta),
            None => self.attackers.route_response(target, beta),
        }
    }

    /// How `node` answers `get(key)`.
    pub fn respond_value(&self, storage: &Storage, node: NodeIdx, key: u64) -> Option<Value> {
        if self.is_malicious(node) {
            Some(self.attackers.value_response(self.id(node), key))
        } else {
            storage.get(node, key)
        }
    }

    /// Brute-force owner: the best node under [`LookupKey::rank`], so the
    /// XOR-closest node in the target region, or the XOR-closest node
    /// overall when the region is empty.
    pub fn owner_of(&self, target: &LookupKey) -> Option<NodeIdx> {
        self.owner_among(target, |_| true)
    }

    /// Owner among the nodes `keep` admits. Candidates are checked in rank
    /// order, widening the window until one passes.
    pub fn owner_among<F: Fn(NodeIdx) -> bool>(
        &self,
        target: &LookupKey,
        keep: F,
    ) -> Option<NodeIdx> {
        let mut window = 8;
        loop {
            let ranked = nearest_ranked(&self.sorted, target, window, self.space.bits());
            let hit = ranked.iter().map(|&id| self.index[&id]).find(|&i| keep(i));
            if hit.is_some() || ranked.len() < window {
                return hit;
            }
            window *= 4;
        }
    }
}

fn fill_table<R: Rng>(
    tree: &BootstrapTree,
    owner: NodeIdx,
    sorted: &[u64],
    regions: &[Range<u64>],
    params: OverlayParams,
    rng: &mut R,
) -> RoutingTable {
    let space = tree.space();
    let bits = space.bits();
    let mut table = RoutingTable::new(tree.id(owner), space, params.k);
    let mut nearest = Vec::with_capacity(1);
    let mut sample = |table: &mut RoutingTable, range: &Range<u64>, rng: &mut R| {
        let slice = slice_in(sorted, range);
        if slice.is_empty() {
            return;
        }
        let pick = match params.fill {
            FillStrategy::Uniform => slice[rng.gen_range(0..slice.len())],
            FillStrategy::ClosestToPoint => {
                nearest.clear();
                xor_nearest(slice, rng.gen_range(range.clone()), 1, bits, &mut nearest);
                nearest[0]
            }
        };
        let _ = table.insert(PeerRecord::new(NodeId(pick)));
    };

    for b in 0..table.bucket_count() {
        let range = table.bucket_range(b);
        for region in regions {
            let overlap = range.start.max(region.start)..range.end.min(region.end);
            if overlap.start < overlap.end {
                sample(&mut table, &overlap, rng);
            }
        }
    }

    let node = tree.node(owner);
    let neighbors = node.parent.into_iter().chain(node.children.iter().copied());
    let peers: Vec<NodeIdx> = if node.parent.is_none() {
        neighbors
            .chain(tree.roots().iter().copied().filter(|&r| r != owner))
            .collect()
    } else {
        neighbors.collect()
    };
    for p in peers {
        let _ = table.insert(PeerRecord::new(tree.id(p)));
    }

    for b in 0..table.bucket_count() {
        let range = table.bucket_range(b);
        for _ in 0..params.fill_attempts {
            if table.is_full(b) {
                break;
            }
            sample(&mut table, &range, rng);
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn tree(n: usize, bits: u32) -> BootstrapTree {
        let mut tree = BootstrapTree::new(IdSpace::new(bits).unwrap(), 7, 0.65).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        while tree.len() < n {
            let p = NodeIdx(rng.gen_range(0..tree.len() as u32));
            let _ = tree.admit_child(p, true, None);
        }
        tree
    }

    #[test]
    fn tables_cover_every_nonempty_region_overlap() {
        let t = tree(200, 31);
        let params = OverlayParams::default();
        let o = Overlay::build(&t, params, ForgeMode::Colluding, 5).unwrap();
        let mut sorted: Vec<u64> = o.ids().iter().map(|i| i.0).collect();
        sorted.sort_unstable();
        for (idx, _) in t.nodes() {
            let table = o.table(idx).unwrap();
            for b in 0..table.bucket_count() {
                let range = table.bucket_range(b);
                for r in 0..params.replication {
                    let region = o.space().region(r, params.replication);
                    let overlap = range.start.max(region.start)..range.end.min(region.end);
                    if overlap.start < overlap.end && !slice_in(&sorted, &overlap).is_empty() {
                        assert!(table.bucket(b).iter().any(|p| overlap.contains(&p.id.0)));
                    }
                }
            }
        }
    }

    #[test]
    fn parent_is_known() {
        let t = tree(100, 31);
        let o = Overlay::build(&t, OverlayParams::default(), ForgeMode::Colluding, 1).unwrap();
        for (idx, n) in t.nodes() {
            if let Some(p) = n.parent {
                assert!(o.table(idx).unwrap().contains(t.id(p)), "node {idx:?}");
            }
        }
    }

    #[test]
    fn deterministic_fill() {
        let t = tree(120, 20);
        let a = Overlay::build(&t, OverlayParams::default(), ForgeMode::Colluding, 8).unwrap();
        let b = Overlay::build(&t, OverlayParams::default(), ForgeMode::Colluding, 8).unwrap();
        for (idx, _) in t.nodes() {
            let pa: Vec<_> = a.table(idx).unwrap().peers().copied().collect();
            let pb: Vec<_> = b.table(idx).unwrap().peers().copied().collect();
            assert_eq!(pa, pb);
        }
    }
}

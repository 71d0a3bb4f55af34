use std::ops::Range;

use crate::dht::distance::LookupKey;
use crate::error::{Error, Result};
use crate::idspace::{IdSpace, NodeId};
use crate::rng::mix64;

/// Routing-table entry. Address and key are opaque placeholders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeerRecord {
    pub id: NodeId,
    pub address: u64,
    pub public_key: u64,
}

impl PeerRecord {
    pub fn new(id: NodeId) -> Self {
        Self {
            id,
            address: mix64(id.0),
            public_key: mix64(!id.0),
        }
    }
}

/// `b` k-buckets. Bucket `i` (0-based) holds peers that share exactly the
/// first `i` bits with the owner and differ at the next one.
#[derive(Debug, Clone)]
pub struct RoutingTable {
    owner: NodeId,
    space: IdSpace,
    k: usize,
    buckets: Vec<Vec<PeerRecord>>,
}

impl RoutingTable {
    pub fn new(owner: NodeId, space: IdSpace, k: usize) -> Self {
        Self {
            owner,
            space,
            k,
            buckets: vec![Vec::new(); space.bits() as usize],
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Shared-prefix length between `id` and the owner; `None` for the owner.
    pub fn bucket_index(&self, id: NodeId) -> Option<usize> {
        let x = self.owner.0 ^ id.0;
        (x != 0).then(|| (x.leading_zeros() - (64 - self.space.bits())) as usize)
    }

    /// ID range covered by bucket `i`.
    pub fn bucket_range(&self, i: usize) -> Range<u64> {
        let width = self.space.bits() as usize - i - 1;
        let start = ((self.owner.0 >> width) ^ 1) << width;
        start..start + (1u64 << width)
    }

    pub fn bucket(&self, i: usize) -> &[PeerRecord] {
        &self.buckets[i]
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_full(&self, i: usize) -> bool {
        self.buckets[i].len() >= self.k
    }

    pub fn len(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn peers(&self) -> impl Iterator<Item = &PeerRecord> {
        self.buckets.iter().flatten()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.bucket_index(id)
            .is_some_and(|i| self.buckets[i].iter().any(|p| p.id == id))
    }

    /// Inserts `peer` into its bucket. Returns `Ok(false)` when the peer is
    /// already present or the bucket is full; full buckets keep their
    /// existing entries.
    pub fn insert(&mut self, peer: PeerRecord) -> Result<bool> {
        if !self.space.contains(peer.id.0) {
            return Err(Error::InvalidArgument(format!(
                "peer {} outside the id space",
                peer.id
            )));
        }
        let i = self.bucket_index(peer.id).ok_or_else(|| {
            Error::InvalidArgument("a node cannot insert itself into its own table".into())
        })?;
        let bucket = &mut self.buckets[i];
        if bucket.len() >= self.k || bucket.iter().any(|p| p.id == peer.id) {
            return Ok(false);
        }
        bucket.push(peer);
        Ok(true)
    }

    /// Up to `count` entries sorted by [`LookupKey::rank`].
    pub fn closest_peers(&self, target: &LookupKey, count: usize) -> Vec<PeerRecord> {
        self.closest_filtered(target, count, |_| true)
    }

    pub fn closest_filtered<F>(&self, target: &LookupKey, count: usize, keep: F) -> Vec<PeerRecord>
    where
        F: Fn(NodeId) -> bool,
    {
        let mut all: Vec<PeerRecord> = self.peers().copied().filter(|p| keep(p.id)).collect();
        all.sort_unstable_by_key(|p| target.rank(p.id));
        all.truncate(count);
        all
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn table(owner: u64, bits: u32, k: usize) -> RoutingTable {
        RoutingTable::new(NodeId(owner), IdSpace::new(bits).unwrap(), k)
    }

    #[test]
    fn insert_and_self() {
        let mut t = table(5, 8, 7);
        assert!(t.insert(PeerRecord::new(NodeId(200))).unwrap());
        assert_eq!(t.len(), 1);
        assert!(!t.insert(PeerRecord::new(NodeId(200))).unwrap());
        assert!(t.insert(PeerRecord::new(NodeId(5))).is_err());
        assert!(t.insert(PeerRecord::new(NodeId(256))).is_err());
    }

    #[test]
    fn overflow_keeps_first_k() {
        // Owner 0 in an 8-bit space: ids 128..=135 all land in bucket 0.
        let mut t = table(0, 8, 7);
        for id in 128..136 {
            t.insert(PeerRecord::new(NodeId(id))).unwrap();
        }
        let kept: Vec<u64> = t.bucket(0).iter().map(|p| p.id.0).collect();
        assert_eq!(kept, (128..135).collect::<Vec<_>>());
    }

    #[test]
    fn closest_examples() {
        let mut t = table(100, 8, 7);
        assert!(t.closest_peers(&LookupKey::exact(NodeId(9)), 3).is_empty());
        for id in [1, 2, 8] {
            t.insert(PeerRecord::new(NodeId(id))).unwrap();
        }
        let got: Vec<u64> = t
            .closest_peers(&LookupKey::exact(NodeId(9)), 2)
            .iter()
            .map(|p| p.id.0)
            .collect();
        assert_eq!(got, vec![8, 1]);
    }

    #[test]
    fn bucket_ranges() {
        let t = table(0b1010_0000, 8, 7);
        assert_eq!(t.bucket_range(0), 0..128);
        assert_eq!(t.bucket_range(1), 0b1100_0000..0b1_0000_0000);
        assert_eq!(t.bucket_range(7), 0b1010_0001..0b1010_0010);
    }

    proptest! {
        #[test]
        fn bucket_prefix_invariant(owner in 0u64..1024, ids in prop::collection::vec(0u64..1024, 0..300)) {
            let mut t = table(owner, 10, 4);
            for id in ids {
                let _ = t.insert(PeerRecord::new(NodeId(id)));
            }
            for i in 0..t.bucket_count() {
                prop_assert!(t.bucket(i).len() <= 4);
                for p in t.bucket(i) {
                    let shared = ((owner ^ p.id.0).leading_zeros() - 54) as usize;
                    prop_assert_eq!(shared, i);
                    prop_assert!(t.bucket_range(i).contains(&p.id.0));
                }
            }
        }

        #[test]
        fn closest_is_prefix_of_brute_sort(owner in 0u64..1024, ids in prop::collection::vec(0u64..1024, 0..200),
                                           key in 0u64..1024, beta in 1usize..12) {
            let mut t = table(owner, 10, 7);
            for id in ids {
                let _ = t.insert(PeerRecord::new(NodeId(id)));
            }
            let mut all: Vec<u64> = t.peers().map(|p| p.id.0).collect();
            all.sort_by_key(|&x| (x ^ key, x));
            all.truncate(beta);
            let got: Vec<u64> = t.closest_peers(&LookupKey::exact(NodeId(key)), beta)
                .iter().map(|p| p.id.0).collect();
            prop_assert_eq!(got, all);
        }
    }
}

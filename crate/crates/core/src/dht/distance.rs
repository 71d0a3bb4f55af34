use std::ops::Range;

use crate::idspace::NodeId;

pub fn xor_distance(a: NodeId, b: NodeId) -> u64 {
    a.0 ^ b.0
}

/// Sort key of a candidate: nodes outside the target region rank after every
/// node inside it, then XOR distance, then smaller ID.
pub type Rank = (bool, u64, u64);

/// What a lookup is searching for.
///
/// A replica lookup carries its virtual region: the owner of a replica key is
/// the XOR-closest node inside that region. Plain lookups (no region) rank
/// purely by XOR distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupKey {
    pub key: NodeId,
    pub region: Option<Range<u64>>,
}

impl LookupKey {
    pub fn exact(key: NodeId) -> Self {
        Self { key, region: None }
    }

    pub fn in_region(key: NodeId, region: Range<u64>) -> Self {
        Self {
            key,
            region: Some(region),
        }
    }

    pub fn in_scope(&self, id: NodeId) -> bool {
        self.region.as_ref().is_none_or(|r| r.contains(&id.0))
    }

    pub fn rank(&self, id: NodeId) -> Rank {
        (!self.in_scope(id), xor_distance(self.key, id), id.0)
    }
}

/// Appends to `out` (up to `n` total) the elements of `sorted` in increasing
/// XOR distance from `key`. `sorted` must be ascending with every element
/// below `2^bits`.
pub fn xor_nearest(sorted: &[u64], key: u64, n: usize, bits: u32, out: &mut Vec<u64>) {
    descend(sorted, key, n, bits as i32 - 1, out);
}

fn descend(slice: &[u64], key: u64, n: usize, bit: i32, out: &mut Vec<u64>) {
    if slice.is_empty() || out.len() >= n {
        return;
    }
    if slice.len() == 1 || bit < 0 {
        out.extend(slice.iter().take(n - out.len()));
        return;
    }
    let mask = 1u64 << bit;
    let split = slice.partition_point(|&x| x & mask == 0);
    let (zero, one) = slice.split_at(split);
    let (near, far) = if key & mask == 0 {
        (zero, one)
    } else {
        (one, zero)
    };
    descend(near, key, n, bit - 1, out);
    descend(far, key, n, bit - 1, out);
}

/// Sub-slice of `sorted` whose values fall in `range`.
pub fn slice_in<'a>(sorted: &'a [u64], range: &Range<u64>) -> &'a [u64] {
    let lo = sorted.partition_point(|&x| x < range.start);
    let hi = sorted.partition_point(|&x| x < range.end);
    &sorted[lo..hi]
}

/// The `n` best elements of `sorted` under [`LookupKey::rank`].
pub fn nearest_ranked(sorted: &[u64], target: &LookupKey, n: usize, bits: u32) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let key = target.key.0;
    match &target.region {
        None => xor_nearest(sorted, key, n, bits, &mut out),
        Some(region) => {
            let lo = sorted.partition_point(|&x| x < region.start);
            let hi = sorted.partition_point(|&x| x < region.end);
            xor_nearest(&sorted[lo..hi], key, n, bits, &mut out);
            if out.len() < n {
                let need = n - out.len();
                let mut rest = Vec::with_capacity(2 * need);
                xor_nearest(&sorted[..lo], key, need, bits, &mut rest);
                let mut right = Vec::with_capacity(need);
                xor_nearest(&sorted[hi..], key, need, bits, &mut right);
                rest.extend(right);
                rest.sort_unstable_by_key(|&x| x ^ key);
                out.extend(rest.into_iter().take(need));
            }
        }
    }
    out
}

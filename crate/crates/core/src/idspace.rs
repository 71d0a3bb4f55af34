//! Hierarchical ID allocation.
//!
//! Bootstrap nodes split the `b`-bit ring evenly. Every admitted node owns a
//! contiguous chunk whose first ID is its own node ID; it invites children by
//! carving sub-chunks of size `max(1, floor(S^c_f))` from the rest of the
//! chunk, where `S` is the length of the chunk it was originally granted.
//! Because a child can only hand out IDs from its own sub-chunk, everything
//! admitted below an attack edge stays inside the sub-chunk granted to the
//! Sybil entry node.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::SocialGraph;

/// Width of the ID ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdSpace {
    bits: u32,
}

impl IdSpace {
    pub const DEFAULT_BITS: u32 = 31;

    pub fn new(bits: u32) -> Result<Self> {
        if !(1..=63).contains(&bits) {
            return Err(Error::InvalidArgument(format!(
                "id space width must be 1..=63 bits, got {bits}"
            )));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn size(&self) -> u64 {
        1u64 << self.bits
    }

    pub fn contains(&self, id: u64) -> bool {
        id < self.size()
    }

    /// First ID of virtual region `i` out of `regions`: `floor(i * 2^b / R)`.
    pub fn region_start(&self, i: usize, regions: usize) -> u64 {
        ((i as u128 * self.size() as u128) / regions as u128) as u64
    }

    pub fn region(&self, i: usize, regions: usize) -> Range<u64> {
        self.region_start(i, regions)..self.region_start(i + 1, regions)
    }

    /// Index of the virtual region holding `id`.
    pub fn region_of(&self, id: u64, regions: usize) -> usize {
        // floor(id * R / 2^b) is either the region or one below it.
        let guess = ((id as u128 * regions as u128) >> self.bits) as usize;
        if guess + 1 < regions && self.region_start(guess + 1, regions) <= id {
            guess + 1
        } else {
            guess
        }
    }
}

impl Default for IdSpace {
    fn default() -> Self {
        Self {
            bits: Self::DEFAULT_BITS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense handle of a node inside a [`BootstrapTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIdx(pub u32);

impl NodeIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Contiguous ID range `[start, start + len)`. The owner of a chunk is the
/// node whose ID is `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunk {
    pub start: u64,
    pub len: u64,
}

impl Chunk {
    pub fn end(&self) -> u64 {
        self.start + self.len
    }

    pub fn owner(&self) -> NodeId {
        NodeId(self.start)
    }

    pub fn contains(&self, id: u64) -> bool {
        id >= self.start && id < self.end()
    }

    pub fn contains_chunk(&self, other: &Chunk) -> bool {
        other.start >= self.start && other.end() <= self.end()
    }

    pub fn overlaps(&self, other: &Chunk) -> bool {
        self.start < other.end() && other.start < self.end()
    }
}

/// A granted chunk plus the cursor of its unallocated tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Allocation {
    pub chunk: Chunk,
    pub next_free: u64,
}

impl Allocation {
    /// Fresh allocation; the owner keeps the first ID for itself.
    pub fn new(chunk: Chunk) -> Self {
        Self {
            chunk,
            next_free: chunk.start + 1,
        }
    }

    pub fn remaining(&self) -> Chunk {
        Chunk {
            start: self.next_free,
            len: self.chunk.end() - self.next_free,
        }
    }
}

/// Evenly spaced bootstrap chunks; the last one absorbs the remainder.
pub fn allocate_bootstrap_chunks(space: IdSpace, n_boot: usize) -> Result<Vec<Chunk>> {
    if n_boot == 0 || n_boot as u64 > space.size() {
        return Err(Error::InvalidArgument(format!(
            "cannot split a {}-bit space into {n_boot} bootstrap chunks",
            space.bits()
        )));
    }
    let stride = space.size() / n_boot as u64;
    Ok((0..n_boot as u64)
        .map(|i| {
            let start = i * stride;
            let len = if i + 1 == n_boot as u64 {
                space.size() - start
            } else {
                stride
            };
            Chunk { start, len }
        })
        .collect())
}

/// Sub-chunk length granted to each child of a node whose original chunk has
/// length `original_len`.
pub fn subchunk_size(original_len: u64, chunk_factor: f64) -> u64 {
    let s = (original_len as f64).powf(chunk_factor).floor();
    if s.is_finite() && s >= 1.0 {
        (s as u64).min(original_len)
    } else {
        1
    }
}

/// Carves the next sub-chunk from `alloc`, returning it and the shrunken
/// allocation.
pub fn carve_subchunk(alloc: &Allocation, chunk_factor: f64) -> Result<(Chunk, Allocation)> {
    let needed = subchunk_size(alloc.chunk.len, chunk_factor);
    let remaining = alloc.remaining().len;
    if remaining < needed {
        return Err(Error::AllocationExhausted { remaining, needed });
    }
    let granted = Chunk {
        start: alloc.next_free,
        len: needed,
    };
    let rest = Allocation {
        chunk: alloc.chunk,
        next_free: alloc.next_free + needed,
    };
    Ok((granted, rest))
}

/// Signed statement "issuer grants `chunk` to `subject`". Signatures are
/// modelled by construction: certificates are only minted by the tree, and
/// verification checks the structural chain back to a bootstrap node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdCertificate {
    pub subject: NodeId,
    pub chunk: Chunk,
    pub issuer: Option<NodeId>,
    pub parent: Option<Arc<IdCertificate>>,
}

impl IdCertificate {
    pub fn bootstrap(chunk: Chunk) -> Self {
        Self {
            subject: chunk.owner(),
            chunk,
            issuer: None,
            parent: None,
        }
    }

    /// Number of certificates from this one up to the bootstrap root.
    pub fn chain_len(&self) -> usize {
        let mut n = 1;
        let mut cur = self;
        while let Some(p) = &cur.parent {
            n += 1;
            cur = p;
        }
        n
    }
}

/// Checks that every link nests inside its issuer's chunk, never covers the
/// issuer's own ID, and that the chain ends at a self-issued bootstrap
/// certificate.
pub fn verify_certificate_chain(cert: &IdCertificate) -> bool {
    let mut cur = cert;
    loop {
        if cur.chunk.len == 0 || cur.subject != cur.chunk.owner() {
            return false;
        }
        match &cur.parent {
            None => return cur.issuer.is_none(),
            Some(parent) => {
                if cur.issuer != Some(parent.subject)
                    || !parent.chunk.contains_chunk(&cur.chunk)
                    || cur.chunk.contains(parent.subject.0)
                {
                    return false;
                }
                cur = parent;
            }
        }
    }
}

/// Ring positions of the `replicas` copies of `key`: `key + floor(i * 2^b / R)`.
///
/// Spreading the remainder across the offsets keeps every gap between
/// consecutive replicas within one ID of every other gap.
pub fn replica_keys(key: NodeId, replicas: usize, space: IdSpace) -> Result<Vec<NodeId>> {
    if replicas == 0 || replicas as u64 > space.size() {
        return Err(Error::InvalidArgument(format!(
            "replication factor {replicas} invalid for a {}-bit space",
            space.bits()
        )));
    }
    if !space.contains(key.0) {
        return Err(Error::InvalidArgument(format!(
            "key {key} outside id space"
        )));
    }
    let mask = space.size() - 1;
    Ok((0..replicas)
        .map(|i| NodeId(key.0.wrapping_add(space.region_start(i, replicas)) & mask))
        .collect())
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub id: NodeId,
    pub parent: Option<NodeIdx>,
    pub children: Vec<NodeIdx>,
    pub alloc: Allocation,
    pub honest: bool,
    pub depth: u32,
    /// Social-graph vertex this node was admitted for (honest nodes only).
    pub vertex: Option<u32>,
    pub cert: Arc<IdCertificate>,
}

/// The invitation forest: bootstrap nodes are roots, every other node hangs
/// under the node that invited it.
#[derive(Debug, Clone)]
pub struct BootstrapTree {
    space: IdSpace,
    chunk_factor: f64,
    nodes: Vec<TreeNode>,
    roots: Vec<NodeIdx>,
    by_id: HashMap<u64, NodeIdx>,
}

impl BootstrapTree {
    /// Creates the roots, one per bootstrap chunk. Bootstrap node `i` takes
    /// the first ID of chunk `i`.
    pub fn new(space: IdSpace, n_boot: usize, chunk_factor: f64) -> Result<Self> {
        if !(chunk_factor > 0.0 && chunk_factor < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "chunk factor must be in (0, 1), got {chunk_factor}"
            )));
        }
        let mut tree = Self {
            space,
            chunk_factor,
            nodes: Vec::new(),
            roots: Vec::new(),
            by_id: HashMap::new(),
        };
        for chunk in allocate_bootstrap_chunks(space, n_boot)? {
            let idx = tree.push(TreeNode {
                id: chunk.owner(),
                parent: None,
                children: Vec::new(),
                alloc: Allocation::new(chunk),
                honest: true,
                depth: 0,
                vertex: None,
                cert: Arc::new(IdCertificate::bootstrap(chunk)),
            });
            tree.roots.push(idx);
        }
        Ok(tree)
    }

    fn push(&mut self, node: TreeNode) -> NodeIdx {
        let idx = NodeIdx(self.nodes.len() as u32);
        self.by_id.insert(node.id.0, idx);
        self.nodes.push(node);
        idx
    }

    pub fn space(&self) -> IdSpace {
        self.space
    }

    pub fn chunk_factor(&self) -> f64 {
        self.chunk_factor
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, idx: NodeIdx) -> &TreeNode {
        &self.nodes[idx.index()]
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = (NodeIdx, &TreeNode)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (NodeIdx(i as u32), n))
    }

    pub fn roots(&self) -> &[NodeIdx] {
        &self.roots
    }

    pub fn is_root(&self, idx: NodeIdx) -> bool {
        self.nodes[idx.index()].parent.is_none()
    }

    pub fn lookup(&self, id: NodeId) -> Option<NodeIdx> {
        self.by_id.get(&id.0).copied()
    }

    pub fn id(&self, idx: NodeIdx) -> NodeId {
        self.nodes[idx.index()].id
    }

    pub fn is_honest(&self, idx: NodeIdx) -> bool {
        self.nodes[idx.index()].honest
    }

    pub fn parent(&self, idx: NodeIdx) -> Option<NodeIdx> {
        self.nodes[idx.index()].parent
    }

    pub fn children(&self, idx: NodeIdx) -> &[NodeIdx] {
        &self.nodes[idx.index()].children
    }

    /// Strict ancestors, nearest first.
    pub fn ancestors(&self, idx: NodeIdx) -> impl Iterator<Item = NodeIdx> + '_ {
        std::iter::successors(self.parent(idx), move |&p| self.parent(p))
    }

    pub fn honest_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.honest).count()
    }

    /// Admits a new node under `parent` with the next sub-chunk of the
    /// parent's allocation. The child's ID is the first ID of that sub-chunk.
    pub fn admit_child(
        &mut self,
        parent: NodeIdx,
        honest: bool,
        vertex: Option<u32>,
    ) -> Result<NodeIdx> {
        let p = &self.nodes[parent.index()];
        let (granted, rest) = carve_subchunk(&p.alloc, self.chunk_factor)?;
        let cert = Arc::new(IdCertificate {
            subject: granted.owner(),
            chunk: granted,
            issuer: Some(p.id),
            parent: Some(Arc::clone(&p.cert)),
        });
        let depth = p.depth + 1;
        self.nodes[parent.index()].alloc = rest;
        let child = self.push(TreeNode {
            id: granted.owner(),
            parent: Some(parent),
            children: Vec::new(),
            alloc: Allocation::new(granted),
            honest,
            depth,
            vertex,
            cert,
        });
        self.nodes[parent.index()].children.push(child);
        Ok(child)
    }

    /// Whether the node's certificate verifies and is anchored at one of this
    /// tree's bootstrap nodes.
    pub fn verify(&self, idx: NodeIdx) -> bool {
        let cert = &self.nodes[idx.index()].cert;
        if !verify_certificate_chain(cert) {
            return false;
        }
        let mut root = cert.as_ref();
        while let Some(p) = &root.parent {
            root = p;
        }
        self.roots.iter().any(|&r| self.id(r) == root.subject)
    }

    /// Preorder over the subtree of every root, so each subtree occupies a
    /// contiguous span. Returns the order and, per node, its span `[pos, end)`.
    pub fn preorder(&self) -> (Vec<NodeIdx>, Vec<Range<usize>>) {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut span = vec![0..0; self.nodes.len()];
        for &root in &self.roots {
            let mut stack = vec![(root, false)];
            while let Some((n, done)) = stack.pop() {
                if done {
                    span[n.index()].end = order.len();
                    continue;
                }
                span[n.index()].start = order.len();
                order.push(n);
                stack.push((n, true));
                for &c in self.children(n).iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        (order, span)
    }

    pub fn max_depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }
}

/// Outcome counts of [`build_network`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub admitted: usize,
    pub dropped: usize,
    /// Invitations refused because the inviter's chunk was exhausted.
    pub refused: usize,
    /// `depth_histogram[d]` = admitted nodes at depth `d`.
    pub depth_histogram: Vec<usize>,
}

/// Grows the honest bootstrap tree over `graph`.
///
/// `n_boot` vertices are picked uniformly as bootstrap nodes; a BFS from all
/// of them admits each newly discovered vertex under the node that
/// discovered it. When the discoverer's chunk is exhausted the vertex stays
/// undiscovered and may be admitted later by another neighbor. Vertices the
/// BFS never admits are dropped.
pub fn build_network<R: Rng + ?Sized>(
    graph: &SocialGraph,
    n_boot: usize,
    space: IdSpace,
    chunk_factor: f64,
    rng: &mut R,
) -> Result<(BootstrapTree, BuildReport)> {
    if n_boot == 0 || n_boot > graph.node_count() {
        return Err(Error::InvalidArgument(format!(
            "need 1..={} bootstrap nodes, got {n_boot}",
            graph.node_count()
        )));
    }
    let vertices: Vec<u32> = (0..graph.node_count() as u32).collect();
    let boot: Vec<u32> = vertices.choose_multiple(rng, n_boot).copied().collect();
    build_network_from(graph, &boot, space, chunk_factor)
}

/// [`build_network`] with an explicit bootstrap vertex list.
pub fn build_network_from(
    graph: &SocialGraph,
    bootstrap: &[u32],
    space: IdSpace,
    chunk_factor: f64,
) -> Result<(BootstrapTree, BuildReport)> {
    let mut tree = BootstrapTree::new(space, bootstrap.len(), chunk_factor)?;
    let adj = graph.invite_adjacency();
    let mut admitted: Vec<Option<NodeIdx>> = vec![None; graph.node_count()];
    let mut queue = VecDeque::new();
    for (i, &v) in bootstrap.iter().enumerate() {
        if admitted[v as usize].is_some() {
            return Err(Error::InvalidArgument(format!(
                "bootstrap vertex {v} listed twice"
            )));
        }
        let root = tree.roots()[i];
        tree.nodes[root.index()].vertex = Some(v);
        admitted[v as usize] = Some(root);
        queue.push_back(v);
    }

    let mut refused = 0;
    while let Some(u) = queue.pop_front() {
        let inviter = admitted[u as usize].expect("queued vertices are admitted");
        for &v in &adj[u as usize] {
            if admitted[v as usize].is_some() {
                continue;
            }
            match tree.admit_child(inviter, true, Some(v)) {
                Ok(child) => {
                    admitted[v as usize] = Some(child);
                    queue.push_back(v);
                }
                Err(Error::AllocationExhausted { .. }) => refused += 1,
                Err(e) => return Err(e),
            }
        }
    }

    let mut depth_histogram = vec![0; tree.max_depth() as usize + 1];
    for (_, n) in tree.nodes() {
        depth_histogram[n.depth as usize] += 1;
    }
    let report = BuildReport {
        admitted: tree.len(),
        dropped: graph.node_count() - tree.len(),
        refused,
        depth_histogram,
    };
    Ok((tree, report))
}

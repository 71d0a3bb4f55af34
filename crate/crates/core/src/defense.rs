//! Sybil detection by inspection lookups, and lookup filtering by ancestor
//! status.
//!
//! Every honest parent inspects each of its direct children once, with help
//! from collaborative friends its own ancestors suggested. An intermediate
//! role inspection routes a lookup for a sibling through the child; a target
//! role inspection stores a value at the child and reads it back. The parent
//! records `+` or `-` for the child. A regular lookup later rejects any node
//! with a `-` anywhere on its ancestor chain.

use std::collections::HashMap;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::adversary::friend_report;
use crate::dht::{lookup_via, LookupKey, LookupParams, Overlay, Storage, Value};
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::idspace::{BootstrapTree, NodeIdx};
use crate::rng::mix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NodeStatus {
    /// `+`
    Honest,
    /// `-`
    Malicious,
    #[default]
    Unknown,
}

impl NodeStatus {
    pub fn symbol(self) -> char {
        match self {
            NodeStatus::Honest => '+',
            NodeStatus::Malicious => '-',
            NodeStatus::Unknown => '?',
        }
    }
}

/// Statuses recorded by parents for their direct children. Each node has one
/// parent, so the ledger is stored per child.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatusLedger {
    status: Vec<NodeStatus>,
    parent: Vec<Option<NodeIdx>>,
}

impl StatusLedger {
    pub fn new(tree: &BootstrapTree) -> Self {
        Self {
            status: vec![NodeStatus::Unknown; tree.len()],
            parent: tree.nodes().map(|(_, n)| n.parent).collect(),
        }
    }

    /// Records `status` for `child` on `parent`'s behalf. A recorded `-` is
    /// kept whatever is recorded later.
    pub fn record(&mut self, parent: NodeIdx, child: NodeIdx, status: NodeStatus) -> Result<()> {
        if self.parent.get(child.index()).copied().flatten() != Some(parent) {
            return Err(Error::InvalidArgument(format!(
                "{child:?} is not a direct child of {parent:?}"
            )));
        }
        let slot = &mut self.status[child.index()];
        if *slot != NodeStatus::Malicious {
            *slot = status;
        }
        Ok(())
    }

    /// Status `parent` holds for `child`; unknown for non-children.
    pub fn status_of(&self, parent: NodeIdx, child: NodeIdx) -> NodeStatus {
        match self.parent.get(child.index()) {
            Some(&Some(p)) if p == parent => self.status[child.index()],
            _ => NodeStatus::Unknown,
        }
    }

    /// Status recorded for `node` by its parent.
    pub fn status(&self, node: NodeIdx) -> NodeStatus {
        self.status[node.index()]
    }

    /// Counts of `+`, `-` and unknown over all non-root nodes.
    pub fn counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for (s, p) in self.status.iter().zip(&self.parent) {
            if p.is_none() {
                continue;
            }
            match s {
                NodeStatus::Honest => c.0 += 1,
                NodeStatus::Malicious => c.1 += 1,
                NodeStatus::Unknown => c.2 += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum FriendMode {
    /// Ancestors suggest honest nodes from their own subtree.
    #[default]
    Trusted,
    /// Ancestors suggest uniformly from their social contacts, which include
    /// any Sybils they admitted.
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FriendSet {
    pub mode: FriendMode,
    /// `(level, friend)`: level 1 was suggested by the parent, 2 by the
    /// grandparent, and so on.
    pub friends: Vec<(u32, NodeIdx)>,
}

impl FriendSet {
    pub fn is_empty(&self) -> bool {
        self.friends.is_empty()
    }

    pub fn len(&self) -> usize {
        self.friends.len()
    }

    pub fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<NodeIdx> {
        self.friends.choose(rng).map(|&(_, f)| f)
    }
}

/// Who each honest node can suggest as a friend.
#[derive(Debug, Clone)]
pub struct FriendPool {
    /// Preorder over the tree and each node's subtree span in it.
    order: Vec<NodeIdx>,
    span: Vec<Range<usize>>,
    /// Honest nodes of `order`, as prefix counts for subtree sampling.
    honest_prefix: Vec<u32>,
    honest_order: Vec<NodeIdx>,
    /// Admitted social neighbors plus Sybil children, per honest node.
    contacts: Vec<Vec<NodeIdx>>,
}

impl FriendPool {
    /// `graph` supplies social contacts for random mode; without it a node's
    /// contacts are its tree neighbors.
    pub fn new(tree: &BootstrapTree, graph: Option<&SocialGraph>) -> Self {
        let (order, span) = tree.preorder();
        let mut honest_prefix = Vec::with_capacity(order.len() + 1);
        let mut honest_order = Vec::new();
        honest_prefix.push(0);
        for &n in &order {
            if tree.is_honest(n) {
                honest_order.push(n);
            }
            honest_prefix.push(honest_order.len() as u32);
        }

        let mut by_vertex: HashMap<u32, NodeIdx> = HashMap::new();
        for (i, n) in tree.nodes() {
            if let Some(v) = n.vertex {
                by_vertex.insert(v, i);
            }
        }
        let adj = graph.map(SocialGraph::undirected_adjacency);
        let contacts = tree
            .nodes()
            .map(|(i, n)| {
                if !n.honest {
                    return Vec::new();
                }
                let mut c: Vec<NodeIdx> = match (&adj, n.vertex) {
                    (Some(adj), Some(v)) => adj[v as usize]
                        .iter()
                        .filter_map(|u| by_vertex.get(u).copied())
                        .collect(),
                    _ => n
                        .parent
                        .into_iter()
                        .chain(n.children.iter().copied())
                        .collect(),
                };
                c.extend(
                    tree.children(i)
                        .iter()
                        .copied()
                        .filter(|&ch| !tree.is_honest(ch)),
                );
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        Self {
            order,
            span,
            honest_prefix,
            honest_order,
            contacts,
        }
    }

    pub fn contacts(&self, node: NodeIdx) -> &[NodeIdx] {
        &self.contacts[node.index()]
    }

    /// Honest nodes in the subtree of `root`, in preorder.
    fn honest_in_subtree(&self, root: NodeIdx) -> &[NodeIdx] {
        let s = &self.span[root.index()];
        let lo = self.honest_prefix[s.start] as usize;
        let hi = self.honest_prefix[s.end] as usize;
        &self.honest_order[lo..hi]
    }

    /// Preorder of the whole forest.
    pub fn preorder(&self) -> &[NodeIdx] {
        &self.order
    }
}

/// Asks each ancestor of `node` for `per_level` friends. Bootstrap nodes
/// have no ancestors and get an empty set.
pub fn select_friends<R: Rng + ?Sized>(
    tree: &BootstrapTree,
    pool: &FriendPool,
    node: NodeIdx,
    mode: FriendMode,
    per_level: usize,
    rng: &mut R,
) -> Result<FriendSet> {
    if per_level == 0 {
        return Err(Error::InvalidArgument("per_level must be positive".into()));
    }
    let mut friends = Vec::new();
    for (level, ancestor) in tree.ancestors(node).enumerate() {
        let level = level as u32 + 1;
        let candidates: &[NodeIdx] = match mode {
            FriendMode::Trusted => pool.honest_in_subtree(ancestor),
            FriendMode::Random => pool.contacts(ancestor),
        };
        for _ in 0..per_level {
            // Rejection sampling skips `node` itself.
            for _ in 0..16 {
                match candidates.choose(rng) {
                    Some(&f) if f != node => {
                        friends.push((level, f));
                        break;
                    }
                    Some(_) if candidates.len() > 1 => continue,
                    _ => break,
                }
            }
        }
    }
    Ok(FriendSet { mode, friends })
}

/// Which role an inspection examines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Intermediate,
    Target,
}

/// Role selection for a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoleMix {
    #[default]
    Uniform,
    TargetOnly,
    IntermediateOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InspectionRecord {
    pub parent: NodeIdx,
    pub child: NodeIdx,
    pub role: Role,
    /// Friend that ran the lookup (intermediate) or reported the get (target).
    pub friend: NodeIdx,
    pub status: NodeStatus,
    /// Intermediate hops of the inspection lookup; `None` when no lookup
    /// was run.
    pub hops: Option<usize>,
}

/// Intermediate-role inspection of `child` through a lookup for `sibling`
/// started by `friend`.
pub fn inspect_intermediate(
    overlay: &Overlay,
    friend: NodeIdx,
    child: NodeIdx,
    sibling: NodeIdx,
    params: LookupParams,
) -> Result<(NodeStatus, Option<usize>)> {
    let friend_malicious = overlay.is_malicious(friend);
    let child_malicious = overlay.is_malicious(child);
    if friend_malicious {
        let ok = friend_report(true, child_malicious, false);
        return Ok((verdict(ok), None));
    }
    let target = LookupKey::exact(overlay.id(sibling));
    let trace = lookup_via(overlay, friend, child, &target, params, &|_| true)?;
    let reached = trace.result == Some(sibling);
    Ok((verdict(reached), Some(trace.result_round.saturating_sub(1))))
}

/// Target-role inspection: `store_friend` stores a fresh value under the
/// child's own ID at the child, `get_friend` reads it back and reports.
pub fn inspect_target(
    overlay: &Overlay,
    store_friend: NodeIdx,
    get_friend: NodeIdx,
    child: NodeIdx,
    nonce: u64,
) -> NodeStatus {
    let key = overlay.id(child).0;
    let value = Value::genuine(mix64(nonce ^ mix64(store_friend.0 as u64)));
    let mut scratch = Storage::new();
    if !overlay.is_malicious(child) {
        scratch.store(child, key, value);
    }
    let returned = overlay.respond_value(&scratch, child, key);
    let ok = returned == Some(value);
    verdict(friend_report(
        overlay.is_malicious(get_friend),
        overlay.is_malicious(child),
        ok,
    ))
}

fn verdict(ok: bool) -> NodeStatus {
    if ok {
        NodeStatus::Honest
    } else {
        NodeStatus::Malicious
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CampaignParams {
    pub mode: FriendMode,
    pub per_level: usize,
    pub roles: RoleMix,
    pub lookup: LookupParams,
}

impl Default for CampaignParams {
    fn default() -> Self {
        Self {
            mode: FriendMode::Trusted,
            per_level: 1,
            roles: RoleMix::Uniform,
            lookup: LookupParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CampaignReport {
    pub ledger: StatusLedger,
    pub records: Vec<InspectionRecord>,
    /// Children left unknown because no friend was available.
    pub deferred: usize,
}

impl CampaignReport {
    /// `(FP, FN)`: honest children marked `-` over honest children inspected,
    /// malicious children marked `+` over malicious children inspected.
    /// An empty denominator gives 0.
    pub fn error_rates(&self, overlay: &Overlay) -> (f64, f64) {
        let (mut hon, mut fp, mut mal, mut fneg) = (0usize, 0usize, 0usize, 0usize);
        for r in &self.records {
            if overlay.is_malicious(r.child) {
                mal += 1;
                fneg += usize::from(r.status == NodeStatus::Honest);
            } else {
                hon += 1;
                fp += usize::from(r.status == NodeStatus::Malicious);
            }
        }
        let rate = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        (rate(fp, hon), rate(fneg, mal))
    }

    /// Mean hops of intermediate-role lookups; `None` if there were none.
    pub fn mean_inspection_hops(&self) -> Option<f64> {
        let hops: Vec<usize> = self.records.iter().filter_map(|r| r.hops).collect();
        (!hops.is_empty()).then(|| hops.iter().sum::<usize>() as f64 / hops.len() as f64)
    }
}

/// Every honest parent inspects each direct child once; malicious parents
/// record `+` for all their children.
///
/// An honest bootstrap parent has no ancestors to suggest friends, so it
/// uses the other bootstrap nodes. Intermediate inspections target a
/// uniformly chosen honest sibling; a child without one is inspected in the
/// target role instead.
pub fn run_inspection_campaign<R: Rng + ?Sized>(
    tree: &BootstrapTree,
    overlay: &Overlay,
    pool: &FriendPool,
    params: CampaignParams,
    rng: &mut R,
) -> Result<CampaignReport> {
    let mut ledger = StatusLedger::new(tree);
    let mut records = Vec::new();
    let mut deferred = 0;
    for (parent, node) in tree.nodes() {
        if node.children.is_empty() {
            continue;
        }
        if !node.honest {
            for &c in &node.children {
                ledger.record(parent, c, NodeStatus::Honest)?;
            }
            continue;
        }
        let mut friends = select_friends(tree, pool, parent, params.mode, params.per_level, rng)?;
        if friends.is_empty() {
            friends.friends = tree
                .roots()
                .iter()
                .filter(|&&r| r != parent)
                .map(|&r| (1, r))
                .collect();
        }
        if friends.is_empty() {
            friends.friends.push((0, parent));
        }
        let honest_children: Vec<NodeIdx> = node
            .children
            .iter()
            .copied()
            .filter(|&c| tree.is_honest(c))
            .collect();

        for &child in &node.children {
            let role = match params.roles {
                RoleMix::TargetOnly => Role::Target,
                RoleMix::IntermediateOnly => Role::Intermediate,
                RoleMix::Uniform => {
                    if rng.gen_bool(0.5) {
                        Role::Intermediate
                    } else {
                        Role::Target
                    }
                }
            };
            let siblings: Vec<NodeIdx> = honest_children
                .iter()
                .copied()
                .filter(|&s| s != child)
                .collect();
            let Some(friend) = friends.pick(rng) else {
                deferred += 1;
                continue;
            };
            let record = match (role, siblings.choose(rng)) {
                (Role::Intermediate, Some(&sibling)) => {
                    let (status, hops) =
                        inspect_intermediate(overlay, friend, child, sibling, params.lookup)?;
                    InspectionRecord {
                        parent,
                        child,
                        role,
                        friend,
                        status,
                        hops,
                    }
                }
                _ => {
                    let getter = friends.pick(rng).unwrap_or(friend);
                    let status = inspect_target(overlay, friend, getter, child, rng.gen());
                    InspectionRecord {
                        parent,
                        child,
                        role: Role::Target,
                        friend: getter,
                        status,
                        hops: None,
                    }
                }
            };
            ledger.record(parent, child, record.status)?;
            records.push(record);
        }
    }
    Ok(CampaignReport {
        ledger,
        records,
        deferred,
    })
}

/// Per-initiator memo of resolved verdicts (`true` = honest).
#[derive(Debug, Clone, Default)]
pub struct StatusCache {
    verdicts: HashMap<NodeIdx, bool>,
}

impl StatusCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, node: NodeIdx) -> Option<bool> {
        self.verdicts.get(&node).copied()
    }

    pub fn len(&self) -> usize {
        self.verdicts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verdicts.is_empty()
    }
}

/// Walks from `candidate` up to its bootstrap node asking each parent for
/// the status of the node below it. Any `-` makes the candidate malicious;
/// unknown counts as `+`. Returns `true` for honest and caches the verdict.
pub fn resolve_status(
    tree: &BootstrapTree,
    ledger: &StatusLedger,
    cache: &mut StatusCache,
    candidate: NodeIdx,
) -> bool {
    if let Some(v) = cache.get(candidate) {
        return v;
    }
    let mut node = candidate;
    let mut honest = true;
    while let Some(parent) = tree.parent(node) {
        if ledger.status_of(parent, node) == NodeStatus::Malicious {
            honest = false;
            break;
        }
        node = parent;
    }
    cache.verdicts.insert(candidate, honest);
    honest
}

/// The verdict [`resolve_status`] reaches for every node, computed in one
/// pass. Ledgers are shared, so every initiator's cache converges to this.
pub fn resolve_all(tree: &BootstrapTree, ledger: &StatusLedger) -> Vec<bool> {
    let mut honest = vec![true; tree.len()];
    let (order, _) = tree.preorder();
    for n in order {
        if let Some(p) = tree.parent(n) {
            honest[n.index()] = honest[p.index()] && ledger.status(n) != NodeStatus::Malicious;
        }
    }
    honest
}

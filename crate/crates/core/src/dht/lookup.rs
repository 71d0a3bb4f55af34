//! Iterative Kademlia lookup.
//!
//! A round queries the `alpha` best candidates not yet queried; every
//! queried node answers with up to `beta` peers. The lookup ends when a round
//! fails to improve the best known candidate or no candidate is left. The
//! result is the best node contacted. The hop count is the number of query
//! rounds, including the final one that confirmed convergence.

use std::collections::{BTreeSet, HashSet};

use crate::dht::distance::{LookupKey, Rank};
use crate::dht::overlay::Overlay;
use crate::error::{Error, Result};
use crate::idspace::{NodeId, NodeIdx};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LookupParams {
    pub alpha: usize,
    pub beta: usize,
    /// Safety cap on rounds.
    pub max_rounds: usize,
}

impl Default for LookupParams {
    fn default() -> Self {
        Self {
            alpha: 5,
            beta: 7,
            max_rounds: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LookupOutcome {
    /// The owner of the key (among nodes the filter admits) was contacted.
    Found,
    /// The lookup ended elsewhere.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupTrace {
    pub initiator: NodeIdx,
    pub target: LookupKey,
    /// Nodes queried in each round.
    pub rounds: Vec<Vec<NodeIdx>>,
    /// Best known rank after each round.
    pub best: Vec<Rank>,
    /// Best node contacted, `None` if nothing was reachable.
    pub result: Option<NodeIdx>,
    pub outcome: LookupOutcome,
    /// Number of query rounds.
    pub hops: usize,
    /// Round that contacted `result`; 0 when it is the initiator.
    pub result_round: usize,
}

impl LookupTrace {
    pub fn found(&self) -> bool {
        self.outcome == LookupOutcome::Found
    }
}

/// Lookup started from `initiator`'s own routing table. The initiator counts
/// as a contacted candidate, so it is the result when nothing closer exists.
/// `keep` decides which nodes the initiator is willing to use.
pub fn iterative_lookup(
    overlay: &Overlay,
    initiator: NodeIdx,
    target: &LookupKey,
    params: LookupParams,
    keep: &dyn Fn(NodeIdx) -> bool,
) -> Result<LookupTrace> {
    check(overlay, initiator, params)?;
    let table = overlay.table(initiator).ok_or_else(|| {
        Error::InvalidArgument(format!("initiator {initiator:?} has no routing table"))
    })?;
    let seeds: Vec<NodeIdx> = table
        .closest_peers(target, usize::MAX)
        .into_iter()
        .filter_map(|p| overlay.resolve(p.id))
        .filter(|&n| keep(n))
        .take(params.alpha)
        .collect();
    let mut search = Search::new(overlay, target, keep);
    search.contact_self(initiator);
    for s in seeds {
        search.learn(s);
    }
    Ok(search.run(initiator, params))
}

/// Lookup whose first round queries only `first_hop`. Used by inspection
/// lookups, where a friend routes through the inspected child.
pub fn lookup_via(
    overlay: &Overlay,
    initiator: NodeIdx,
    first_hop: NodeIdx,
    target: &LookupKey,
    params: LookupParams,
    keep: &dyn Fn(NodeIdx) -> bool,
) -> Result<LookupTrace> {
    check(overlay, initiator, params)?;
    if first_hop.index() >= overlay.len() {
        return Err(Error::InvalidArgument(format!(
            "unknown node {first_hop:?}"
        )));
    }
    let mut search = Search::new(overlay, target, keep);
    search.learn(first_hop);
    Ok(search.run(initiator, params))
}

fn check(overlay: &Overlay, initiator: NodeIdx, params: LookupParams) -> Result<()> {
    if initiator.index() >= overlay.len() {
        return Err(Error::InvalidArgument(format!(
            "unknown initiator {initiator:?}"
        )));
    }
    if params.alpha == 0 || params.beta == 0 {
        return Err(Error::InvalidArgument(
            "alpha and beta must be positive".into(),
        ));
    }
    Ok(())
}

struct Search<'a> {
    overlay: &'a Overlay,
    target: &'a LookupKey,
    keep: &'a dyn Fn(NodeIdx) -> bool,
    seen: HashSet<NodeIdx>,
    pending: BTreeSet<(Rank, NodeIdx)>,
    /// Best contacted node with the round that contacted it.
    contacted: Option<(Rank, NodeIdx, usize)>,
    best_known: Option<Rank>,
}

impl<'a> Search<'a> {
    fn new(overlay: &'a Overlay, target: &'a LookupKey, keep: &'a dyn Fn(NodeIdx) -> bool) -> Self {
        Self {
            overlay,
            target,
            keep,
            seen: HashSet::new(),
            pending: BTreeSet::new(),
            contacted: None,
            best_known: None,
        }
    }

    fn rank(&self, n: NodeIdx) -> Rank {
        self.target.rank(self.overlay.id(n))
    }

    fn contact_self(&mut self, n: NodeIdx) {
        self.seen.insert(n);
        let r = self.rank(n);
        self.contacted = Some((r, n, 0));
        self.best_known = Some(r);
    }

    fn learn(&mut self, n: NodeIdx) -> bool {
        if !self.seen.insert(n) {
            return false;
        }
        let r = self.rank(n);
        self.pending.insert((r, n));
        if self.best_known.is_none_or(|b| r < b) {
            self.best_known = Some(r);
            return true;
        }
        false
    }

    fn run(mut self, initiator: NodeIdx, params: LookupParams) -> LookupTrace {
        let mut rounds = Vec::new();
        let mut best = Vec::new();
        while rounds.len() < params.max_rounds && !self.pending.is_empty() {
            let round = rounds.len() + 1;
            let batch: Vec<NodeIdx> = (0..params.alpha)
                .map_while(|_| self.pending.pop_first().map(|(_, n)| n))
                .collect();
            let mut improved = false;
            for &n in &batch {
                let r = self.rank(n);
                if self.contacted.is_none_or(|(c, _, _)| r < c) {
                    self.contacted = Some((r, n, round));
                }
                for peer in self.overlay.respond_route(n, self.target, params.beta) {
                    if let Some(p) = self.resolve(peer.id) {
                        improved |= self.learn(p);
                    }
                }
            }
            rounds.push(batch);
            best.push(self.best_known.expect("a contacted node is known"));
            if !improved {
                break;
            }
        }

        let result = self.contacted.map(|(_, n, _)| n);
        let result_round = self.contacted.map_or(0, |(_, _, r)| r);
        let owner = self.overlay.owner_among(self.target, self.keep);
        let outcome = if result.is_some() && result == owner {
            LookupOutcome::Found
        } else {
            LookupOutcome::Stalled
        };
        LookupTrace {
            hops: rounds.len(),
            initiator,
            target: self.target.clone(),
            rounds,
            best,
            result,
            outcome,
            result_round,
        }
    }

    fn resolve(&self, id: NodeId) -> Option<NodeIdx> {
        self.overlay.resolve(id).filter(|&n| (self.keep)(n))
    }
}

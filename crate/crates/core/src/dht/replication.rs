//! Replicated store and retrieve over `R` virtual regions, and the majority
//! vote used by the baseline system.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dht::lookup::{iterative_lookup, LookupParams, LookupTrace};
use crate::dht::overlay::Overlay;
use crate::dht::storage::{Storage, Value};
use crate::error::{Error, Result};
use crate::idspace::{replica_keys, NodeId, NodeIdx};

/// Result of one replica lookup of a put.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicaOutcome {
    pub replica: usize,
    pub key: NodeId,
    pub trace: LookupTrace,
    /// Node asked to hold the replica.
    pub holder: Option<NodeIdx>,
}

/// Result of one replica lookup of a get.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicaReply {
    pub replica: usize,
    pub key: NodeId,
    pub trace: LookupTrace,
    pub holder: Option<NodeIdx>,
    /// `None` when the holder has nothing for the key.
    pub value: Option<Value>,
}

/// Runs one lookup per replica key and stores `value` at every node the
/// lookups end on. Attackers discard what they are given.
pub fn replicated_put(
    overlay: &Overlay,
    storage: &mut Storage,
    initiator: NodeIdx,
    key: NodeId,
    value: Value,
    params: LookupParams,
    keep: &dyn Fn(NodeIdx) -> bool,
) -> Result<Vec<ReplicaOutcome>> {
    let keys = replica_keys(key, overlay.replication(), overlay.space())?;
    let mut out = Vec::with_capacity(keys.len());
    for (replica, rk) in keys.into_iter().enumerate() {
        let trace = iterative_lookup(
            overlay,
            initiator,
            &overlay.replica_target(rk),
            params,
            keep,
        )?;
        let holder = trace.result;
        if let Some(h) = holder.filter(|&h| !overlay.is_malicious(h)) {
            storage.store(h, rk.0, value);
        }
        out.push(ReplicaOutcome {
            replica,
            key: rk,
            trace,
            holder,
        });
    }
    Ok(out)
}

/// Runs one lookup per replica key and asks each node reached for the value.
pub fn replicated_get(
    overlay: &Overlay,
    storage: &Storage,
    initiator: NodeIdx,
    key: NodeId,
    params: LookupParams,
    keep: &dyn Fn(NodeIdx) -> bool,
) -> Result<Vec<ReplicaReply>> {
    let keys = replica_keys(key, overlay.replication(), overlay.space())?;
    let mut out = Vec::with_capacity(keys.len());
    for (replica, rk) in keys.into_iter().enumerate() {
        let trace = iterative_lookup(
            overlay,
            initiator,
            &overlay.replica_target(rk),
            params,
            keep,
        )?;
        let holder = trace.result;
        let value = holder.and_then(|h| overlay.respond_value(storage, h, rk.0));
        out.push(ReplicaReply {
            replica,
            key: rk,
            trace,
            holder,
            value,
        });
    }
    Ok(out)
}

/// Modal value; ties are broken uniformly at random.
pub fn majority_vote<R: Rng + ?Sized>(values: &[Value], rng: &mut R) -> Result<Value> {
    if values.is_empty() {
        return Err(Error::NoResult);
    }
    let mut counts: Vec<(Value, usize)> = Vec::new();
    let mut slot: HashMap<Value, usize> = HashMap::new();
    for &v in values {
        match slot.get(&v) {
            Some(&i) => counts[i].1 += 1,
            None => {
                slot.insert(v, counts.len());
                counts.push((v, 1));
            }
        }
    }
    let top = counts.iter().map(|c| c.1).max().expect("non-empty");
    let tied: Vec<Value> = counts
        .into_iter()
        .filter(|c| c.1 == top)
        .map(|c| c.0)
        .collect();
    Ok(*tied.choose(rng).expect("non-empty"))
}

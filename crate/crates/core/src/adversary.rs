//! Attack model.
//!
//! Sybils enter through attack edges: a randomly chosen honest victim admits
//! one Sybil entry node, which then invites further Sybils from its own
//! sub-chunk. All attackers know each other; their routing answers contain
//! only attackers, their `get` answers are fabricated, their parents vouch
//! `+` for every child, and when picked as a collaborative friend they report
//! the inverse of the inspected node's honesty.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dht::distance::{nearest_ranked, LookupKey};
use crate::dht::routing::PeerRecord;
use crate::dht::storage::Value;
use crate::error::{Error, Result};
use crate::idspace::{subchunk_size, BootstrapTree, NodeId, NodeIdx};
use crate::rng::mix64;

/// How attackers fabricate answers to `get`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForgeMode {
    /// Every attacker returns the same wrong value for a key, so their
    /// answers pile up in a majority vote.
    #[default]
    Colluding,
    /// Each attacker invents its own wrong value.
    Independent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryPolicy {
    /// Number of attack edges `g`.
    pub attack_edges: usize,
    /// Sybils admitted per attack edge, entry node included.
    pub sybils_per_edge: usize,
    pub forge: ForgeMode,
    /// Victim resamples tried when the chosen victim's chunk is exhausted.
    pub victim_retries: usize,
}

impl AdversaryPolicy {
    pub const DEFAULT_SYBILS_PER_EDGE: usize = 10;

    /// Policy with `g = round(ratio * honest)`.
    pub fn from_ratio(ratio: f64, honest: usize) -> Result<Self> {
        if !(ratio >= 0.0 && ratio.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad g/n ratio {ratio}")));
        }
        Ok(Self {
            attack_edges: (ratio * honest as f64).round() as usize,
            sybils_per_edge: Self::DEFAULT_SYBILS_PER_EDGE,
            forge: ForgeMode::Colluding,
            victim_retries: 64,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SybilReport {
    /// `(victim, entry)` per successful attack edge.
    pub attack_edges: Vec<(NodeIdx, NodeIdx)>,
    pub attackers: Vec<NodeIdx>,
    /// Attack edges abandoned after exhausting victim retries.
    pub skipped_edges: usize,
}

/// Attaches Sybil subtrees to the honest tree.
pub fn spawn_sybils<R: Rng + ?Sized>(
    tree: &mut BootstrapTree,
    policy: &AdversaryPolicy,
    rng: &mut R,
) -> Result<SybilReport> {
    if policy.sybils_per_edge == 0 {
        return Err(Error::InvalidArgument(
            "sybils per attack edge must be positive".into(),
        ));
    }
    let honest: Vec<NodeIdx> = tree
        .nodes()
        .filter(|(_, n)| n.honest)
        .map(|(i, _)| i)
        .collect();
    if honest.is_empty() && policy.attack_edges > 0 {
        return Err(Error::InvalidArgument("no honest victims".into()));
    }

    let mut report = SybilReport::default();
    for _ in 0..policy.attack_edges {
        let mut entry = None;
        for _ in 0..=policy.victim_retries {
            let victim = *honest.choose(rng).expect("non-empty");
            match tree.admit_child(victim, false, None) {
                Ok(e) => {
                    entry = Some((victim, e));
                    break;
                }
                Err(Error::AllocationExhausted { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        let Some((victim, entry)) = entry else {
            report.skipped_edges += 1;
            continue;
        };
        report.attack_edges.push((victim, entry));
        report.attackers.push(entry);

        let mut group = vec![entry];
        for _ in 1..policy.sybils_per_edge {
            let open: Vec<NodeIdx> = group
                .iter()
                .copied()
                .filter(|&s| {
                    let a = tree.node(s).alloc;
                    a.remaining().len >= subchunk_size(a.chunk.len, tree.chunk_factor())
                })
                .collect();
            let Some(&inviter) = open.choose(rng) else {
                break;
            };
            let sybil = tree.admit_child(inviter, false, None)?;
            group.push(sybil);
            report.attackers.push(sybil);
        }
    }
    Ok(report)
}

/// Shared knowledge of every attacker ID, standing in for the attackers'
/// all-malicious routing tables.
#[derive(Debug, Clone, Default)]
pub struct AttackerDirectory {
    sorted: Vec<u64>,
    bits: u32,
    forge: ForgeMode,
}

impl AttackerDirectory {
    pub fn new(ids: impl IntoIterator<Item = NodeId>, bits: u32, forge: ForgeMode) -> Self {
        let mut sorted: Vec<u64> = ids.into_iter().map(|id| id.0).collect();
        sorted.sort_unstable();
        sorted.dedup();
        Self {
            sorted,
            bits,
            forge,
        }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.sorted.binary_search(&id.0).is_ok()
    }

    pub fn forge_mode(&self) -> ForgeMode {
        self.forge
    }

    /// Answer of any attacker to a routing query: the `beta` attackers
    /// closest to the target.
    pub fn route_response(&self, target: &LookupKey, beta: usize) -> Vec<PeerRecord> {
        nearest_ranked(&self.sorted, target, beta, self.bits)
            .into_iter()
            .map(|id| PeerRecord::new(NodeId(id)))
            .collect()
    }

    /// Answer of `attacker` to `get(key)`: always a forged value.
    pub fn value_response(&self, attacker: NodeId, key: u64) -> Value {
        let payload = match self.forge {
            ForgeMode::Colluding => mix64(key ^ 0xA5A5_5A5A_A5A5_5A5A),
            ForgeMode::Independent => mix64(key ^ mix64(attacker.0)),
        };
        Value {
            payload,
            forged: true,
        }
    }
}

/// What a collaborative friend tells the inspecting parent. Honest friends
/// pass the lookup outcome through; malicious friends vouch for malicious
/// nodes and accuse honest ones whatever actually happened.
pub fn friend_report(
    friend_malicious: bool,
    inspected_malicious: bool,
    true_outcome: bool,
) -> bool {
    if friend_malicious {
        inspected_malicious
    } else {
        true_outcome
    }
}

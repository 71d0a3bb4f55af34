use std::collections::HashMap;

use crate::idspace::NodeIdx;

/// Stored payload. Fabricated values carry `forged = true`, so they can never
/// compare equal to a genuine value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Value {
    pub payload: u64,
    pub forged: bool,
}

impl Value {
    pub fn genuine(payload: u64) -> Self {
        Self {
            payload,
            forged: false,
        }
    }
}

/// Per-node key/value store; one value per key per holder.
#[derive(Debug, Clone, Default)]
pub struct Storage {
    per_node: HashMap<NodeIdx, HashMap<u64, Value>>,
}

impl Storage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn store(&mut self, holder: NodeIdx, key: u64, value: Value) {
        self.per_node.entry(holder).or_default().insert(key, value);
    }

    pub fn get(&self, holder: NodeIdx, key: u64) -> Option<Value> {
        self.per_node
            .get(&holder)
            .and_then(|m| m.get(&key))
            .copied()
    }

    pub fn held_by(&self, holder: NodeIdx) -> usize {
        self.per_node.get(&holder).map_or(0, HashMap::len)
    }
}

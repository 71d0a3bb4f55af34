//! Kademlia-style DHT layer: XOR metric, k-bucket routing tables, the
//! iterative lookup and replicated put/get.

pub mod distance;
pub mod lookup;
pub mod overlay;
pub mod replication;
pub mod routing;
pub mod storage;

pub use distance::{xor_distance, LookupKey, Rank};
pub use lookup::{iterative_lookup, lookup_via, LookupOutcome, LookupParams, LookupTrace};
pub use overlay::{FillStrategy, Overlay, OverlayParams};
pub use replication::{
    majority_vote, replicated_get, replicated_put, ReplicaOutcome, ReplicaReply,
};
pub use routing::{PeerRecord, RoutingTable};
pub use storage::{Storage, Value};

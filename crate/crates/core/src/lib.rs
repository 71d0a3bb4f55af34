//! Simulator and library for a Sybil-resistant Kademlia DHT with
//! hierarchically allocated node IDs and inspection-lookup based Sybil
//! detection.
//!
//! The pipeline mirrors how such a network is evaluated:
//!
//! 1. [`graph`] ingests a social-network edge list.
//! 2. [`idspace`] grows a bootstrap tree over it by breadth-first invitation,
//!    carving each node's ID chunk out of its inviter's.
//! 3. [`adversary`] attaches Sybil subtrees through attack edges.
//! 4. [`dht`] fills routing tables and runs replicated iterative lookups.
//! 5. [`defense`] selects collaborative friends, runs the inspection
//!    campaign and filters lookups by ancestor status.
//! 6. [`experiment`] wires the above into seeded, reproducible runs and
//!    writes CSV metrics; [`analytic`] holds the closed-form estimates that
//!    the measurements are compared against.

pub mod adversary;
pub mod analytic;
pub mod defense;
pub mod dht;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod idspace;
pub mod rng;

pub use error::{Error, Result};
pub use experiment::{run_experiment, sweep, ExperimentConfig, MetricsReport};
pub use graph::{GraphStats, SocialGraph};
pub use idspace::{BootstrapTree, Chunk, IdCertificate, IdSpace, NodeId, NodeIdx};

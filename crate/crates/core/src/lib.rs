//! Round-based simulator for clustered, energy-heterogeneous wireless
//! sensor networks.
//!
//! Three clustering protocols are provided behind the
//! [`ClusteringProtocol`](protocol::ClusteringProtocol) trait and selected
//! by name through a [`ProtocolRegistry`](protocol::ProtocolRegistry):
//! `leach`, `sep` and `eacp`.

pub mod config;
pub mod election;
pub mod energy;
pub mod engine;
pub mod experiment;
pub mod export;
pub mod metrics;
pub mod net;
pub mod plot;
pub mod protocol;
pub mod routing;

pub use config::{ConfigError, RadioParams, SimConfig};
pub use engine::{run_simulation, RoundRecord, SimOutput, Simulation};
pub use metrics::{aggregate_runs, summarize, AggregateSummary, Summary};
pub use net::{Node, NodeId, NodeKind, Position};
pub use protocol::{ClusteringProtocol, ProtocolRegistry};

//! Wireless-sensor-network jamming simulator with a two-colony
//! sensitive-ant router.
//!
//! Jammers raise the noise floor around sensor nodes; nodes whose SNR
//! falls below one are flagged, their links drop to zero quality, and the
//! ant search re-routes traffic from affected sources to the processing
//! element over what remains of the network.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ants;
pub mod cli;
pub mod config;
pub mod jammer;
pub mod metrics;
pub mod network;
pub mod output;
pub mod rng;
pub mod sim;

pub use ants::{run_search, SearchParams};
pub use config::ScenarioConfig;
pub use network::{Network, NodeId, Point};
pub use sim::{run_scenario, RunReport, Simulation};

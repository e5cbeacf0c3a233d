//! Two-colony sensitive-ant search.
//!
//! Low-sensitivity ants (`Explorer`, PSL in `(0, 0.5)`) sample the next hop
//! by roulette over the transition probabilities; high-sensitivity ants
//! (`Exploiter`, PSL in `(0.5, 1)`) take the arg-max of the same
//! attractiveness. Pheromone is decayed and reinforced once per iteration
//! from the successful tours.

mod colony;
mod pheromone;
mod search;
mod select;

pub use colony::{adapt_psl, init_colonies, Ant, Colony, Outcome};
pub use pheromone::PheromoneTable;
pub use search::{construct_tour, run_search, IterationStats, SearchOutcome, TourOutcome};
pub use select::{choose_next_exploiter, choose_next_explorer, transition_probabilities};

use crate::metrics::TourQualityRule;
use crate::network::NodeId;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("search parameter `{name}` {reason}")]
    InvalidParam {
        name: &'static str,
        reason: &'static str,
    },
    #[error("colonies are empty")]
    NoAnts,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("no link from {0} to {1}")]
    UnknownLink(NodeId, NodeId),
    #[error("source and destination are both {0}")]
    SameEndpoints(NodeId),
    #[error("no candidate with positive attractiveness")]
    DeadEnd,
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
}

/// When the global pheromone update runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateSchedule {
    /// Once per iteration over all successful tours.
    #[default]
    Batch,
    /// After every successful ant, in ant-id order.
    PerAnt,
}

impl UpdateSchedule {
    pub fn name(&self) -> &'static str {
        match self {
            UpdateSchedule::Batch => "batch",
            UpdateSchedule::PerAnt => "per-ant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "batch" => Some(Self::Batch),
            "per-ant" => Some(Self::PerAnt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Deposit constant `Q`.
    pub q: f64,
    /// Trail retention `rho`: old pheromone is multiplied by it.
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_spsl: usize,
    pub n_hpsl: usize,
    pub iterations: usize,
    pub phi0: f64,
    pub psl_delta: f64,
    pub update: UpdateSchedule,
    pub tour_quality: TourQualityRule,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            q: 1.0,
            rho: 0.9,
            alpha: 1.0,
            beta: 1.0,
            n_spsl: 10,
            n_hpsl: 10,
            iterations: 200,
            phi0: 1.0,
            psl_delta: 0.1,
            update: UpdateSchedule::Batch,
            tour_quality: TourQualityRule::GeometricMean,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |name, reason| Err(SearchError::InvalidParam { name, reason });
        if !(self.q.is_finite() && self.q >= 0.0) {
            return bad("q", "must be finite and >= 0");
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad("rho", "must lie in [0, 1]");
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad("alpha", "must be finite and >= 0");
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad("beta", "must be finite and >= 0");
        }
        if self.n_spsl + self.n_hpsl == 0 {
            return Err(SearchError::NoAnts);
        }
        if self.iterations == 0 {
            return bad("iterations", "must be >= 1");
        }
        if !(self.phi0.is_finite() && self.phi0 > 0.0) {
            return bad("phi0", "must be finite and > 0");
        }
        if !(0.0..1.0).contains(&self.psl_delta) {
            return bad("psl_delta", "must lie in [0, 1)");
        }
        Ok(())
    }
}

use super::SearchParams;
use crate::metrics::TourRecord;
use crate::network::{LinkId, Network, NodeId};

/// Pheromone intensity per directed link.
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneTable {
    phi: Vec<f64>,
}

impl PheromoneTable {
    pub fn new(net: &Network, phi0: f64) -> Self {
        Self {
            phi: vec![phi0; net.link_count()],
        }
    }

    pub fn get(&self, link: LinkId) -> f64 {
        self.phi[link.0]
    }

    pub fn set(&mut self, link: LinkId, value: f64) {
        assert!(value >= 0.0, "pheromone must stay non-negative");
        self.phi[link.0] = value;
    }

    pub fn between(&self, net: &Network, i: NodeId, j: NodeId) -> Option<f64> {
        net.link_id(i, j).map(|l| self.phi[l.0])
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn scale(&mut self, factor: f64) {
        for p in &mut self.phi {
            *p *= factor;
        }
    }

    /// `phi <- rho * phi` on every link, then `Q / (D_t * eta_t)` on each
    /// link of every tour.
    pub fn global_update(&mut self, net: &Network, tours: &[&TourRecord], params: &SearchParams) {
        self.scale(params.rho);
        for tour in tours {
            debug_assert!(tour.distance > 0.0 && tour.eta > 0.0);
            let deposit = params.q / (tour.distance * tour.eta);
            for w in tour.path.windows(2) {
                let link = net.link_id(w[0], w[1]).expect("tour follows network links");
                self.phi[link.0] += deposit;
            }
        }
    }
}

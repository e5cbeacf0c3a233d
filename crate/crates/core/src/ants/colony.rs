use super::{SearchError, SearchParams};
use crate::network::NodeId;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Colony {
    /// sPSL: small sensitivity, roulette choice.
    Explorer,
    /// hPSL: high sensitivity, arg-max choice.
    Exploiter,
}

impl Colony {
    /// Open PSL interval of the colony.
    pub fn interval(&self) -> (f64, f64) {
        match self {
            Colony::Explorer => (0.0, 0.5),
            Colony::Exploiter => (0.5, 1.0),
        }
    }

    pub fn contains(&self, psl: f64) -> bool {
        let (lo, hi) = self.interval();
        psl > lo && psl < hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ant {
    pub id: usize,
    pub colony: Colony,
    pub psl: f64,
    /// Visited nodes with the residual energy seen on arrival.
    pub tabu: Vec<(NodeId, f64)>,
    pub tour: Vec<NodeId>,
    pub distance: f64,
}

impl Ant {
    pub fn new(id: usize, colony: Colony, psl: f64) -> Self {
        Self {
            id,
            colony,
            psl,
            tabu: Vec::new(),
            tour: Vec::new(),
            distance: 0.0,
        }
    }

    pub(crate) fn reset(&mut self) {
        self.tabu.clear();
        self.tour.clear();
        self.distance = 0.0;
    }
}

fn draw_open<R: Rng + ?Sized>(colony: Colony, rng: &mut R) -> f64 {
    let (lo, hi) = colony.interval();
    loop {
        let v = rng.gen_range(lo..hi);
        if v > lo {
            return v;
        }
    }
}

/// `n_spsl` explorers (ids first) followed by `n_hpsl` exploiters, each PSL
/// uniform in its colony's open interval.
pub fn init_colonies<R: Rng + ?Sized>(
    params: &SearchParams,
    rng: &mut R,
) -> Result<Vec<Ant>, SearchError> {
    if params.n_spsl + params.n_hpsl == 0 {
        return Err(SearchError::NoAnts);
    }
    let colonies = std::iter::repeat_n(Colony::Explorer, params.n_spsl)
        .chain(std::iter::repeat_n(Colony::Exploiter, params.n_hpsl));
    Ok(colonies
        .enumerate()
        .map(|(id, c)| Ant::new(id, c, draw_open(c, rng)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Success { score: f64 },
    Failure,
}

/// PSL after one tour. A new best pulls PSL toward the colony's upper
/// bound, a failure toward its lower bound; the result never leaves the
/// open interval.
pub fn adapt_psl(ant: &Ant, outcome: Outcome, best_so_far: f64, psl_delta: f64) -> f64 {
    let (lo, hi) = ant.colony.interval();
    let psl = ant.psl;
    let next = match outcome {
        Outcome::Success { score } if score >= best_so_far => psl + psl_delta * (hi - psl),
        Outcome::Failure => psl - psl_delta * (psl - lo),
        Outcome::Success { .. } => psl,
    };
    next.clamp(lo.next_up(), hi.next_down())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn colony_sizes_and_intervals() {
        let params = SearchParams {
            n_spsl: 5,
            n_hpsl: 5,
            ..SearchParams::default()
        };
        let ants = init_colonies(&params, &mut substream(1, &[])).unwrap();
        assert_eq!(ants.len(), 10);
        assert!(ants[..5].iter().all(|a| a.colony == Colony::Explorer));
        assert!(ants.iter().all(|a| a.colony.contains(a.psl)));
        assert!(ants.iter().all(|a| a.tabu.is_empty() && a.tour.is_empty()));
    }

    #[test]
    fn degenerate_colony() {
        let params = SearchParams {
            n_spsl: 0,
            n_hpsl: 1,
            ..SearchParams::default()
        };
        let ants = init_colonies(&params, &mut substream(1, &[])).unwrap();
        assert_eq!(ants.len(), 1);
        assert_eq!(ants[0].colony, Colony::Exploiter);
        let none = SearchParams {
            n_spsl: 0,
            n_hpsl: 0,
            ..params
        };
        assert_eq!(
            init_colonies(&none, &mut substream(1, &[])),
            Err(SearchError::NoAnts)
        );
    }

    #[test]
    fn seeded_draws_repeat() {
        let p = SearchParams::default();
        let a = init_colonies(&p, &mut substream(9, &[])).unwrap();
        let b = init_colonies(&p, &mut substream(9, &[])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn adaptation_examples() {
        let spsl = Ant::new(0, Colony::Explorer, 0.4);
        let win = Outcome::Success { score: 2.0 };
        assert_eq!(adapt_psl(&spsl, win, 1.0, 0.0), 0.4);
        assert_eq!(adapt_psl(&spsl, Outcome::Failure, 1.0, 0.0), 0.4);
        assert!((adapt_psl(&spsl, win, 1.0, 0.5) - 0.45).abs() < 1e-15);
        assert_eq!(
            adapt_psl(&spsl, Outcome::Success { score: 0.5 }, 1.0, 0.5),
            0.4
        );

        let hpsl = Ant::new(1, Colony::Exploiter, 0.6);
        assert!((adapt_psl(&hpsl, Outcome::Failure, 1.0, 0.5) - 0.55).abs() < 1e-15);
    }

    #[test]
    fn saturation_stays_inside_interval() {
        let mut ant = Ant::new(0, Colony::Exploiter, 0.9);
        for _ in 0..2000 {
            ant.psl = adapt_psl(&ant, Outcome::Success { score: 1.0 }, 0.0, 0.9);
        }
        assert!(ant.psl < 1.0);
        for _ in 0..2000 {
            ant.psl = adapt_psl(&ant, Outcome::Failure, 0.0, 0.9);
        }
        assert!(ant.psl > 0.5);
    }
}

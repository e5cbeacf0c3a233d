use super::colony::{adapt_psl, init_colonies, Ant, Colony, Outcome};
use super::select::{choose_next_exploiter, choose_next_explorer, transition_probabilities};
use super::{PheromoneTable, SearchError, SearchParams, UpdateSchedule};
use crate::metrics::{EtaTable, TourRecord};
use crate::network::{Network, NodeId};
use crate::rng::{substream, tag};
use rand::Rng;
use serde::Serialize;
use std::io;

#[derive(Debug, Clone, PartialEq)]
pub enum TourOutcome {
    Complete(TourRecord),
    /// The ant ran out of feasible moves at `at`.
    DeadEnd {
        at: NodeId,
    },
}

impl TourOutcome {
    pub fn tour(&self) -> Option<&TourRecord> {
        match self {
            TourOutcome::Complete(t) => Some(t),
            TourOutcome::DeadEnd { .. } => None,
        }
    }
}

fn check_endpoints(net: &Network, source: NodeId, dest: NodeId) -> Result<(), SearchError> {
    for n in [source, dest] {
        if !net.contains(n) {
            return Err(SearchError::UnknownNode(n));
        }
    }
    if source == dest {
        return Err(SearchError::SameEndpoints(source));
    }
    Ok(())
}

/// Walks one ant from `source` toward `dest` using its colony's rule.
/// Candidates are live neighbors not yet in the tabu list whose link
/// quality is positive.
#[allow(clippy::too_many_arguments)]
pub fn construct_tour<R: Rng + ?Sized>(
    ant: &mut Ant,
    source: NodeId,
    dest: NodeId,
    net: &Network,
    phi: &PheromoneTable,
    eta: &EtaTable,
    params: &SearchParams,
    rng: &mut R,
) -> Result<TourOutcome, SearchError> {
    check_endpoints(net, source, dest)?;
    ant.reset();
    let mut visited = vec![false; net.len()];
    let visit = |ant: &mut Ant, visited: &mut [bool], n: NodeId| {
        visited[n.0] = true;
        ant.tabu.push((n, net.energy(n)));
        ant.tour.push(n);
    };
    if !net.is_alive(source) || !net.is_alive(dest) {
        return Ok(TourOutcome::DeadEnd { at: source });
    }
    visit(ant, &mut visited, source);

    let mut current = source;
    let mut candidates = Vec::new();
    while current != dest {
        candidates.clear();
        candidates.extend(
            net.live_links_from(current)
                .filter(|&(l, v)| !visited[v.0] && eta.get(l) > 0.0)
                .map(|(_, v)| v),
        );
        if candidates.is_empty() {
            return Ok(TourOutcome::DeadEnd { at: current });
        }
        let choice = match ant.colony {
            Colony::Explorer => {
                transition_probabilities(net, current, &candidates, phi, eta, params)
                    .and_then(|dist| choose_next_explorer(&dist, rng))
            }
            Colony::Exploiter => choose_next_exploiter(net, current, &candidates, phi, eta, params),
        };
        let next = match choice {
            Ok(n) => n,
            Err(SearchError::DeadEnd) => return Ok(TourOutcome::DeadEnd { at: current }),
            Err(e) => return Err(e),
        };
        ant.distance += net
            .distance(current, next)
            .expect("candidate is a neighbor");
        visit(ant, &mut visited, next);
        current = next;
    }

    let record = TourRecord::new(net, ant.tour.clone(), eta, params.tour_quality)
        .expect("tabu walk over positive-quality links is a valid tour");
    debug_assert_eq!(record.distance, ant.distance);
    Ok(TourOutcome::Complete(record))
}

/// Per-iteration search statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationStats {
    pub iteration: usize,
    /// Best score found so far.
    pub best_score: Option<f64>,
    /// Mean score of this iteration's successful tours.
    pub mean_score: Option<f64>,
    pub successes: usize,
    pub mean_psl_spsl: Option<f64>,
    pub mean_psl_hpsl: Option<f64>,
}

impl IterationStats {
    pub const COLUMNS: [&'static str; 6] = [
        "iteration",
        "best_score",
        "mean_score",
        "successes",
        "mean_psl_spsl",
        "mean_psl_hpsl",
    ];

    pub fn write_csv<W: io::Write>(stats: &[IterationStats], out: W) -> csv::Result<()> {
        let opt = |v: Option<f64>| v.map(crate::output::fmt_sig).unwrap_or_default();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::COLUMNS)?;
        for s in stats {
            w.write_record([
                s.iteration.to_string(),
                opt(s.best_score),
                opt(s.mean_score),
                s.successes.to_string(),
                opt(s.mean_psl_spsl),
                opt(s.mean_psl_hpsl),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Best tour by `eta_t / D_t`, `None` if no ant ever arrived.
    pub best: Option<TourRecord>,
    pub pheromone: PheromoneTable,
    pub stats: Vec<IterationStats>,
    pub ants: Vec<Ant>,
    /// Ant hops transmitted by each node over the whole search.
    pub hops_sent: Vec<u64>,
}

impl SearchOutcome {
    pub fn found(&self) -> bool {
        self.best.is_some()
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Runs the two colonies for `params.iterations` rounds from `source` to
/// `dest`. Every ant of every iteration draws from its own substream of
/// `seed`, so the result is a pure function of the inputs.
pub fn run_search(
    net: &Network,
    source: NodeId,
    dest: NodeId,
    eta: &EtaTable,
    params: &SearchParams,
    seed: u64,
) -> Result<SearchOutcome, SearchError> {
    params.validate()?;
    check_endpoints(net, source, dest)?;

    let mut phi = PheromoneTable::new(net, params.phi0);
    let mut ants = init_colonies(params, &mut substream(seed, &[tag::ANT]))?;
    let mut best: Option<TourRecord> = None;
    let mut stats = Vec::with_capacity(params.iterations);
    let mut hops_sent = vec![0u64; net.len()];

    for it in 0..params.iterations {
        let best_before = best.as_ref().map_or(f64::NEG_INFINITY, TourRecord::score);
        let mut outcomes = Vec::with_capacity(ants.len());
        for ant in ants.iter_mut() {
            let mut rng = substream(seed, &[tag::ANT, it as u64, ant.id as u64]);
            let outcome = construct_tour(ant, source, dest, net, &phi, eta, params, &mut rng)?;
            for w in ant.tour.windows(2) {
                hops_sent[w[0].0] += 1;
            }
            if params.update == UpdateSchedule::PerAnt {
                if let Some(t) = outcome.tour() {
                    phi.global_update(net, &[t], params);
                }
            }
            outcomes.push(outcome);
        }

        for (ant, outcome) in ants.iter_mut().zip(&outcomes) {
            let o = match outcome.tour() {
                Some(t) => Outcome::Success { score: t.score() },
                None => Outcome::Failure,
            };
            ant.psl = adapt_psl(ant, o, best_before, params.psl_delta);
        }

        let tours: Vec<&TourRecord> = outcomes.iter().filter_map(TourOutcome::tour).collect();
        for t in &tours {
            if best.as_ref().is_none_or(|b| t.score() > b.score()) {
                best = Some((*t).clone());
            }
        }
        if params.update == UpdateSchedule::Batch {
            phi.global_update(net, &tours, params);
        }

        let colony_psl = |c: Colony| mean(ants.iter().filter(|a| a.colony == c).map(|a| a.psl));
        stats.push(IterationStats {
            iteration: it,
            best_score: best.as_ref().map(TourRecord::score),
            mean_score: mean(tours.iter().map(|t| t.score())),
            successes: tours.len(),
            mean_psl_spsl: colony_psl(Colony::Explorer),
            mean_psl_hpsl: colony_psl(Colony::Exploiter),
        });
    }

    Ok(SearchOutcome {
        best,
        pheromone: phi,
        stats,
        ants,
        hops_sent,
    })
}

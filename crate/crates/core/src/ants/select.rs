use super::{PheromoneTable, SearchError, SearchParams};
use crate::metrics::EtaTable;
use crate::network::{Network, NodeId};
use rand::Rng;

/// `ln[(phi * eta)^alpha * (1 / D)^beta]`, or `None` when `phi * eta` is
/// zero. Working in log space keeps large exponents from overflowing.
fn log_attractiveness(phi: f64, eta: f64, d: f64, params: &SearchParams) -> Option<f64> {
    let trail = phi * eta;
    if !(trail > 0.0) {
        return None;
    }
    let mut w = 0.0;
    if params.alpha != 0.0 {
        w += params.alpha * trail.ln();
    }
    if params.beta != 0.0 {
        w -= params.beta * d.ln();
    }
    Some(w)
}

fn scores(
    net: &Network,
    i: NodeId,
    candidates: &[NodeId],
    phi: &PheromoneTable,
    eta: &EtaTable,
    params: &SearchParams,
) -> Result<Vec<Option<f64>>, SearchError> {
    candidates
        .iter()
        .map(|&j| {
            let link = net.link_id(i, j).ok_or(SearchError::UnknownLink(i, j))?;
            Ok(log_attractiveness(
                phi.get(link),
                eta.get(link),
                net.link_length(link),
                params,
            ))
        })
        .collect()
}

/// Transition probabilities from `i` over `candidates`. Nodes outside the
/// candidate set implicitly get probability zero.
pub fn transition_probabilities(
    net: &Network,
    i: NodeId,
    candidates: &[NodeId],
    phi: &PheromoneTable,
    eta: &EtaTable,
    params: &SearchParams,
) -> Result<Vec<(NodeId, f64)>, SearchError> {
    let logs = scores(net, i, candidates, phi, eta, params)?;
    let top = logs
        .iter()
        .flatten()
        .copied()
        .max_by(f64::total_cmp)
        .ok_or(SearchError::DeadEnd)?;
    let weights: Vec<f64> = logs
        .iter()
        .map(|w| w.map_or(0.0, |w| (w - top).exp()))
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(candidates
        .iter()
        .zip(weights)
        .map(|(&j, w)| (j, w / total))
        .collect())
}

/// Roulette-wheel draw from a normalized distribution.
pub fn choose_next_explorer<R: Rng + ?Sized>(
    dist: &[(NodeId, f64)],
    rng: &mut R,
) -> Result<NodeId, SearchError> {
    if dist.is_empty() {
        return Err(SearchError::DeadEnd);
    }
    let total: f64 = dist.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(SearchError::NotNormalized(total));
    }
    let mut ball = rng.gen::<f64>() * total;
    for &(j, p) in dist {
        if ball < p {
            return Ok(j);
        }
        ball -= p;
    }
    // Rounding left the ball past the last slot; take the last live entry.
    dist.iter()
        .rev()
        .find(|(_, p)| *p > 0.0)
        .map(|(j, _)| *j)
        .ok_or(SearchError::DeadEnd)
}

/// Arg-max of the attractiveness; ties go to the smallest node id.
pub fn choose_next_exploiter(
    net: &Network,
    i: NodeId,
    candidates: &[NodeId],
    phi: &PheromoneTable,
    eta: &EtaTable,
    params: &SearchParams,
) -> Result<NodeId, SearchError> {
    let logs = scores(net, i, candidates, phi, eta, params)?;
    let mut best: Option<(NodeId, f64)> = None;
    for (&j, w) in candidates.iter().zip(logs) {
        let Some(w) = w else { continue };
        best = match best {
            Some((bj, bw)) if bw > w || (bw == w && bj < j) => Some((bj, bw)),
            _ => Some((j, w)),
        };
    }
    best.map(|(j, _)| j).ok_or(SearchError::DeadEnd)
}

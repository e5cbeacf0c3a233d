//! Per-link performance factors, the link quality `eta` and tour quality.
//!
//! Every factor is a cost-style measurement normalized into `[0, 1]` with
//! [`normalize_metric`], so 1 is a perfect link and 0 a dead one. The link
//! quality is the plain product of the six factors.

use crate::jammer::RadioModel;
use crate::network::{LinkId, Network, NodeId};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::io;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("normalization total must be positive, got {0}")]
    NonPositiveTotal(f64),
    #[error("actual value {actual} outside [0, {total}]")]
    OutOfRange { actual: f64, total: f64 },
    #[error("factor `{0}` outside [0, 1]")]
    FactorOutOfRange(&'static str),
    #[error("no link from {0} to {1}")]
    UnknownLink(NodeId, NodeId),
    #[error("tour is empty")]
    EmptyTour,
    #[error("tour revisits node {0}")]
    RepeatedNode(NodeId),
    #[error("tour crosses dead link {0} -> {1}")]
    DeadLink(NodeId, NodeId),
}

/// `(total - actual) / total`: zero cost maps to 1, full cost to 0.
pub fn normalize_metric(actual: f64, total: f64) -> Result<f64, MetricError> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(MetricError::NonPositiveTotal(total));
    }
    if !(0.0..=total).contains(&actual) {
        return Err(MetricError::OutOfRange { actual, total });
    }
    Ok((total - actual) / total)
}

fn normalize_clamped(actual: f64, total: f64) -> f64 {
    normalize_metric(actual.clamp(0.0, total), total).unwrap_or(0.0)
}

/// The six normalized factors of one directed link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub hop: f64,
    pub energy: f64,
    pub bit_error: f64,
    pub snr: f64,
    pub delivery: f64,
    pub loss: f64,
}

impl LinkMetrics {
    pub const PERFECT: Self = Self {
        hop: 1.0,
        energy: 1.0,
        bit_error: 1.0,
        snr: 1.0,
        delivery: 1.0,
        loss: 1.0,
    };

    pub const DEAD: Self = Self {
        hop: 0.0,
        energy: 0.0,
        bit_error: 0.0,
        snr: 0.0,
        delivery: 0.0,
        loss: 0.0,
    };

    pub fn validate(&self) -> Result<(), MetricError> {
        let named = [
            ("H", self.hop),
            ("E", self.energy),
            ("B", self.bit_error),
            ("SNR", self.snr),
            ("Pd", self.delivery),
            ("Pl", self.loss),
        ];
        for (name, v) in named {
            if !(0.0..=1.0).contains(&v) {
                return Err(MetricError::FactorOutOfRange(name));
            }
        }
        Ok(())
    }
}

/// `eta_ij = H * E * B * SNR * Pd * Pl`.
pub fn link_quality(m: &LinkMetrics) -> f64 {
    m.hop * m.energy * m.bit_error * m.snr * m.delivery * m.loss
}

/// How per-link qualities along a tour fold into the tour quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TourQualityRule {
    #[default]
    GeometricMean,
    Product,
    LastLink,
}

impl TourQualityRule {
    pub fn name(&self) -> &'static str {
        match self {
            TourQualityRule::GeometricMean => "geometric-mean",
            TourQualityRule::Product => "product",
            TourQualityRule::LastLink => "last-link",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "geometric-mean" => Some(Self::GeometricMean),
            "product" => Some(Self::Product),
            "last-link" => Some(Self::LastLink),
            _ => None,
        }
    }

    pub(crate) fn fold(&self, etas: &mut [f64]) -> f64 {
        match self {
            TourQualityRule::LastLink => *etas.last().expect("nonempty"),
            TourQualityRule::Product => {
                // Sorted so that reversed paths fold bit-identically.
                etas.sort_by(f64::total_cmp);
                etas.iter().product()
            }
            TourQualityRule::GeometricMean => {
                if etas.len() == 1 {
                    return etas[0];
                }
                etas.sort_by(f64::total_cmp);
                let mean_log = etas.iter().map(|e| e.ln()).sum::<f64>() / etas.len() as f64;
                mean_log.exp().min(1.0)
            }
        }
    }
}

/// Link quality of every directed link of a network, indexed by [`LinkId`].
#[derive(Debug, Clone, PartialEq)]
pub struct EtaTable {
    values: Vec<f64>,
    factors: Option<Vec<LinkMetrics>>,
}

impl EtaTable {
    pub fn uniform(net: &Network, eta: f64) -> Self {
        Self {
            values: vec![eta; net.link_count()],
            factors: None,
        }
    }

    pub fn from_fn(net: &Network, mut f: impl FnMut(NodeId, NodeId) -> f64) -> Self {
        let values = (0..net.link_count())
            .map(|k| {
                let (i, j) = net.link_endpoints(LinkId(k));
                f(i, j)
            })
            .collect();
        Self {
            values,
            factors: None,
        }
    }

    pub fn from_metrics(metrics: Vec<LinkMetrics>) -> Self {
        Self {
            values: metrics.iter().map(link_quality).collect(),
            factors: Some(metrics),
        }
    }

    pub fn get(&self, link: LinkId) -> f64 {
        self.values[link.0]
    }

    pub fn set(&mut self, link: LinkId, eta: f64) {
        self.values[link.0] = eta;
        // Overridden values no longer follow from the factors.
        self.factors = None;
    }

    pub fn between(&self, net: &Network, i: NodeId, j: NodeId) -> Option<f64> {
        net.link_id(i, j).map(|l| self.values[l.0])
    }

    pub fn factors(&self) -> Option<&[LinkMetrics]> {
        self.factors.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Debug dump: `i,j,H,E,B,SNR,Pd,Pl,eta`, one row per directed link.
    /// Factor columns are empty when the table was not measured.
    pub fn write_csv<W: io::Write>(&self, net: &Network, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "H", "E", "B", "SNR", "Pd", "Pl", "eta"])?;
        for (k, &eta) in self.values.iter().enumerate() {
            let (i, j) = net.link_endpoints(LinkId(k));
            let mut row = vec![i.to_string(), j.to_string()];
            match self.factors.as_ref().map(|f| f[k]) {
                Some(m) => row.extend(
                    [m.hop, m.energy, m.bit_error, m.snr, m.delivery, m.loss]
                        .iter()
                        .map(|v| crate::output::fmt_sig(*v)),
                ),
                None => row.extend(std::iter::repeat_n(String::new(), 6)),
            }
            row.push(crate::output::fmt_sig(eta));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A completed source-to-destination walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TourRecord {
    pub path: Vec<NodeId>,
    /// Total traveled distance `D_t`.
    pub distance: f64,
    /// Tour quality `eta_t`.
    pub eta: f64,
}

impl TourRecord {
    pub fn new(
        net: &Network,
        path: Vec<NodeId>,
        eta: &EtaTable,
        rule: TourQualityRule,
    ) -> Result<Self, MetricError> {
        let quality = tour_quality(net, &path, eta, rule)?;
        let distance = net.path_length(&path).expect("validated by tour_quality");
        Ok(Self {
            path,
            distance,
            eta: quality,
        })
    }

    /// Ranking score `eta_t / D_t`; higher is better.
    pub fn score(&self) -> f64 {
        self.eta / self.distance
    }

    pub fn hops(&self) -> usize {
        self.path.len().saturating_sub(1)
    }
}

/// Quality `eta_t` of a simple path with at least one link.
pub fn tour_quality(
    net: &Network,
    path: &[NodeId],
    eta: &EtaTable,
    rule: TourQualityRule,
) -> Result<f64, MetricError> {
    if path.len() < 2 {
        return Err(MetricError::EmptyTour);
    }
    for (k, n) in path.iter().enumerate() {
        if path[..k].contains(n) {
            return Err(MetricError::RepeatedNode(*n));
        }
    }
    let mut etas = Vec::with_capacity(path.len() - 1);
    for w in path.windows(2) {
        let link = net
            .link_id(w[0], w[1])
            .ok_or(MetricError::UnknownLink(w[0], w[1]))?;
        let e = eta.get(link);
        if !(e > 0.0) {
            return Err(MetricError::DeadLink(w[0], w[1]));
        }
        etas.push(e);
    }
    Ok(rule.fold(&mut etas))
}

/// Normalization totals and clean-state conventions for [`measure_link`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Hop-count total; `None` uses the node count.
    pub hop_total: Option<f64>,
    pub energy_total: f64,
    /// SNR at or above this saturates the SNR factor at 1.
    pub snr_total: f64,
    /// Length of the rolling delivery/loss windows.
    pub counter_window: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            hop_total: None,
            energy_total: 1e6,
            snr_total: 10.0,
            counter_window: 32,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Window {
    outcomes: VecDeque<bool>,
    failures: usize,
}

impl Window {
    fn push(&mut self, ok: bool, cap: usize) {
        if cap == 0 {
            return;
        }
        if self.outcomes.len() == cap && self.outcomes.pop_front() == Some(false) {
            self.failures -= 1;
        }
        self.outcomes.push_back(ok);
        if !ok {
            self.failures += 1;
        }
    }

    /// Failure share with one phantom success: empty windows read 1 and a
    /// window of pure failures stays strictly positive.
    fn factor(&self) -> f64 {
        let total = (self.outcomes.len() + 1) as f64;
        normalize_clamped(self.failures as f64, total)
    }
}

/// Rolling per-link packet outcomes.
#[derive(Debug, Clone)]
pub struct LinkCounters {
    window: usize,
    hop: Vec<Window>,
    end_to_end: Vec<Window>,
}

impl LinkCounters {
    pub fn new(net: &Network, window: usize) -> Self {
        Self {
            window,
            hop: vec![Window::default(); net.link_count()],
            end_to_end: vec![Window::default(); net.link_count()],
        }
    }

    /// A packet attempted `link`; `ok` is false if it was lost on arrival.
    pub fn record_hop(&mut self, link: LinkId, ok: bool) {
        self.hop[link.0].push(ok, self.window);
    }

    /// A packet that crossed `link` finished, delivered or not.
    pub fn record_end_to_end(&mut self, link: LinkId, delivered: bool) {
        self.end_to_end[link.0].push(delivered, self.window);
    }

    pub fn delivery_factor(&self, link: LinkId) -> f64 {
        self.end_to_end[link.0].factor()
    }

    pub fn loss_factor(&self, link: LinkId) -> f64 {
        self.hop[link.0].factor()
    }
}

/// Simulation state a link measurement reads from.
pub struct MeasureContext<'a> {
    pub net: &'a Network,
    pub radio: &'a RadioModel,
    /// Received noise power per node.
    pub noise: &'a [f64],
    /// Nodes currently flagged as jammed.
    pub flagged: &'a [bool],
    /// Hop distance of each node to the processing element.
    pub hops_to_pe: &'a [Option<usize>],
    pub counters: &'a LinkCounters,
    pub config: &'a MetricConfig,
}

/// Measures the six factors of link `i -> j`.
pub fn measure_link(
    ctx: &MeasureContext<'_>,
    i: NodeId,
    j: NodeId,
) -> Result<LinkMetrics, MetricError> {
    let link = ctx
        .net
        .link_id(i, j)
        .ok_or(MetricError::UnknownLink(i, j))?;
    Ok(measure(ctx, link))
}

fn measure(ctx: &MeasureContext<'_>, link: LinkId) -> LinkMetrics {
    let net = ctx.net;
    let cfg = ctx.config;
    let (i, j) = net.link_endpoints(link);

    let hop_total = cfg.hop_total.unwrap_or(net.len() as f64);
    let hops = ctx.hops_to_pe[j.0].map_or(hop_total, |h| h as f64);
    let hop = normalize_clamped(hops, hop_total);

    let energy = normalize_clamped(cfg.energy_total - net.energy(j), cfg.energy_total);

    let snr = if ctx.flagged[i.0] || ctx.flagged[j.0] {
        0.0
    } else {
        let s = ctx.radio.tx_power * ctx.radio.path_gain(net.link_length(link)) / ctx.noise[j.0];
        normalize_clamped(cfg.snr_total - s.min(cfg.snr_total), cfg.snr_total)
    };

    LinkMetrics {
        hop,
        energy,
        // No bit-error table: the SNR factor doubles as the BER proxy.
        bit_error: snr,
        snr,
        delivery: ctx.counters.delivery_factor(link),
        loss: ctx.counters.loss_factor(link),
    }
}

/// Measures every directed link.
pub fn measure_all(ctx: &MeasureContext<'_>) -> EtaTable {
    let metrics = (0..ctx.net.link_count())
        .map(|k| measure(ctx, LinkId(k)))
        .collect();
    EtaTable::from_metrics(metrics)
}

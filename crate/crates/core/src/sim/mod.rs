//! Discrete-time scenario loop.
//!
//! Each step: jammers emit, per-node noise and jammed flags are refreshed,
//! link qualities are re-measured, in-flight packets advance one hop and
//! sources emit new packets. [`Simulation::detect_and_reroute`] then runs
//! a fresh ant search for every source whose route touches a flagged or
//! dead node.

mod report;

pub use report::{emit_report, RunReport, SearchRecord, SearchTrigger, StepRecord, CSV_COLUMNS};

use crate::ants::{run_search, SearchError};
use crate::config::ScenarioConfig;
use crate::jammer::{emissions_at, Emission, JammerKind, JammerRuntime, RadioError};
use crate::metrics::{measure_all, EtaTable, LinkCounters, MeasureContext};
use crate::network::{Network, NetworkError, NodeId};
use crate::rng::{derive_seed, substream, tag};
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("network: {0}")]
    Network(#[from] NetworkError),
    #[error("radio: {0}")]
    Radio(#[from] RadioError),
    #[error("search: {0}")]
    Search(#[from] SearchError),
    #[error("traffic source {0} is not a sensor node of this network")]
    BadSource(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    /// The holding or receiving node is flagged as jammed.
    Jammed,
    /// The holding or receiving node has no energy left.
    Dead,
    /// The source had no route when the packet was generated.
    NoRoute,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum EventKind {
    Sent {
        packet: u64,
        source: NodeId,
    },
    Delivered {
        packet: u64,
        delay: u64,
    },
    Dropped {
        packet: u64,
        at: NodeId,
        reason: DropReason,
    },
    Flagged {
        node: NodeId,
    },
    Cleared {
        node: NodeId,
    },
    Died {
        node: NodeId,
    },
    Rerouted {
        source: NodeId,
        hops: usize,
    },
    Restored {
        source: NodeId,
    },
    Suspended {
        source: NodeId,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub t: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: u64,
    /// Index into [`ScenarioState::sources`].
    pub source: usize,
    /// Route snapshot taken when the packet was generated.
    pub route: Arc<[NodeId]>,
    /// Index of the current holder in `route`.
    pub hop: usize,
    pub sent_at: u64,
    /// Hop distance from source to PE over live nodes at send time.
    pub min_hops: Option<usize>,
}

impl Packet {
    pub fn holder(&self) -> NodeId {
        self.route[self.hop]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceState {
    pub node: NodeId,
    /// `None` while suspended.
    pub route: Option<Arc<[NodeId]>>,
    pub original: Option<Arc<[NodeId]>>,
    credit: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub latency_sum: u64,
}

#[derive(Debug, Clone)]
pub struct ScenarioState {
    pub time: u64,
    pub net: Network,
    pub jammers: Vec<JammerRuntime>,
    pub sources: Vec<SourceState>,
    pub in_flight: Vec<Packet>,
    pub counters: Counters,
    pub flagged: Vec<bool>,
    streak: Vec<u32>,
    pub noise: Vec<f64>,
    pub eta: EtaTable,
    pub link_counters: LinkCounters,
    /// Nodes that transmitted a packet on the previous step.
    transmitted: Vec<bool>,
    pub reroute_count: u64,
    next_packet: u64,
    search_invocations: u64,
    /// A flag changed or a node died since the last reroute pass.
    dirty: bool,
}

impl ScenarioState {
    pub fn in_flight_count(&self) -> u64 {
        self.in_flight.len() as u64
    }

    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }

    pub fn is_flagged(&self, n: NodeId) -> bool {
        self.flagged[n.0]
    }

    fn blocked(&self, n: NodeId) -> bool {
        self.flagged[n.0] || !self.net.is_alive(n)
    }
}

pub struct Simulation {
    config: ScenarioConfig,
    seed: u64,
    state: ScenarioState,
    initial_energy: Vec<f64>,
    trace: Vec<StepRecord>,
    searches: Vec<SearchRecord>,
    events: Vec<Event>,
    record_stats: bool,
}

impl Simulation {
    /// Builds the network and jammers and installs initial routes found on
    /// the clean, unjammed network.
    pub fn new(config: &ScenarioConfig, seed: u64) -> Result<Self, SimError> {
        config.radio.validate()?;
        config.search.validate()?;
        let net = config.network.build()?;
        let pe = net.processing_element();
        let sources = config.sources(&net);
        for &s in &sources {
            if !net.contains(s) || s == pe {
                return Err(SimError::BadSource(s));
            }
        }
        let jammers = config
            .jammers
            .iter()
            .enumerate()
            .map(|(k, j)| JammerRuntime::new(j.clone(), substream(seed, &[tag::JAMMER, k as u64])))
            .collect();
        let n = net.len();
        let initial_energy = net.nodes().iter().map(|node| node.energy()).collect();
        let link_counters = LinkCounters::new(&net, config.metrics.counter_window);
        let state = ScenarioState {
            time: 0,
            eta: EtaTable::uniform(&net, 1.0),
            jammers,
            sources: sources
                .into_iter()
                .map(|node| SourceState {
                    node,
                    route: None,
                    original: None,
                    credit: 0.0,
                })
                .collect(),
            in_flight: Vec::new(),
            counters: Counters::default(),
            flagged: vec![false; n],
            streak: vec![0; n],
            noise: vec![config.radio.floor; n],
            link_counters,
            transmitted: vec![false; n],
            reroute_count: 0,
            next_packet: 0,
            search_invocations: 0,
            dirty: false,
            net,
        };
        let mut sim = Self {
            config: config.clone(),
            seed,
            state,
            initial_energy,
            trace: Vec::new(),
            searches: Vec::new(),
            events: Vec::new(),
            record_stats: true,
        };
        sim.remeasure();
        for k in 0..sim.state.sources.len() {
            let mut events = Vec::new();
            let route = sim.search_route(k, SearchTrigger::Initial, &mut events);
            let src = &mut sim.state.sources[k];
            src.original = route.clone();
            src.route = route;
            if src.route.is_none() {
                events.push(Event {
                    t: 0,
                    kind: EventKind::Suspended { source: src.node },
                });
            }
            sim.events.extend(events);
        }
        Ok(sim)
    }

    /// Drops per-iteration search statistics from the report to keep it
    /// small.
    pub fn without_search_stats(mut self) -> Self {
        self.record_stats = false;
        for s in &mut self.searches {
            s.stats.clear();
        }
        self
    }

    pub fn state(&self) -> &ScenarioState {
        &self.state
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// Every event emitted so far, in order.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn trace(&self) -> &[StepRecord] {
        &self.trace
    }

    fn remeasure(&mut self) {
        let st = &self.state;
        let pe = st.net.processing_element();
        let hops = st.net.hops_to(pe, |n| !st.flagged[n.0]);
        let ctx = MeasureContext {
            net: &st.net,
            radio: &self.config.radio,
            noise: &st.noise,
            flagged: &st.flagged,
            hops_to_pe: &hops,
            counters: &st.link_counters,
            config: &self.config.metrics,
        };
        let eta = measure_all(&ctx);
        self.state.eta = eta;
    }

    fn drain(&mut self, node: NodeId, amount: f64, t: u64, events: &mut Vec<Event>) {
        if amount > 0.0 && self.state.net.drain_energy(node, amount).unwrap_or(false) {
            self.state.dirty = true;
            events.push(Event {
                t,
                kind: EventKind::Died { node },
            });
        }
    }

    fn finish_packet(&mut self, p: &Packet, upto: usize, delivered: bool) {
        for w in p.route[..=upto].windows(2) {
            if let Some(l) = self.state.net.link_id(w[0], w[1]) {
                self.state.link_counters.record_end_to_end(l, delivered);
            }
        }
    }

    /// Advances the scenario by one step.
    pub fn step(&mut self) -> Vec<Event> {
        let t = self.state.time;
        let mut events = Vec::new();

        // Jammers, with reactive ones sensing last step's transmitters.
        let emissions: Vec<Emission> = {
            let st = &mut self.state;
            let net = &st.net;
            let tx = &st.transmitted;
            emissions_at(&mut st.jammers, t, |j| {
                net.nodes()
                    .iter()
                    .any(|n| tx[n.id.0] && j.covers(n.position))
            })
        };

        // Noise and debounced flags.
        let radio = self.config.radio;
        let k = self.config.debounce.max(1);
        let jammed = radio.jammed_nodes(&self.state.net, &emissions);
        for i in 0..self.state.net.len() {
            let id = NodeId(i);
            self.state.noise[i] = radio.noise_at(self.state.net.position(id), &emissions);
            let st = &mut self.state;
            st.streak[i] = if jammed.contains(&id) {
                st.streak[i].saturating_add(1)
            } else {
                0
            };
            let now = st.streak[i] >= k;
            if now != st.flagged[i] {
                st.flagged[i] = now;
                st.dirty = true;
                events.push(Event {
                    t,
                    kind: if now {
                        EventKind::Flagged { node: id }
                    } else {
                        EventKind::Cleared { node: id }
                    },
                });
            }
        }

        // Deceptive jammers keep their victims' receivers busy.
        let cost = self.config.traffic.deceptive_cost;
        let victims: Vec<NodeId> = {
            let net = &self.state.net;
            self.state
                .jammers
                .iter()
                .zip(&emissions)
                .filter(|(rt, e)| rt.jammer().kind == JammerKind::Deceptive && e.power > 0.0)
                .flat_map(|(rt, _)| {
                    net.nodes()
                        .iter()
                        .filter(move |n| n.is_alive() && rt.jammer().covers(n.position))
                        .map(|n| n.id)
                })
                .collect()
        };
        for v in victims {
            self.drain(v, cost, t, &mut events);
        }

        self.remeasure();

        // Packets advance one hop.
        let mut transmitted = vec![false; self.state.net.len()];
        let packets = std::mem::take(&mut self.state.in_flight);
        let mut still = Vec::with_capacity(packets.len());
        let pe = self.state.net.processing_element();
        for mut p in packets {
            let u = p.holder();
            if self.state.blocked(u) {
                let reason = if self.state.net.is_alive(u) {
                    DropReason::Jammed
                } else {
                    DropReason::Dead
                };
                self.finish_packet(&p, p.hop, false);
                self.state.counters.dropped += 1;
                events.push(Event {
                    t,
                    kind: EventKind::Dropped {
                        packet: p.id,
                        at: u,
                        reason,
                    },
                });
                continue;
            }
            let v = p.route[p.hop + 1];
            transmitted[u.0] = true;
            self.drain(u, self.config.traffic.packet_cost, t, &mut events);
            let link = self.state.net.link_id(u, v).expect("routes follow links");
            if self.state.blocked(v) {
                let reason = if self.state.net.is_alive(v) {
                    DropReason::Jammed
                } else {
                    DropReason::Dead
                };
                self.state.link_counters.record_hop(link, false);
                self.finish_packet(&p, p.hop + 1, false);
                self.state.counters.dropped += 1;
                events.push(Event {
                    t,
                    kind: EventKind::Dropped {
                        packet: p.id,
                        at: v,
                        reason,
                    },
                });
                continue;
            }
            self.state.link_counters.record_hop(link, true);
            p.hop += 1;
            if v == pe {
                let delay = t - p.sent_at;
                self.finish_packet(&p, p.hop, true);
                self.state.counters.delivered += 1;
                self.state.counters.latency_sum += delay;
                events.push(Event {
                    t,
                    kind: EventKind::Delivered {
                        packet: p.id,
                        delay,
                    },
                });
            } else {
                still.push(p);
            }
        }
        self.state.in_flight = still;
        self.state.transmitted = transmitted;

        // Sources emit until the traffic window closes.
        let mut live_hops: Option<Vec<Option<usize>>> = None;
        let rate = if t < self.config.traffic.duration {
            self.config.traffic.rate
        } else {
            0.0
        };
        for k in 0..self.state.sources.len() {
            self.state.sources[k].credit += rate;
            while self.state.sources[k].credit >= 1.0 {
                self.state.sources[k].credit -= 1.0;
                let id = self.state.next_packet;
                self.state.next_packet += 1;
                self.state.counters.sent += 1;
                let src = &self.state.sources[k];
                let node = src.node;
                events.push(Event {
                    t,
                    kind: EventKind::Sent {
                        packet: id,
                        source: node,
                    },
                });
                match src.route.clone() {
                    None => {
                        self.state.counters.dropped += 1;
                        events.push(Event {
                            t,
                            kind: EventKind::Dropped {
                                packet: id,
                                at: node,
                                reason: DropReason::NoRoute,
                            },
                        });
                    }
                    Some(route) => {
                        let net = &self.state.net;
                        let hops = live_hops.get_or_insert_with(|| net.hops_to(pe, |_| true));
                        self.state.in_flight.push(Packet {
                            id,
                            source: k,
                            route,
                            hop: 0,
                            sent_at: t,
                            min_hops: hops[node.0],
                        });
                    }
                }
            }
        }

        let c = self.state.counters;
        self.trace.push(StepRecord {
            t,
            sent: c.sent,
            delivered: c.delivered,
            dropped: c.dropped,
            in_flight: self.state.in_flight_count(),
            jammed: self.state.flagged_count(),
        });
        self.state.time += 1;
        self.events.extend(events.iter().cloned());
        events
    }

    fn search_route(
        &mut self,
        k: usize,
        trigger: SearchTrigger,
        events: &mut Vec<Event>,
    ) -> Option<Arc<[NodeId]>> {
        let source = self.state.sources[k].node;
        let pe = self.state.net.processing_element();
        if self.state.blocked(source) || self.state.blocked(pe) {
            return None;
        }
        let seed = derive_seed(self.seed, &[tag::SEARCH, self.state.search_invocations]);
        self.state.search_invocations += 1;
        let t = match trigger {
            SearchTrigger::Initial => 0,
            SearchTrigger::Reroute => self.state.time.saturating_sub(1),
        };
        let outcome = run_search(
            &self.state.net,
            source,
            pe,
            &self.state.eta,
            &self.config.search,
            seed,
        )
        .ok()?;
        let ant_cost = self.config.traffic.ant_cost;
        for (i, &h) in outcome.hops_sent.iter().enumerate() {
            if h > 0 {
                self.drain(NodeId(i), ant_cost * h as f64, t, events);
            }
        }
        let route = outcome
            .best
            .as_ref()
            .filter(|b| b.path.iter().all(|&n| !self.state.blocked(n)))
            .map(|b| Arc::<[NodeId]>::from(b.path.as_slice()));
        self.searches.push(SearchRecord {
            t,
            trigger,
            source,
            path: route.as_deref().map(<[NodeId]>::to_vec),
            best_score: outcome.best.as_ref().map(|b| b.score()),
            ant_hops: outcome.hops_sent.iter().sum(),
            stats: if self.record_stats {
                outcome.stats
            } else {
                Vec::new()
            },
        });
        route
    }

    /// Re-routes every source whose route touches a flagged or dead node.
    /// Suspended sources retry whenever the flag set or the set of live
    /// nodes has changed.
    pub fn detect_and_reroute(&mut self) -> Vec<Event> {
        let mut events = Vec::new();
        if !self.config.traffic.reroute {
            self.state.dirty = false;
            return events;
        }
        let changed = std::mem::take(&mut self.state.dirty);
        let t = self.state.time.saturating_sub(1);
        for k in 0..self.state.sources.len() {
            let src = &self.state.sources[k];
            let node = src.node;
            let needs = match &src.route {
                Some(r) => r.iter().any(|&n| self.state.blocked(n)),
                None => changed,
            };
            if !needs {
                if self.config.traffic.restore {
                    let restorable = match (&src.route, &src.original) {
                        (Some(r), Some(o)) => r != o && o.iter().all(|&n| !self.state.blocked(n)),
                        _ => false,
                    };
                    if restorable {
                        let src = &mut self.state.sources[k];
                        src.route = src.original.clone();
                        events.push(Event {
                            t,
                            kind: EventKind::Restored { source: node },
                        });
                    }
                }
                continue;
            }
            let was_suspended = src.route.is_none();
            match self.search_route(k, SearchTrigger::Reroute, &mut events) {
                Some(route) => {
                    let hops = route.len() - 1;
                    self.state.sources[k].route = Some(route);
                    self.state.reroute_count += 1;
                    events.push(Event {
                        t,
                        kind: EventKind::Rerouted { source: node, hops },
                    });
                }
                None => {
                    self.state.sources[k].route = None;
                    if !was_suspended {
                        events.push(Event {
                            t,
                            kind: EventKind::Suspended { source: node },
                        });
                    }
                }
            }
        }
        self.events.extend(events.iter().cloned());
        events
    }

    pub fn report(&self) -> RunReport {
        let c = self.state.counters;
        RunReport {
            seed: self.seed,
            duration: self.config.traffic.duration,
            steps: self.state.time,
            reroute_enabled: self.config.traffic.reroute,
            jammer_kinds: self
                .config
                .jammers
                .iter()
                .map(|j| j.kind.name().to_owned())
                .collect(),
            sent: c.sent,
            delivered: c.delivered,
            dropped: c.dropped,
            in_flight: self.state.in_flight_count(),
            pdr: if c.sent == 0 {
                1.0
            } else {
                c.delivered as f64 / c.sent as f64
            },
            mean_delay: if c.delivered == 0 {
                0.0
            } else {
                c.latency_sum as f64 / c.delivered as f64
            },
            reroute_count: self.state.reroute_count,
            jammed_peak: self.trace.iter().map(|s| s.jammed).max().unwrap_or(0),
            energy_spent: self
                .initial_energy
                .iter()
                .zip(self.state.net.nodes())
                .map(|(e0, n)| e0 - n.energy())
                .collect(),
            trace: self.trace.clone(),
            searches: self.searches.clone(),
        }
    }

    /// Runs the traffic window, then keeps stepping without new traffic
    /// until every packet has been delivered or dropped.
    pub fn run_to_end(&mut self) {
        while self.state.time < self.config.traffic.duration || !self.state.in_flight.is_empty() {
            self.step();
            self.detect_and_reroute();
        }
    }

    pub fn run(mut self) -> RunReport {
        self.run_to_end();
        self.report()
    }
}

/// Runs one scenario to completion.
pub fn run_scenario(config: &ScenarioConfig, seed: u64) -> Result<RunReport, SimError> {
    Ok(Simulation::new(config, seed)?.run())
}

#[cfg(test)]
mod tests;

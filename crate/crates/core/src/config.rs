//! Scenario configuration: a sectioned TOML document, parsed strictly.
//!
//! Unknown keys, wrong types and constraint violations are all collected
//! and reported together as `(key, reason)` pairs.
//!
//! ```toml
//! [network]
//! kind = "grid"          # "explicit" | "random" | "grid"
//! rows = 7
//! cols = 7
//! pe = 27
//!
//! [[jammers]]
//! kind = "constant"      # "constant" | "deceptive" | "random" | "reactive"
//! x = 30.0
//! y = 30.0
//! power = 1.5e-3
//!
//! [search]
//! rho = 0.9
//!
//! [traffic]
//! sources = [21]
//! duration = 300
//! ```

use crate::ants::{SearchParams, UpdateSchedule};
use crate::jammer::{DurationRange, Jammer, JammerKind, RadioModel};
use crate::metrics::{MetricConfig, TourQualityRule};
use crate::network::{euclidean_distance, Network, NetworkError, NodeId, NodeSpec, Point};
use crate::rng::{substream, tag};
use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl ConfigErrors {
    pub fn mentions(&self, key: &str) -> bool {
        self.0.iter().any(|e| e.key == key)
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkSpec {
    Explicit {
        nodes: Vec<NodeSpec>,
        pe: usize,
    },
    Random {
        count: usize,
        width: f64,
        height: f64,
        range: f64,
        energy: f64,
        pe: usize,
        placement_seed: u64,
    },
    Grid {
        rows: usize,
        cols: usize,
        spacing: f64,
        range: f64,
        energy: f64,
        pe: usize,
    },
}

impl NetworkSpec {
    pub fn build(&self) -> Result<Network, NetworkError> {
        match *self {
            NetworkSpec::Explicit { ref nodes, pe } => Network::build(nodes, pe),
            NetworkSpec::Random {
                count,
                width,
                height,
                range,
                energy,
                pe,
                placement_seed,
            } => {
                let mut rng = substream(placement_seed, &[tag::PLACEMENT]);
                Network::random_geometric(count, width, height, range, energy, pe, &mut rng)
            }
            NetworkSpec::Grid {
                rows,
                cols,
                spacing,
                range,
                energy,
                pe,
            } => Network::grid(rows, cols, spacing, range, energy, pe),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            NetworkSpec::Explicit { .. } => "explicit",
            NetworkSpec::Random { .. } => "random",
            NetworkSpec::Grid { .. } => "grid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficSpec {
    /// Source node ids; empty means the node farthest from the PE.
    pub sources: Vec<usize>,
    /// Packets per step per source.
    pub rate: f64,
    pub duration: u64,
    /// Energy per forwarded packet hop.
    pub packet_cost: f64,
    /// Energy per ant hop during route search.
    pub ant_cost: f64,
    /// Receive energy wasted per step by deceptive-jammer victims.
    pub deceptive_cost: f64,
    pub reroute: bool,
    /// Reinstall a source's original route once it is clear again.
    pub restore: bool,
}

impl Default for TrafficSpec {
    fn default() -> Self {
        Self {
            sources: Vec::new(),
            rate: 1.0,
            duration: 300,
            packet_cost: 1.0,
            ant_cost: 1.0,
            deceptive_cost: 1.0,
            reroute: true,
            restore: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(Self::Json),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSpec {
    pub format: ReportFormat,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub network: NetworkSpec,
    pub jammers: Vec<Jammer>,
    pub search: SearchParams,
    pub radio: RadioModel,
    /// Consecutive jammed steps before a node is flagged.
    pub debounce: u32,
    pub metrics: MetricConfig,
    pub traffic: TrafficSpec,
    pub output: OutputSpec,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigErrors> {
        parse_config(text)
    }

    /// Resolved traffic sources: the configured list, or the live node
    /// farthest from the PE (smallest id on ties).
    pub fn sources(&self, net: &Network) -> Vec<NodeId> {
        if !self.traffic.sources.is_empty() {
            return self.traffic.sources.iter().map(|&s| NodeId(s)).collect();
        }
        let pe = net.processing_element();
        let pe_pos = net.position(pe);
        let mut best: Option<(NodeId, f64)> = None;
        for node in net.nodes() {
            if node.id == pe {
                continue;
            }
            let d = euclidean_distance(node.position, pe_pos);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((node.id, d));
            }
        }
        best.map(|(n, _)| vec![n]).unwrap_or_default()
    }

    /// Canonical TOML rendering; parsing it yields an equal config.
    pub fn to_toml(&self) -> String {
        let mut doc = Table::new();

        let mut net = Table::new();
        net.insert("kind".into(), self.network.kind().into());
        match &self.network {
            NetworkSpec::Explicit { nodes, pe } => {
                net.insert("pe".into(), int(*pe));
                let rows: Vec<Value> = nodes
                    .iter()
                    .map(|n| {
                        let mut t = Table::new();
                        t.insert("x".into(), n.position.x.into());
                        t.insert("y".into(), n.position.y.into());
                        t.insert("energy".into(), n.energy.into());
                        t.insert("range".into(), n.range.into());
                        Value::Table(t)
                    })
                    .collect();
                net.insert("nodes".into(), Value::Array(rows));
            }
            NetworkSpec::Random {
                count,
                width,
                height,
                range,
                energy,
                pe,
                placement_seed,
            } => {
                net.insert("count".into(), int(*count));
                net.insert("width".into(), (*width).into());
                net.insert("height".into(), (*height).into());
                net.insert("range".into(), (*range).into());
                net.insert("energy".into(), (*energy).into());
                net.insert("pe".into(), int(*pe));
                net.insert("placement_seed".into(), int(*placement_seed));
            }
            NetworkSpec::Grid {
                rows,
                cols,
                spacing,
                range,
                energy,
                pe,
            } => {
                net.insert("rows".into(), int(*rows));
                net.insert("cols".into(), int(*cols));
                net.insert("spacing".into(), (*spacing).into());
                net.insert("range".into(), (*range).into());
                net.insert("energy".into(), (*energy).into());
                net.insert("pe".into(), int(*pe));
            }
        }
        doc.insert("network".into(), Value::Table(net));

        let jammers: Vec<Value> = self
            .jammers
            .iter()
            .map(|j| {
                let mut t = Table::new();
                t.insert("kind".into(), j.kind.name().into());
                t.insert("x".into(), j.position.x.into());
                t.insert("y".into(), j.position.y.into());
                t.insert("power".into(), j.power.into());
                t.insert("range".into(), j.range.into());
                t.insert("start".into(), int(j.start));
                if let JammerKind::Random { sleep, jam } = j.kind {
                    t.insert(
                        "sleep".into(),
                        Value::Array(vec![int(sleep.min), int(sleep.max)]),
                    );
                    t.insert("jam".into(), Value::Array(vec![int(jam.min), int(jam.max)]));
                }
                Value::Table(t)
            })
            .collect();
        if !jammers.is_empty() {
            doc.insert("jammers".into(), Value::Array(jammers));
        }

        let s = &self.search;
        let mut search = Table::new();
        search.insert("q".into(), s.q.into());
        search.insert("rho".into(), s.rho.into());
        search.insert("alpha".into(), s.alpha.into());
        search.insert("beta".into(), s.beta.into());
        search.insert("n_spsl".into(), int(s.n_spsl));
        search.insert("n_hpsl".into(), int(s.n_hpsl));
        search.insert("iterations".into(), int(s.iterations));
        search.insert("phi0".into(), s.phi0.into());
        search.insert("psl_delta".into(), s.psl_delta.into());
        search.insert("update".into(), s.update.name().into());
        search.insert("tour_quality".into(), s.tour_quality.name().into());
        doc.insert("search".into(), Value::Table(search));

        let mut radio = Table::new();
        radio.insert("floor".into(), self.radio.floor.into());
        radio.insert("tx_power".into(), self.radio.tx_power.into());
        radio.insert("d0".into(), self.radio.d0.into());
        radio.insert("gamma".into(), self.radio.gamma.into());
        radio.insert("debounce".into(), int(self.debounce));
        doc.insert("radio".into(), Value::Table(radio));

        let m = &self.metrics;
        let mut metrics = Table::new();
        if let Some(h) = m.hop_total {
            metrics.insert("hop_total".into(), h.into());
        }
        metrics.insert("energy_total".into(), m.energy_total.into());
        metrics.insert("snr_total".into(), m.snr_total.into());
        metrics.insert("counter_window".into(), int(m.counter_window));
        doc.insert("metrics".into(), Value::Table(metrics));

        let tr = &self.traffic;
        let mut traffic = Table::new();
        traffic.insert(
            "sources".into(),
            Value::Array(tr.sources.iter().map(|&s| int(s)).collect()),
        );
        traffic.insert("rate".into(), tr.rate.into());
        traffic.insert("duration".into(), int(tr.duration));
        traffic.insert("packet_cost".into(), tr.packet_cost.into());
        traffic.insert("ant_cost".into(), tr.ant_cost.into());
        traffic.insert("deceptive_cost".into(), tr.deceptive_cost.into());
        traffic.insert("reroute".into(), tr.reroute.into());
        traffic.insert("restore".into(), tr.restore.into());
        doc.insert("traffic".into(), Value::Table(traffic));

        let mut output = Table::new();
        output.insert("format".into(), self.output.format.name().into());
        if let Some(p) = &self.output.path {
            output.insert("path".into(), p.display().to_string().into());
        }
        doc.insert("output".into(), Value::Table(output));

        toml::to_string(&doc).expect("config tables serialize")
    }
}

fn int<T: TryInto<i64>>(v: T) -> Value {
    Value::Integer(v.try_into().unwrap_or(i64::MAX))
}

/// Key reader over one table that remembers what it consumed.
struct Section<'a> {
    prefix: String,
    table: &'a Table,
    used: BTreeSet<&'a str>,
    errors: Vec<ConfigError>,
}

impl<'a> Section<'a> {
    fn new(prefix: impl Into<String>, table: &'a Table) -> Self {
        Self {
            prefix: prefix.into(),
            table,
            used: BTreeSet::new(),
            errors: Vec::new(),
        }
    }

    fn key(&self, name: &str) -> String {
        if self.prefix.is_empty() {
            name.to_owned()
        } else {
            format!("{}.{name}", self.prefix)
        }
    }

    fn error(&mut self, name: &str, reason: impl Into<String>) {
        let key = self.key(name);
        self.errors.push(ConfigError {
            key,
            reason: reason.into(),
        });
    }

    fn raw(&mut self, name: &'a str) -> Option<&'a Value> {
        let (k, v) = self.table.get_key_value(name)?;
        self.used.insert(k.as_str());
        Some(v)
    }

    fn opt_f64(&mut self, name: &'a str) -> Option<f64> {
        match self.raw(name)? {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.error(
                    name,
                    format!("expected a number, found {}", other.type_str()),
                );
                None
            }
        }
    }

    fn f64(
        &mut self,
        name: &'a str,
        default: f64,
        ok: impl Fn(f64) -> bool,
        constraint: &str,
    ) -> f64 {
        match self.opt_f64(name) {
            Some(v) if ok(v) => v,
            Some(v) => {
                self.error(name, format!("{v} violates constraint {constraint}"));
                default
            }
            None => default,
        }
    }

    fn req_f64(&mut self, name: &'a str, ok: impl Fn(f64) -> bool, constraint: &str) -> f64 {
        if !self.table.contains_key(name) {
            self.error(name, "missing required key");
            return 0.0;
        }
        self.f64(name, 0.0, ok, constraint)
    }

    fn opt_u64(&mut self, name: &'a str) -> Option<u64> {
        match self.raw(name)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::Integer(i) => {
                self.error(name, format!("{i} violates constraint >= 0"));
                None
            }
            other => {
                self.error(
                    name,
                    format!("expected an integer, found {}", other.type_str()),
                );
                None
            }
        }
    }

    fn u64(&mut self, name: &'a str, default: u64, min: u64) -> u64 {
        match self.opt_u64(name) {
            Some(v) if v >= min => v,
            Some(v) => {
                self.error(name, format!("{v} violates constraint >= {min}"));
                default
            }
            None => default,
        }
    }

    fn req_u64(&mut self, name: &'a str, min: u64) -> u64 {
        if !self.table.contains_key(name) {
            self.error(name, "missing required key");
            return min;
        }
        self.u64(name, min, min)
    }

    fn usize(&mut self, name: &'a str, default: usize, min: usize) -> usize {
        self.u64(name, default as u64, min as u64) as usize
    }

    fn bool(&mut self, name: &'a str, default: bool) -> bool {
        match self.raw(name) {
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                self.error(
                    name,
                    format!("expected a boolean, found {}", other.type_str()),
                );
                default
            }
            None => default,
        }
    }

    fn opt_str(&mut self, name: &'a str) -> Option<&'a str> {
        match self.raw(name)? {
            Value::String(s) => Some(s.as_str()),
            other => {
                self.error(
                    name,
                    format!("expected a string, found {}", other.type_str()),
                );
                None
            }
        }
    }

    fn choice<T>(
        &mut self,
        name: &'a str,
        default: T,
        parse: impl Fn(&str) -> Option<T>,
        allowed: &str,
    ) -> T {
        match self.opt_str(name) {
            Some(s) => parse(s).unwrap_or_else(|| {
                self.error(
                    name,
                    format!("unsupported value \"{s}\", expected one of {allowed}"),
                );
                default
            }),
            None => default,
        }
    }

    fn tables(&mut self, name: &'a str) -> Vec<&'a Table> {
        match self.raw(name) {
            None => Vec::new(),
            Some(Value::Array(items)) => {
                let mut out = Vec::new();
                for (k, item) in items.iter().enumerate() {
                    match item {
                        Value::Table(t) => out.push(t),
                        other => self.error(
                            &format!("{name}[{k}]"),
                            format!("expected a table, found {}", other.type_str()),
                        ),
                    }
                }
                out
            }
            Some(other) => {
                self.error(
                    name,
                    format!("expected an array of tables, found {}", other.type_str()),
                );
                Vec::new()
            }
        }
    }

    fn merge(&mut self, other: Section<'_>) {
        let mut other = other;
        other.finish_unknown();
        self.errors.append(&mut other.errors);
    }

    fn finish_unknown(&mut self) {
        let unknown: Vec<String> = self
            .table
            .keys()
            .filter(|k| !self.used.contains(k.as_str()))
            .cloned()
            .collect();
        for k in unknown {
            self.error(&k, "unknown key");
        }
    }
}

fn sub_table<'a>(root: &mut Section<'a>, name: &'a str) -> Option<&'a Table> {
    match root.raw(name)? {
        Value::Table(t) => Some(t),
        other => {
            root.error(
                name,
                format!("expected a table, found {}", other.type_str()),
            );
            None
        }
    }
}

static EMPTY: std::sync::LazyLock<Table> = std::sync::LazyLock::new(Table::new);

fn duration_range(
    sec: &mut Section<'_>,
    name: &'static str,
    v: Option<&Value>,
) -> Option<DurationRange> {
    let (min, max) = match v {
        Some(Value::Integer(i)) => (*i, *i),
        Some(Value::Array(a)) if a.len() == 2 => match (&a[0], &a[1]) {
            (Value::Integer(lo), Value::Integer(hi)) => (*lo, *hi),
            _ => {
                sec.error(name, "expected [min, max] integers");
                return None;
            }
        },
        Some(_) => {
            sec.error(name, "expected an integer or [min, max]");
            return None;
        }
        None => {
            sec.error(name, "missing required key");
            return None;
        }
    };
    if min < 1 || min > max {
        sec.error(
            name,
            format!("step counts must satisfy 1 <= min <= max, got {min}..{max}"),
        );
        return None;
    }
    DurationRange::new(min as u64, max as u64).ok()
}

fn parse_network(sec: &mut Section<'_>) -> Option<NetworkSpec> {
    let kind = sec.opt_str("kind");
    let positive = |v: f64| v.is_finite() && v > 0.0;
    let nonneg = |v: f64| v.is_finite() && v >= 0.0;
    let energy = sec.f64("energy", 1e6, nonneg, ">= 0");
    let range = sec.f64("range", 10.0, positive, "> 0");
    match kind {
        None => {
            if !sec.table.contains_key("kind") {
                sec.error("kind", "missing required key");
            }
            None
        }
        Some("explicit") => {
            let pe = sec.req_u64("pe", 0) as usize;
            if !sec.table.contains_key("nodes") {
                sec.error("nodes", "missing required key");
            }
            let rows = sec.tables("nodes");
            let mut nodes = Vec::with_capacity(rows.len());
            for (k, t) in rows.into_iter().enumerate() {
                let mut row = Section::new(sec.key(&format!("nodes[{k}]")), t);
                let x = row.req_f64("x", f64::is_finite, "finite");
                let y = row.req_f64("y", f64::is_finite, "finite");
                let e = row.f64("energy", energy, nonneg, ">= 0");
                let r = row.f64("range", range, positive, "> 0");
                nodes.push(NodeSpec::new(x, y, e, r));
                sec.merge(row);
            }
            Some(NetworkSpec::Explicit { nodes, pe })
        }
        Some("random") => Some(NetworkSpec::Random {
            count: sec.req_u64("count", 2) as usize,
            width: sec.f64("width", 100.0, positive, "> 0"),
            height: sec.f64("height", 100.0, positive, "> 0"),
            range,
            energy,
            pe: sec.usize("pe", 0, 0),
            placement_seed: sec.u64("placement_seed", 0, 0),
        }),
        Some("grid") => Some(NetworkSpec::Grid {
            rows: sec.req_u64("rows", 1) as usize,
            cols: sec.req_u64("cols", 1) as usize,
            spacing: sec.f64("spacing", 10.0, positive, "> 0"),
            range,
            energy,
            pe: sec.usize("pe", 0, 0),
        }),
        Some(other) => {
            sec.error(
                "kind",
                format!("unsupported network kind \"{other}\", expected explicit, random or grid"),
            );
            None
        }
    }
}

fn parse_jammer(sec: &mut Section<'_>) -> Option<Jammer> {
    let kind_name = sec.opt_str("kind");
    if kind_name.is_none() && !sec.table.contains_key("kind") {
        sec.error("kind", "missing required key");
    }
    let x = sec.req_f64("x", f64::is_finite, "finite");
    let y = sec.req_f64("y", f64::is_finite, "finite");
    let power = sec.req_f64("power", |v| v.is_finite() && v > 0.0, "> 0");
    let range = sec.f64("range", 20.0, |v| v.is_finite() && v >= 0.0, ">= 0");
    let start = sec.u64("start", 0, 0);
    let kind = match kind_name? {
        "constant" => JammerKind::Constant,
        "deceptive" => JammerKind::Deceptive,
        "reactive" => JammerKind::Reactive,
        "random" => {
            let sleep = sec.raw("sleep");
            let jam = sec.raw("jam");
            let sleep = duration_range(sec, "sleep", sleep);
            let jam = duration_range(sec, "jam", jam);
            JammerKind::Random {
                sleep: sleep?,
                jam: jam?,
            }
        }
        other => {
            sec.error(
                "kind",
                format!("unsupported jammer kind \"{other}\", expected constant, deceptive, random or reactive"),
            );
            return None;
        }
    };
    Jammer::new(kind, Point::new(x, y), power, range, start).ok()
}

fn parse_search(sec: &mut Section<'_>) -> SearchParams {
    let d = SearchParams::default();
    let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
    let params = SearchParams {
        q: sec.f64("q", d.q, finite_nonneg, ">= 0"),
        rho: sec.f64("rho", d.rho, |v| (0.0..=1.0).contains(&v), "in [0, 1]"),
        alpha: sec.f64("alpha", d.alpha, finite_nonneg, ">= 0"),
        beta: sec.f64("beta", d.beta, finite_nonneg, ">= 0"),
        n_spsl: sec.usize("n_spsl", d.n_spsl, 0),
        n_hpsl: sec.usize("n_hpsl", d.n_hpsl, 0),
        iterations: sec.usize("iterations", d.iterations, 1),
        phi0: sec.f64("phi0", d.phi0, |v| v.is_finite() && v > 0.0, "> 0"),
        psl_delta: sec.f64(
            "psl_delta",
            d.psl_delta,
            |v| (0.0..1.0).contains(&v),
            "in [0, 1)",
        ),
        update: sec.choice("update", d.update, UpdateSchedule::parse, "batch, per-ant"),
        tour_quality: sec.choice(
            "tour_quality",
            d.tour_quality,
            TourQualityRule::parse,
            "geometric-mean, product, last-link",
        ),
    };
    if params.n_spsl + params.n_hpsl == 0 {
        sec.error("n_spsl", "colonies are empty: n_spsl + n_hpsl must be >= 1");
    }
    params
}

/// Parses and fully validates a scenario document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigErrors> {
    let doc: Table = toml::from_str(text).map_err(|e| {
        ConfigErrors(vec![ConfigError {
            key: "<document>".into(),
            reason: e.message().to_owned(),
        }])
    })?;
    let mut root = Section::new("", &doc);
    let positive = |v: f64| v.is_finite() && v > 0.0;
    let nonneg = |v: f64| v.is_finite() && v >= 0.0;

    let network = match sub_table(&mut root, "network") {
        Some(t) => {
            let mut sec = Section::new("network", t);
            let spec = parse_network(&mut sec);
            root.merge(sec);
            spec
        }
        None => {
            if !doc.contains_key("network") {
                root.error("network", "missing required key");
            }
            None
        }
    };

    let mut jammers = Vec::new();
    for (k, t) in root.tables("jammers").into_iter().enumerate() {
        let mut sec = Section::new(format!("jammers[{k}]"), t);
        if let Some(j) = parse_jammer(&mut sec) {
            jammers.push(j);
        }
        root.merge(sec);
    }

    let mut search_sec = Section::new("search", sub_table(&mut root, "search").unwrap_or(&EMPTY));
    let search = parse_search(&mut search_sec);
    root.merge(search_sec);

    let dr = RadioModel::default();
    let mut sec = Section::new("radio", sub_table(&mut root, "radio").unwrap_or(&EMPTY));
    let radio = RadioModel {
        floor: sec.f64("floor", dr.floor, positive, "> 0"),
        tx_power: sec.f64("tx_power", dr.tx_power, positive, "> 0"),
        d0: sec.f64("d0", dr.d0, positive, "> 0"),
        gamma: sec.f64("gamma", dr.gamma, nonneg, ">= 0"),
    };
    let debounce = sec.u64("debounce", 1, 1).min(u32::MAX as u64) as u32;
    root.merge(sec);

    let dm = MetricConfig::default();
    let mut sec = Section::new("metrics", sub_table(&mut root, "metrics").unwrap_or(&EMPTY));
    let metrics = MetricConfig {
        hop_total: sec.opt_f64("hop_total").and_then(|v| {
            if positive(v) {
                Some(v)
            } else {
                sec.error("hop_total", format!("{v} violates constraint > 0"));
                None
            }
        }),
        energy_total: sec.f64("energy_total", dm.energy_total, positive, "> 0"),
        snr_total: sec.f64("snr_total", dm.snr_total, positive, "> 0"),
        counter_window: sec.usize("counter_window", dm.counter_window, 0),
    };
    root.merge(sec);

    let dt = TrafficSpec::default();
    let mut sec = Section::new("traffic", sub_table(&mut root, "traffic").unwrap_or(&EMPTY));
    let sources = match sec.raw("sources") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .filter_map(|v| match v {
                Value::Integer(i) if *i >= 0 => Some(*i as usize),
                _ => {
                    sec.error("sources", "expected non-negative node ids");
                    None
                }
            })
            .collect(),
        Some(_) => {
            sec.error("sources", "expected an array of node ids");
            Vec::new()
        }
    };
    let traffic = TrafficSpec {
        sources,
        rate: sec.f64("rate", dt.rate, positive, "> 0"),
        duration: sec.u64("duration", dt.duration, 0),
        packet_cost: sec.f64("packet_cost", dt.packet_cost, nonneg, ">= 0"),
        ant_cost: sec.f64("ant_cost", dt.ant_cost, nonneg, ">= 0"),
        deceptive_cost: sec.f64("deceptive_cost", dt.deceptive_cost, nonneg, ">= 0"),
        reroute: sec.bool("reroute", dt.reroute),
        restore: sec.bool("restore", dt.restore),
    };
    root.merge(sec);

    let mut sec = Section::new("output", sub_table(&mut root, "output").unwrap_or(&EMPTY));
    let output = OutputSpec {
        format: sec.choice(
            "format",
            ReportFormat::Json,
            ReportFormat::parse,
            "json, csv",
        ),
        path: sec.opt_str("path").map(PathBuf::from),
    };
    root.merge(sec);

    root.finish_unknown();
    let mut errors = root.errors;

    // Cross-field checks need a buildable network.
    if let Some(spec) = &network {
        if errors.iter().all(|e| !e.key.starts_with("network")) {
            match spec.build() {
                Ok(net) => {
                    for (k, &s) in traffic.sources.iter().enumerate() {
                        let key = format!("traffic.sources[{k}]");
                        if s >= net.len() {
                            errors.push(ConfigError {
                                key,
                                reason: format!("node {s} does not exist"),
                            });
                        } else if NodeId(s) == net.processing_element() {
                            errors.push(ConfigError {
                                key,
                                reason: "the processing element cannot be a traffic source".into(),
                            });
                        }
                    }
                    if let Some(n) = net
                        .nodes()
                        .iter()
                        .find(|n| n.energy() > metrics.energy_total)
                    {
                        errors.push(ConfigError {
                            key: "metrics.energy_total".into(),
                            reason: format!(
                                "node {} starts with {} J, above energy_total {}",
                                n.id,
                                n.energy(),
                                metrics.energy_total
                            ),
                        });
                    }
                }
                Err(e) => errors.push(ConfigError {
                    key: "network".into(),
                    reason: e.to_string(),
                }),
            }
        }
    }

    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    Ok(ScenarioConfig {
        network: network.expect("no errors means the network parsed"),
        jammers,
        search,
        radio,
        debounce,
        metrics,
        traffic,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[network]
kind = "grid"
rows = 2
cols = 3
"#;

    #[test]
    fn minimal_document_takes_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.search, SearchParams::default());
        assert_eq!(cfg.radio, RadioModel::default());
        assert_eq!(cfg.metrics, MetricConfig::default());
        assert_eq!(cfg.traffic, TrafficSpec::default());
        assert_eq!(cfg.debounce, 1);
        assert!(cfg.jammers.is_empty());
        let net = cfg.network.build().unwrap();
        assert_eq!(net.len(), 6);
        // Farthest node from PE 0 at (0, 0) is (20, 10).
        assert_eq!(cfg.sources(&net), vec![NodeId(5)]);
    }

    #[test]
    fn rho_out_of_range() {
        let text = format!("{MINIMAL}\n[search]\nrho = 1.5\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.mentions("search.rho"));
        assert!(err.to_string().contains("[0, 1]"), "{err}");
    }

    #[test]
    fn unsupported_jammer_technique() {
        let text = format!("{MINIMAL}\n[[jammers]]\nkind = \"sweep\"\nx = 0\ny = 0\npower = 1.0\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.mentions("jammers[0].kind"));
        assert!(err.to_string().contains("unsupported jammer kind"), "{err}");
    }

    #[test]
    fn unknown_and_missing_keys_are_all_reported() {
        let text = r#"
[network]
kind = "explicit"
colour = "red"

[search]
alpah = 1.0

[[jammers]]
kind = "constant"
x = 1.0
"#;
        let err = parse_config(text).unwrap_err();
        for key in [
            "network.colour",
            "network.pe",
            "network.nodes",
            "search.alpah",
            "jammers[0].y",
            "jammers[0].power",
        ] {
            assert!(err.mentions(key), "missing {key} in {err}");
        }
    }

    #[test]
    fn missing_network_section() {
        let err = parse_config("[search]\nq = 1.0\n").unwrap_err();
        assert!(err.mentions("network"));
    }

    #[test]
    fn type_errors_and_syntax_errors() {
        let err =
            parse_config(&format!("{MINIMAL}\n[traffic]\nduration = \"long\"\n")).unwrap_err();
        assert!(err.mentions("traffic.duration"));
        let err = parse_config("network = [").unwrap_err();
        assert!(err.mentions("<document>"));
    }

    #[test]
    fn cross_field_checks() {
        let err = parse_config(&format!("{MINIMAL}\n[traffic]\nsources = [0]\n")).unwrap_err();
        assert!(err.mentions("traffic.sources[0]"));
        let err = parse_config(&format!("{MINIMAL}\n[traffic]\nsources = [9]\n")).unwrap_err();
        assert!(err.mentions("traffic.sources[0]"));
        let err =
            parse_config(&format!("{MINIMAL}\n[metrics]\nenergy_total = 10.0\n")).unwrap_err();
        assert!(err.mentions("metrics.energy_total"));
        let dup = r#"
[network]
kind = "explicit"
pe = 0
nodes = [{ x = 1.0, y = 1.0 }, { x = 1.0, y = 1.0 }]
"#;
        assert!(parse_config(dup).unwrap_err().mentions("network"));
    }

    #[test]
    fn random_jammer_schedule() {
        let text = format!(
            "{MINIMAL}\n[[jammers]]\nkind = \"random\"\nx = 0\ny = 0\npower = 1.0\nsleep = 2\njam = [1, 4]\n"
        );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(
            cfg.jammers[0].kind,
            JammerKind::Random {
                sleep: DurationRange::fixed(2).unwrap(),
                jam: DurationRange::new(1, 4).unwrap()
            }
        );
        let bad = format!(
            "{MINIMAL}\n[[jammers]]\nkind = \"random\"\nx = 0\ny = 0\npower = 1.0\nsleep = 0\n"
        );
        let err = parse_config(&bad).unwrap_err();
        assert!(err.mentions("jammers[0].sleep") && err.mentions("jammers[0].jam"));
    }

    #[test]
    fn echo_round_trip() {
        let text = r#"
[network]
kind = "explicit"
pe = 1
energy = 50.0
nodes = [{ x = 0.0, y = 0.0 }, { x = 3.5, y = 0.1, range = 4.0 }, { x = 7, y = 0 }]

[[jammers]]
kind = "reactive"
x = 1.0
y = 2.0
power = 0.02
range = 5.0
start = 3

[[jammers]]
kind = "random"
x = 4.0
y = 0.0
power = 0.1
sleep = [1, 3]
jam = 2

[search]
q = 2.0
update = "per-ant"
tour_quality = "product"

[metrics]
hop_total = 12.0
energy_total = 100.0

[traffic]
sources = [0, 2]
rate = 0.5
restore = true

[output]
format = "csv"
path = "out.csv"
"#;
        let first = parse_config(text).unwrap();
        let echoed = first.to_toml();
        let second = parse_config(&echoed).unwrap_or_else(|e| panic!("{e}\n{echoed}"));
        assert_eq!(first, second);
        assert_eq!(echoed, second.to_toml());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn echo_is_stable_for_random_parameters(
            rho in 0.0f64..=1.0,
            alpha in 0.0f64..5.0,
            q in 0.0f64..100.0,
            floor in 1e-12f64..1e-6,
            rows in 1usize..6,
            cols in 2usize..6,
            duration in 0u64..1000,
        ) {
            let text = format!(
                "[network]\nkind = \"grid\"\nrows = {rows}\ncols = {cols}\n\
                 [search]\nrho = {rho:?}\nalpha = {alpha:?}\nq = {q:?}\n\
                 [radio]\nfloor = {floor:?}\n[traffic]\nduration = {duration}\n"
            );
            let cfg = parse_config(&text).unwrap();
            prop_assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
        }
    }
}

use crate::ants::IterationStats;
use crate::config::ReportFormat;
use crate::network::NodeId;
use crate::output::{fmt_sig, to_stable_json};
use serde::Serialize;
use std::io;

/// Single-run CSV columns.
pub const CSV_COLUMNS: [&str; 6] = [
    "seed",
    "pdr",
    "mean_delay",
    "reroutes",
    "duration",
    "jammer_kind",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchTrigger {
    Initial,
    Reroute,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchRecord {
    pub t: u64,
    pub trigger: SearchTrigger,
    pub source: NodeId,
    /// Installed route, `None` if the search found nothing usable.
    pub path: Option<Vec<NodeId>>,
    pub best_score: Option<f64>,
    pub ant_hops: u64,
    pub stats: Vec<IterationStats>,
}

/// Counters after one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub t: u64,
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
    /// Size of the flagged set.
    pub jammed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    /// Steps with traffic generation.
    pub duration: u64,
    /// Steps simulated, including the tail that lets in-flight packets settle.
    pub steps: u64,
    pub reroute_enabled: bool,
    pub jammer_kinds: Vec<String>,
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub pdr: f64,
    pub mean_delay: f64,
    pub reroute_count: u64,
    pub jammed_peak: usize,
    pub energy_spent: Vec<f64>,
    pub trace: Vec<StepRecord>,
    pub searches: Vec<SearchRecord>,
}

impl RunReport {
    pub fn jammer_kind(&self) -> String {
        if self.jammer_kinds.is_empty() {
            "none".to_owned()
        } else {
            self.jammer_kinds.join("+")
        }
    }

    pub fn csv_row(&self) -> [String; 6] {
        [
            self.seed.to_string(),
            fmt_sig(self.pdr),
            fmt_sig(self.mean_delay),
            self.reroute_count.to_string(),
            self.duration.to_string(),
            self.jammer_kind(),
        ]
    }
}

/// Writes `report` and returns the number of bytes written.
pub fn emit_report<W: io::Write>(
    report: &RunReport,
    format: ReportFormat,
    mut out: W,
) -> io::Result<usize> {
    let bytes = match format {
        ReportFormat::Json => to_stable_json(report)
            .map_err(io::Error::other)?
            .into_bytes(),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_COLUMNS).map_err(io::Error::other)?;
            w.write_record(report.csv_row()).map_err(io::Error::other)?;
            w.into_inner()
                .map_err(|e| io::Error::other(e.to_string()))?
        }
    };
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(bytes.len())
}

use serde::{Serialize, Serializer};

use super::reception::Outcome;

fn two_decimals<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:.2}"))
}

/// Outcome counters for one flow over one stats interval. Serialises to one
/// row of the stats CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalRow {
    #[serde(serialize_with = "two_decimals")]
    pub interval_start_s: f64,
    pub flow_id: String,
    pub sent: u64,
    pub received: u64,
    pub destroyed: u64,
    pub below_sensitivity: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    #[serde(serialize_with = "two_decimals")]
    pub jam_airtime_us: f64,
}

pub const CSV_HEADER: [&str; 9] = [
    "interval_start_s",
    "flow_id",
    "sent",
    "received",
    "destroyed",
    "below_sensitivity",
    "false_pos",
    "false_neg",
    "jam_airtime_us",
];

impl IntervalRow {
    pub(crate) fn new(interval_start_s: f64, flow_id: &str) -> Self {
        IntervalRow {
            interval_start_s,
            flow_id: flow_id.to_string(),
            sent: 0,
            received: 0,
            destroyed: 0,
            below_sensitivity: 0,
            false_pos: 0,
            false_neg: 0,
            jam_airtime_us: 0.0,
        }
    }

    pub(crate) fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Received => self.received += 1,
            Outcome::Destroyed => self.destroyed += 1,
            Outcome::BelowSensitivity => self.below_sensitivity += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSummary {
    pub flow_id: String,
    pub sent: u64,
    pub received: u64,
    pub destroyed: u64,
    pub below_sensitivity: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    /// Frames heard by at least one guardian.
    pub detected: u64,
    /// Frames a stealthy attacker declined to send.
    pub abstained: u64,
    pub jam_transmissions: u64,
    #[serde(serialize_with = "two_decimals")]
    pub jam_airtime_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuardianSummary {
    pub guardian: u32,
    pub detections: u64,
    pub jams: u64,
    #[serde(serialize_with = "two_decimals")]
    pub jam_airtime_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub seed: u64,
    pub duration_s: f64,
    pub stats_interval_s: f64,
    pub intervals: Vec<IntervalRow>,
    pub flows: Vec<FlowSummary>,
    pub guardians: Vec<GuardianSummary>,
}

impl StatsReport {
    pub fn flow(&self, id: &str) -> Option<&FlowSummary> {
        self.flows.iter().find(|f| f.flow_id == id)
    }

    pub fn total_destroyed(&self) -> u64 {
        self.flows.iter().map(|f| f.destroyed).sum()
    }

    pub fn total_false_pos(&self) -> u64 {
        self.flows.iter().map(|f| f.false_pos).sum()
    }

    pub fn total_false_neg(&self) -> u64 {
        self.flows.iter().map(|f| f.false_neg).sum()
    }

    /// Per-interval stats as CSV, header row always present.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for row in &self.intervals {
            w.serialize(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
    }

    /// Summary document (everything except the interval rows).
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            seed: u64,
            duration_s: f64,
            stats_interval_s: f64,
            totals: Totals,
            flows: &'a [FlowSummary],
            guardians: &'a [GuardianSummary],
        }
        #[derive(Serialize)]
        struct Totals {
            sent: u64,
            received: u64,
            destroyed: u64,
            below_sensitivity: u64,
            false_pos: u64,
            false_neg: u64,
        }
        let sum = |f: fn(&FlowSummary) -> u64| self.flows.iter().map(f).sum();
        let doc = Summary {
            seed: self.seed,
            duration_s: self.duration_s,
            stats_interval_s: self.stats_interval_s,
            totals: Totals {
                sent: sum(|f| f.sent),
                received: sum(|f| f.received),
                destroyed: sum(|f| f.destroyed),
                below_sensitivity: sum(|f| f.below_sensitivity),
                false_pos: sum(|f| f.false_pos),
                false_neg: sum(|f| f.false_neg),
            },
            flows: &self.flows,
            guardians: &self.guardians,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("serialisable");
        s.push('\n');
        s
    }
}

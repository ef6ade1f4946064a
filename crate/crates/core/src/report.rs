//! Tabular report rendering (CSV, Markdown, JSON) and the ASIC/FPGA/eFPGA
//! platform comparison.
//!
//! Floating-point values are rendered with 4 significant digits in every
//! format. Nothing time-dependent is written, so reruns are byte-identical.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{Map, Value as Json};

use crate::model::{Dataset, IpProfile, Platform, PlatformMetrics};

const SIG_DIGITS: usize = 4;

/// Rounds to 4 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Formats with 4 significant digits: fixed notation for magnitudes in
/// [1e-4, 1e6), scientific otherwise.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(x);
    if r == 0.0 {
        return "0".into();
    }
    let exp = r.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        format!("{r:.decimals$}")
    } else {
        format!("{:.*e}", SIG_DIGITS - 1, r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Int(u64),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(x) => fmt_sig(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Json {
        match self {
            Cell::Text(s) => Json::String(s.clone()),
            Cell::Num(x) => serde_json::Number::from_f64(round_sig(*x))
                .map(Json::Number)
                .unwrap_or(Json::Null),
            Cell::Int(n) => Json::from(*n),
            Cell::Empty => Json::Null,
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

/// A named table. `keys` name the columns in CSV and JSON, `titles` in
/// Markdown.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub keys: Vec<String>,
    pub titles: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.to_owned(),
            keys: columns.iter().map(|(k, _)| (*k).to_owned()).collect(),
            titles: columns.iter().map(|(_, t)| (*t).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.keys.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.keys).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("| {} |\n", self.titles.join(" | ")));
        out.push_str(&format!("|{}\n", "---|".repeat(self.titles.len())));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.render().replace('|', "\\|")).collect();
            out.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
        out
    }

    pub fn to_json(&self) -> Json {
        Json::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Json> = self
                        .keys
                        .iter()
                        .cloned()
                        .zip(row.iter().map(Cell::to_json))
                        .collect();
                    Json::Object(obj)
                })
                .collect(),
        )
    }
}

/// Combines several tables into one JSON document keyed by table name.
pub fn tables_to_json(tables: &[&Table]) -> String {
    let obj: Map<String, Json> = tables
        .iter()
        .map(|t| (t.name.clone(), t.to_json()))
        .collect();
    let mut s = serde_json::to_string_pretty(&Json::Object(obj)).expect("json");
    s.push('\n');
    s
}

/// Markdown document with one `## name` section per table.
pub fn tables_to_markdown(title: &str, tables: &[&Table]) -> String {
    let mut out = format!("# {title}\n");
    for t in tables {
        out.push_str(&format!("\n## {}\n\n", t.name));
        out.push_str(&t.to_markdown());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    AreaMm2,
    PowerMw,
    SlackNs,
    FreqGhz,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::AreaMm2, Metric::PowerMw, Metric::SlackNs, Metric::FreqGhz];

    pub fn key(self) -> &'static str {
        match self {
            Metric::AreaMm2 => "area_mm2",
            Metric::PowerMw => "power_mw",
            Metric::SlackNs => "slack_ns",
            Metric::FreqGhz => "freq_ghz",
        }
    }

    fn of_summary(self, m: &PlatformMetrics) -> Option<f64> {
        match self {
            Metric::AreaMm2 => m.area_mm2,
            Metric::PowerMw => m.power_mw,
            Metric::SlackNs => m.slack_ns,
            Metric::FreqGhz => m.freq_ghz,
        }
    }

    /// Per-IP value. Frequencies fall back to the scoring inputs: the ASIC
    /// maximum for `asic` and the eFPGA maximum for `ecologic`.
    pub fn of_ip(self, ip: &IpProfile, p: Platform) -> Option<f64> {
        let from = |m: &Option<BTreeMap<Platform, f64>>| m.as_ref().and_then(|m| m.get(&p).copied());
        match self {
            Metric::AreaMm2 => None,
            Metric::PowerMw => from(&ip.power_mw),
            Metric::SlackNs => from(&ip.slack_ns),
            Metric::FreqGhz => from(&ip.freq_ghz).or(match p {
                Platform::Asic => Some(ip.f_max_asic),
                Platform::Ecologic => Some(ip.f_max_efpga),
                Platform::Fpga => None,
            }),
        }
    }
}

/// One metric compared between two platforms. Power is a
/// baseline-over-ours ratio (how many times less power), frequency an
/// ours-over-baseline ratio; slack and area are reported as differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricComparison {
    pub scope: String,
    pub metric: Metric,
    pub ours: f64,
    pub baseline: f64,
    pub ratio: Option<f64>,
    pub delta: Option<f64>,
}

impl MetricComparison {
    pub fn new(scope: &str, metric: Metric, ours: f64, baseline: f64) -> Self {
        let (ratio, delta) = match metric {
            Metric::PowerMw => (Some(baseline / ours), None),
            Metric::FreqGhz => (Some(ours / baseline), None),
            Metric::SlackNs | Metric::AreaMm2 => (None, Some(ours - baseline)),
        };
        Self {
            scope: scope.to_owned(),
            metric,
            ours,
            baseline,
            ratio,
            delta,
        }
    }
}

/// Summary row per metric (when the dataset carries a platform summary),
/// then per-IP rows for every metric both platforms report.
pub fn platform_comparison(d: &Dataset, ours: Platform, baseline: Platform) -> Vec<MetricComparison> {
    let mut out = Vec::new();
    if let Some(summary) = &d.platform_summary {
        if let (Some(o), Some(b)) = (summary.get(&ours), summary.get(&baseline)) {
            for m in Metric::ALL {
                if let (Some(x), Some(y)) = (m.of_summary(o), m.of_summary(b)) {
                    out.push(MetricComparison::new("summary", m, x, y));
                }
            }
        }
    }
    for ip in &d.ips {
        for m in Metric::ALL {
            if let (Some(x), Some(y)) = (m.of_ip(ip, ours), m.of_ip(ip, baseline)) {
                out.push(MetricComparison::new(&ip.id, m, x, y));
            }
        }
    }
    out
}

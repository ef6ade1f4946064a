//! Domain types for IP datasets and scoring weights, plus strict JSON
//! ingestion.
//!
//! A dataset file is a single UTF-8 JSON document:
//!
//! ```json
//! {
//!   "schema_version": "1",
//!   "area_unit": "um2",
//!   "ips": [ { "id": "d1", "name": "ASCON", "loc_changed": 180, ... } ]
//! }
//! ```
//!
//! Unknown keys are rejected. Every invariant violation is reported with
//! the offending IP id and field name; nothing is clamped on load.
//!
//! The redaction ratio's "logic" unit (gates, LUTs, lines) is not fixed:
//! `logic_mapped_to_efpga` and `total_logic` only need to agree per IP.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "1";

/// Revisions over which `loc_changed` is measured when a profile omits it.
pub const DEFAULT_CHURN_WINDOW: u32 = 3;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Ecologic,
    Fpga,
    Asic,
}

impl Platform {
    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Ecologic => "ecologic",
            Platform::Fpga => "fpga",
            Platform::Asic => "asic",
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AreaUnit {
    #[serde(rename = "um2")]
    SquareMicrons,
    #[serde(rename = "gate_eq")]
    GateEquivalents,
}

/// Raw per-IP inputs for scoring and platform comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IpProfile {
    pub id: String,
    pub name: String,
    pub loc_changed: u64,
    pub churn_window: u32,
    pub confidentiality_risk: f64,
    pub io_control_nets: u64,
    pub internal_nets_and_state: u64,
    pub logic_mapped_to_efpga: f64,
    pub total_logic: f64,
    /// GHz.
    pub f_max_asic: f64,
    /// GHz.
    pub f_max_efpga: f64,
    /// In the dataset's [`AreaUnit`].
    pub area: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_mw: Option<BTreeMap<Platform, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack_ns: Option<BTreeMap<Platform, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq_ghz: Option<BTreeMap<Platform, f64>>,
}

/// Aggregate per-platform figures, used for the platform comparison summary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformMetrics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_mm2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_mw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq_ghz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub schema_version: String,
    pub area_unit: AreaUnit,
    pub ips: Vec<IpProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub platform_summary: Option<BTreeMap<Platform, PlatformMetrics>>,
}

impl Dataset {
    pub fn get(&self, id: &str) -> Option<&IpProfile> {
        self.ips.iter().find(|ip| ip.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }
}

// Wire form. Counts are signed so that negative values surface as named
// validation errors instead of anonymous parse failures.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIpProfile {
    id: String,
    name: String,
    loc_changed: i64,
    #[serde(default)]
    churn_window: Option<i64>,
    confidentiality_risk: f64,
    io_control_nets: i64,
    internal_nets_and_state: i64,
    logic_mapped_to_efpga: f64,
    total_logic: f64,
    f_max_asic: f64,
    f_max_efpga: f64,
    area: f64,
    #[serde(default)]
    power_mw: Option<BTreeMap<Platform, f64>>,
    #[serde(default)]
    slack_ns: Option<BTreeMap<Platform, f64>>,
    #[serde(default)]
    freq_ghz: Option<BTreeMap<Platform, f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    #[allow(dead_code)]
    schema_version: String,
    area_unit: AreaUnit,
    ips: Vec<RawIpProfile>,
    #[serde(default)]
    platform_summary: Option<BTreeMap<Platform, PlatformMetrics>>,
}

/// Reads and validates a dataset file.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text)
}

/// Parses and validates dataset JSON text.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|source| Error::Parse {
        what: "dataset".into(),
        source,
    })?;
    check_schema_version(&value)?;
    let raw: RawDataset = serde_json::from_value(value).map_err(|source| Error::Parse {
        what: "dataset".into(),
        source,
    })?;
    raw.validate()
}

/// Rejects documents whose `schema_version` is missing or not `"1"`.
pub(crate) fn check_schema_version(value: &serde_json::Value) -> Result<()> {
    match value.get("schema_version") {
        Some(serde_json::Value::String(v)) if v == SCHEMA_VERSION => Ok(()),
        Some(serde_json::Value::String(v)) => Err(Error::Version { found: v.clone() }),
        Some(other) => Err(Error::Version {
            found: other.to_string(),
        }),
        None => Err(Error::Version {
            found: "<missing>".into(),
        }),
    }
}

impl RawDataset {
    fn validate(self) -> Result<Dataset> {
        if self.ips.is_empty() {
            return Err(Error::validation("dataset", "ips", "list is empty"));
        }
        let mut seen = HashSet::new();
        let mut ips = Vec::with_capacity(self.ips.len());
        for raw in self.ips {
            if !seen.insert(raw.id.clone()) {
                return Err(Error::validation(
                    format!("IP {:?}", raw.id),
                    "id",
                    "duplicate id",
                ));
            }
            ips.push(raw.validate()?);
        }
        if let Some(summary) = &self.platform_summary {
            for (platform, m) in summary {
                let subject = format!("platform_summary.{platform}");
                for (field, v) in [
                    ("area_mm2", m.area_mm2),
                    ("power_mw", m.power_mw),
                    ("freq_ghz", m.freq_ghz),
                ] {
                    if let Some(v) = v {
                        positive(&subject, field, v)?;
                    }
                }
                if let Some(v) = m.slack_ns {
                    finite(&subject, "slack_ns", v)?;
                }
            }
        }
        Ok(Dataset {
            schema_version: SCHEMA_VERSION.into(),
            area_unit: self.area_unit,
            ips,
            platform_summary: self.platform_summary,
        })
    }
}

fn finite(subject: &str, field: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::validation(subject, field, format!("{v} is not finite")))
    }
}

fn positive(subject: &str, field: &str, v: f64) -> Result<f64> {
    finite(subject, field, v)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::validation(subject, field, format!("{v} must be > 0")))
    }
}

fn count(subject: &str, field: &str, v: i64) -> Result<u64> {
    u64::try_from(v).map_err(|_| Error::validation(subject, field, format!("{v} must be >= 0")))
}

fn platform_map(
    subject: &str,
    field: &str,
    map: Option<BTreeMap<Platform, f64>>,
    require_positive: bool,
) -> Result<Option<BTreeMap<Platform, f64>>> {
    if let Some(m) = &map {
        for (platform, &v) in m {
            let name = format!("{field}.{platform}");
            if require_positive {
                positive(subject, &name, v)?;
            } else {
                finite(subject, &name, v)?;
            }
        }
    }
    Ok(map)
}

impl RawIpProfile {
    fn validate(self) -> Result<IpProfile> {
        let s = format!("IP {:?}", self.id);
        let s = s.as_str();
        if self.id.trim().is_empty() {
            return Err(Error::validation(s, "id", "must not be empty"));
        }
        let loc_changed = count(s, "loc_changed", self.loc_changed)?;
        let churn_window = match self.churn_window {
            None => DEFAULT_CHURN_WINDOW,
            Some(w) if w >= 1 && w <= i64::from(u32::MAX) => w as u32,
            Some(w) => return Err(Error::validation(s, "churn_window", format!("{w} must be >= 1"))),
        };
        let c = finite(s, "confidentiality_risk", self.confidentiality_risk)?;
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::validation(s, "confidentiality_risk", format!("{c} is outside [0, 1]")));
        }
        let io_control_nets = count(s, "io_control_nets", self.io_control_nets)?;
        let internal = count(s, "internal_nets_and_state", self.internal_nets_and_state)?;
        if internal == 0 {
            return Err(Error::validation(s, "internal_nets_and_state", "0 must be > 0"));
        }
        let mapped = finite(s, "logic_mapped_to_efpga", self.logic_mapped_to_efpga)?;
        if mapped < 0.0 {
            return Err(Error::validation(s, "logic_mapped_to_efpga", format!("{mapped} must be >= 0")));
        }
        let total = positive(s, "total_logic", self.total_logic)?;
        if mapped > total {
            return Err(Error::validation(
                s,
                "logic_mapped_to_efpga",
                format!("{mapped} exceeds total_logic {total}"),
            ));
        }
        Ok(IpProfile {
            loc_changed,
            churn_window,
            confidentiality_risk: c,
            io_control_nets,
            internal_nets_and_state: internal,
            logic_mapped_to_efpga: mapped,
            total_logic: total,
            f_max_asic: positive(s, "f_max_asic", self.f_max_asic)?,
            f_max_efpga: positive(s, "f_max_efpga", self.f_max_efpga)?,
            area: positive(s, "area", self.area)?,
            power_mw: platform_map(s, "power_mw", self.power_mw, true)?,
            slack_ns: platform_map(s, "slack_ns", self.slack_ns, false)?,
            freq_ghz: platform_map(s, "freq_ghz", self.freq_ghz, true)?,
            id: self.id,
            name: self.name,
        })
    }
}

/// The two weight vectors of the composite score: `(alpha, beta, gamma,
/// delta)` over adaptability, piracy threat, performance tolerance and
/// resource fit, and `(mu, nu, xi)` inside the piracy threat score over
/// confidentiality, exposure and redaction ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub mu: f64,
    pub nu: f64,
    pub xi: f64,
}

impl ScoreWeights {
    /// Security-leaning weights used for the six-IP case study:
    /// (0.25, 0.35, 0.20, 0.20) and (0.5, 0.3, 0.2).
    pub const REFERENCE: ScoreWeights = ScoreWeights {
        alpha: 0.25,
        beta: 0.35,
        gamma: 0.20,
        delta: 0.20,
        mu: 0.5,
        nu: 0.3,
        xi: 0.2,
    };

    /// Returns the weights unchanged if every component lies in [0, 1] and
    /// both vectors sum to 1.
    pub fn validate(self) -> Result<Self> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("mu", self.mu),
            ("nu", self.nu),
            ("xi", self.xi),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Range {
                    name: name.into(),
                    value: v,
                    range: "[0, 1]",
                });
            }
        }
        let composite = self.alpha + self.beta + self.gamma + self.delta;
        if (composite - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::WeightSum {
                group: "alpha+beta+gamma+delta",
                sum: composite,
            });
        }
        let threat = self.mu + self.nu + self.xi;
        if (threat - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::WeightSum {
                group: "mu+nu+xi",
                sum: threat,
            });
        }
        Ok(self)
    }
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self::REFERENCE
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ip_json(id: &str, extra: &str) -> String {
        format!(
            r#"{{"id":"{id}","name":"n","loc_changed":10,"confidentiality_risk":0.5,
            "io_control_nets":10,"internal_nets_and_state":100,"logic_mapped_to_efpga":5,
            "total_logic":10,"f_max_asic":2.0,"f_max_efpga":1.5,"area":100{extra}}}"#
        )
    }

    fn doc(ips: &[String]) -> String {
        format!(
            r#"{{"schema_version":"1","area_unit":"um2","ips":[{}]}}"#,
            ips.join(",")
        )
    }

    fn field_of(err: Error) -> (String, String) {
        match err {
            Error::Validation { subject, field, .. } => (subject, field),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn loads_minimal_dataset_with_default_churn_window() {
        let d = parse_dataset(&doc(&[ip_json("a", "")])).unwrap();
        assert_eq!(d.ips.len(), 1);
        assert_eq!(d.ips[0].churn_window, 3);
        assert_eq!(d.area_unit, AreaUnit::SquareMicrons);
    }

    #[test]
    fn empty_ip_list_is_rejected() {
        let (_, field) = field_of(parse_dataset(&doc(&[])).unwrap_err());
        assert_eq!(field, "ips");
    }

    #[test]
    fn mapped_logic_above_total_names_the_ip() {
        let bad = ip_json("bad", "").replace(r#""logic_mapped_to_efpga":5"#, r#""logic_mapped_to_efpga":50"#);
        let (subject, field) = field_of(parse_dataset(&doc(&[ip_json("ok", ""), bad])).unwrap_err());
        assert!(subject.contains("bad"));
        assert_eq!(field, "logic_mapped_to_efpga");
    }

    #[test]
    fn negative_count_is_a_named_validation_error() {
        let bad = ip_json("x", "").replace(r#""io_control_nets":10"#, r#""io_control_nets":-1"#);
        let (subject, field) = field_of(parse_dataset(&doc(&[bad])).unwrap_err());
        assert!(subject.contains('x'));
        assert_eq!(field, "io_control_nets");
    }

    #[test]
    fn each_invalid_field_is_reported_by_name() {
        let cases = [
            (r#""confidentiality_risk":0.5"#, r#""confidentiality_risk":1.5"#, "confidentiality_risk"),
            (r#""internal_nets_and_state":100"#, r#""internal_nets_and_state":0"#, "internal_nets_and_state"),
            (r#""total_logic":10"#, r#""total_logic":0"#, "total_logic"),
            (r#""f_max_asic":2.0"#, r#""f_max_asic":0"#, "f_max_asic"),
            (r#""f_max_efpga":1.5"#, r#""f_max_efpga":-1"#, "f_max_efpga"),
            (r#""area":100"#, r#""area":0"#, "area"),
            (r#""loc_changed":10"#, r#""loc_changed":-3"#, "loc_changed"),
        ];
        for (from, to, expected) in cases {
            let bad = ip_json("ip", "").replace(from, to);
            let (_, field) = field_of(parse_dataset(&doc(&[bad])).unwrap_err());
            assert_eq!(field, expected);
        }
        let bad = ip_json("ip", r#","churn_window":0"#);
        assert_eq!(field_of(parse_dataset(&doc(&[bad])).unwrap_err()).1, "churn_window");
        let bad = ip_json("ip", r#","power_mw":{"fpga":0}"#);
        assert_eq!(field_of(parse_dataset(&doc(&[bad])).unwrap_err()).1, "power_mw.fpga");
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let (_, field) = field_of(parse_dataset(&doc(&[ip_json("a", ""), ip_json("a", "")])).unwrap_err());
        assert_eq!(field, "id");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = ip_json("a", r#","aera":3"#);
        assert!(matches!(parse_dataset(&doc(&[typo])), Err(Error::Parse { .. })));
        let top = doc(&[ip_json("a", "")]).replacen('{', r#"{"extra":1,"#, 1);
        assert!(matches!(parse_dataset(&top), Err(Error::Parse { .. })));
    }

    #[test]
    fn wrong_schema_version_is_a_version_error() {
        let text = doc(&[ip_json("a", "")]).replace(r#""schema_version":"1""#, r#""schema_version":"2""#);
        assert!(matches!(parse_dataset(&text), Err(Error::Version { .. })));
        assert!(matches!(parse_dataset("{\"ips\":[]}"), Err(Error::Version { .. })));
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(parse_dataset("{not json"), Err(Error::Parse { .. })));
    }

    #[test]
    fn serialized_dataset_parses_back_equal() {
        let d = parse_dataset(&doc(&[
            ip_json("a", r#","churn_window":5,"power_mw":{"ecologic":52,"fpga":25000}"#),
            ip_json("b", r#","slack_ns":{"asic":-0.5}"#),
        ]))
        .unwrap();
        assert_eq!(parse_dataset(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn weights_validation() {
        assert!(ScoreWeights::REFERENCE.validate().is_ok());
        let corner = ScoreWeights {
            alpha: 1.0,
            beta: 0.0,
            gamma: 0.0,
            delta: 0.0,
            mu: 1.0,
            nu: 0.0,
            xi: 0.0,
        };
        assert_eq!(corner.validate().unwrap(), corner);
        let heavy = ScoreWeights {
            alpha: 0.3,
            beta: 0.3,
            gamma: 0.3,
            delta: 0.3,
            ..ScoreWeights::REFERENCE
        };
        assert!(matches!(heavy.validate(), Err(Error::WeightSum { .. })));
        let threat = ScoreWeights {
            mu: 0.6,
            ..ScoreWeights::REFERENCE
        };
        assert!(matches!(threat.validate(), Err(Error::WeightSum { group: "mu+nu+xi", .. })));
        let negative = ScoreWeights {
            alpha: -0.1,
            beta: 0.45,
            ..ScoreWeights::REFERENCE
        };
        assert!(matches!(negative.validate(), Err(Error::Range { .. })));
        let nan = ScoreWeights {
            xi: f64::NAN,
            ..ScoreWeights::REFERENCE
        };
        assert!(nan.validate().is_err());
    }
}

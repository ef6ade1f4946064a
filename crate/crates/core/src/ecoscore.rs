//! Redaction-suitability scoring of IP blocks.
//!
//! Four sub-scores, each in [0, 1], are combined by a convex weighting into
//! one composite per IP:
//!
//! * adaptability: log-scaled RTL churn relative to the busiest IP,
//! * piracy threat: weighted confidentiality, exposure and redaction ratio,
//! * performance tolerance: eFPGA to ASIC maximum-frequency ratio,
//! * resource fit: area position between the smallest and largest IP.
//!
//! Composites are then divided by the set maximum and ranked.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, ScoreWeights};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub ip_id: String,
    pub adaptability: f64,
    /// Raw I/O-to-internal ratio. Absent when sub-scores were supplied directly.
    pub exposure: Option<f64>,
    pub redaction_ratio: Option<f64>,
    pub piracy_threat: f64,
    pub performance_tolerance: f64,
    pub resource_fit: f64,
    pub composite: f64,
    pub normalized: f64,
}

/// Precomputed sub-scores for one IP, as listed in a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubScores {
    pub ip_id: String,
    pub adaptability: f64,
    pub piracy_threat: f64,
    pub performance_tolerance: f64,
    pub resource_fit: f64,
    /// Used only to break ranking ties.
    #[serde(default)]
    pub area: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringOptions {
    /// Divide every piracy-threat score by the dataset maximum before the
    /// composite step. Off by default.
    #[serde(default)]
    pub normalize_piracy: bool,
}

fn unit_interval(name: &str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Range {
            name: name.into(),
            value,
            range: "[0, 1]",
        })
    }
}

/// `ln(1 + loc) / ln(1 + max)`; zero when no IP changed at all.
pub fn adaptability(loc_changed: u64, max_loc_changed: u64) -> Result<f64> {
    if loc_changed > max_loc_changed {
        return Err(Error::Argument(format!(
            "loc_changed {loc_changed} exceeds dataset maximum {max_loc_changed}"
        )));
    }
    if max_loc_changed == 0 {
        return Ok(0.0);
    }
    Ok((loc_changed as f64).ln_1p() / (max_loc_changed as f64).ln_1p())
}

/// Ratio of I/O and control nets to internal nets plus state elements.
/// Not clamped; pathological IPs may exceed 1.
pub fn exposure(io_control_nets: u64, internal_nets_and_state: u64) -> Result<f64> {
    if internal_nets_and_state == 0 {
        return Err(Error::DivisionGuard(
            "internal_nets_and_state is zero".into(),
        ));
    }
    Ok(io_control_nets as f64 / internal_nets_and_state as f64)
}

pub fn redaction_ratio(mapped: f64, total: f64) -> Result<f64> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Range {
            name: "total_logic".into(),
            value: total,
            range: "(0, inf)",
        });
    }
    if !(0.0..=total).contains(&mapped) {
        return Err(Error::Range {
            name: "logic_mapped_to_efpga".into(),
            value: mapped,
            range: "[0, total_logic]",
        });
    }
    Ok(mapped / total)
}

/// `mu*c + nu*min(e, 1) + xi*r`.
pub fn piracy_threat(c: f64, e: f64, r: f64, w: &ScoreWeights) -> Result<f64> {
    let w = w.validate()?;
    let c = unit_interval("confidentiality_risk", c)?;
    let r = unit_interval("redaction_ratio", r)?;
    if !(e >= 0.0) {
        return Err(Error::Range {
            name: "exposure".into(),
            value: e,
            range: "[0, inf)",
        });
    }
    Ok(w.mu * c + w.nu * e.min(1.0) + w.xi * r)
}

/// `1 - min(1, (f_asic - f_efpga) / f_asic)`, capped at 1 when the eFPGA
/// implementation is the faster one.
pub fn performance_tolerance(f_asic: f64, f_efpga: f64) -> Result<f64> {
    for (name, f) in [("f_max_asic", f_asic), ("f_max_efpga", f_efpga)] {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Range {
                name: name.into(),
                value: f,
                range: "(0, inf)",
            });
        }
    }
    let slowdown = ((f_asic - f_efpga) / f_asic).min(1.0);
    Ok((1.0 - slowdown).min(1.0))
}

/// `(a_max - area) / (a_max - a_min)`; 1 for every IP when all areas match.
pub fn resource_fit(area: f64, a_min: f64, a_max: f64) -> Result<f64> {
    if !(a_min <= area && area <= a_max) {
        return Err(Error::Range {
            name: "area".into(),
            value: area,
            range: "[a_min, a_max]",
        });
    }
    if a_max == a_min {
        return Ok(1.0);
    }
    Ok(((a_max - area) / (a_max - a_min)).clamp(0.0, 1.0))
}

/// Weighted composite `alpha*a + beta*o + gamma*p + delta*r`.
pub fn composite(a: f64, o: f64, p: f64, r: f64, w: &ScoreWeights) -> Result<f64> {
    let w = w.validate()?;
    let a = unit_interval("adaptability", a)?;
    let o = unit_interval("piracy_threat", o)?;
    let p = unit_interval("performance_tolerance", p)?;
    let r = unit_interval("resource_fit", r)?;
    let s = w.alpha * a + w.beta * o + w.gamma * p + w.delta * r;
    // Rounding can push a convex combination a few ulps past its inputs.
    let lo = a.min(o).min(p).min(r);
    let hi = a.max(o).max(p).max(r);
    Ok(s.clamp(lo, hi))
}

/// Divides each composite by the maximum. Every tied maximum maps to
/// exactly 1.0; an all-zero set maps to all ones.
pub fn normalize(composites: &[f64]) -> Vec<f64> {
    let max = composites.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    composites
        .iter()
        .map(|&c| {
            if c == max || max <= 0.0 {
                1.0
            } else {
                c / max
            }
        })
        .collect()
}

/// Scores every IP of a dataset and returns the cards in rank order:
/// composite descending, then area ascending, then id.
pub fn score_dataset(
    d: &Dataset,
    w: &ScoreWeights,
    opts: ScoringOptions,
) -> Result<Vec<ScoreCard>> {
    let w = w.validate()?;
    if d.ips.is_empty() {
        return Err(Error::Empty("dataset has no IPs".into()));
    }
    let max_loc = d.ips.iter().map(|ip| ip.loc_changed).max().unwrap_or(0);
    let a_min = d.ips.iter().map(|ip| ip.area).fold(f64::INFINITY, f64::min);
    let a_max = d.ips.iter().map(|ip| ip.area).fold(f64::NEG_INFINITY, f64::max);

    let mut rows = Vec::with_capacity(d.ips.len());
    for ip in &d.ips {
        let e = exposure(ip.io_control_nets, ip.internal_nets_and_state)?;
        let r = redaction_ratio(ip.logic_mapped_to_efpga, ip.total_logic)?;
        rows.push((
            ScoreCard {
                ip_id: ip.id.clone(),
                adaptability: adaptability(ip.loc_changed, max_loc)?,
                exposure: Some(e),
                redaction_ratio: Some(r),
                piracy_threat: piracy_threat(ip.confidentiality_risk, e, r, &w)?,
                performance_tolerance: performance_tolerance(ip.f_max_asic, ip.f_max_efpga)?,
                resource_fit: resource_fit(ip.area, a_min, a_max)?,
                composite: 0.0,
                normalized: 0.0,
            },
            Some(ip.area),
        ));
    }

    if opts.normalize_piracy {
        let threats: Vec<f64> = rows.iter().map(|(c, _)| c.piracy_threat).collect();
        for ((card, _), o) in rows.iter_mut().zip(normalize(&threats)) {
            // An all-zero column stays zero.
            if card.piracy_threat > 0.0 {
                card.piracy_threat = o;
            }
        }
    }
    finish(rows, &w)
}

/// Ranks precomputed sub-score rows exactly as [`score_dataset`] does from
/// the composite step onward.
pub fn score_from_subscores(rows: &[SubScores], w: &ScoreWeights) -> Result<Vec<ScoreCard>> {
    let w = w.validate()?;
    if rows.is_empty() {
        return Err(Error::Empty("no sub-score rows".into()));
    }
    let rows = rows
        .iter()
        .map(|s| {
            (
                ScoreCard {
                    ip_id: s.ip_id.clone(),
                    adaptability: s.adaptability,
                    exposure: None,
                    redaction_ratio: None,
                    piracy_threat: s.piracy_threat,
                    performance_tolerance: s.performance_tolerance,
                    resource_fit: s.resource_fit,
                    composite: 0.0,
                    normalized: 0.0,
                },
                s.area,
            )
        })
        .collect();
    finish(rows, &w)
}

fn finish(mut rows: Vec<(ScoreCard, Option<f64>)>, w: &ScoreWeights) -> Result<Vec<ScoreCard>> {
    for (card, _) in rows.iter_mut() {
        card.composite = composite(
            card.adaptability,
            card.piracy_threat,
            card.performance_tolerance,
            card.resource_fit,
            w,
        )?;
    }
    let composites: Vec<f64> = rows.iter().map(|(c, _)| c.composite).collect();
    for ((card, _), n) in rows.iter_mut().zip(normalize(&composites)) {
        card.normalized = n;
    }
    rows.sort_by(|(a, area_a), (b, area_b)| rank_order(a, *area_a, b, *area_b));
    Ok(rows.into_iter().map(|(c, _)| c).collect())
}

fn rank_order(a: &ScoreCard, area_a: Option<f64>, b: &ScoreCard, area_b: Option<f64>) -> Ordering {
    b.composite
        .total_cmp(&a.composite)
        .then_with(|| match (area_a, area_b) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            _ => Ordering::Equal,
        })
        .then_with(|| a.ip_id.cmp(&b.ip_id))
}

#[cfg(test)]
mod tests {
    use super::*;

    const W: ScoreWeights = ScoreWeights::REFERENCE;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn adaptability_examples() {
        assert_eq!(adaptability(200, 200).unwrap(), 1.0);
        assert_eq!(adaptability(0, 200).unwrap(), 0.0);
        // ln(181)/ln(201)
        assert!(close(adaptability(180, 200).unwrap(), 0.980_237_252_3, 1e-9));
        assert_eq!(adaptability(0, 0).unwrap(), 0.0);
        assert!(matches!(adaptability(201, 200), Err(Error::Argument(_))));
    }

    #[test]
    fn exposure_examples() {
        assert_eq!(exposure(25, 100).unwrap(), 0.25);
        assert_eq!(exposure(0, 7).unwrap(), 0.0);
        assert_eq!(exposure(100, 100).unwrap(), 1.0);
        assert_eq!(exposure(300, 100).unwrap(), 3.0);
        assert!(matches!(exposure(1, 0), Err(Error::DivisionGuard(_))));
    }

    #[test]
    fn redaction_ratio_examples() {
        let t = 1234.5;
        assert!(close(redaction_ratio(0.8 * t, t).unwrap(), 0.80, 1e-12));
        assert_eq!(redaction_ratio(0.0, t).unwrap(), 0.0);
        assert_eq!(redaction_ratio(t, t).unwrap(), 1.0);
        assert!(redaction_ratio(t + 1.0, t).is_err());
        assert!(redaction_ratio(-1.0, t).is_err());
        assert!(redaction_ratio(0.0, 0.0).is_err());
    }

    #[test]
    fn piracy_threat_examples() {
        assert!(close(piracy_threat(1.0, 1.0, 1.0, &W).unwrap(), 1.0, 1e-12));
        // 0.45 + 0.075 + 0.16
        assert!(close(piracy_threat(0.9, 0.25, 0.80, &W).unwrap(), 0.685, 1e-12));
        assert_eq!(piracy_threat(0.0, 0.0, 0.0, &W).unwrap(), 0.0);
        // exposure is clamped at the combination point only
        assert!(close(piracy_threat(0.0, 4.0, 0.0, &W).unwrap(), 0.3, 1e-12));
        let bad = ScoreWeights { mu: 0.9, ..W };
        assert!(matches!(piracy_threat(0.1, 0.1, 0.1, &bad), Err(Error::WeightSum { .. })));
        assert!(piracy_threat(1.2, 0.1, 0.1, &W).is_err());
    }

    #[test]
    fn performance_tolerance_examples() {
        assert!(close(performance_tolerance(2.53, 2.20).unwrap(), 0.869_565_217_4, 1e-9));
        assert_eq!(performance_tolerance(1.7, 1.7).unwrap(), 1.0);
        assert_eq!(performance_tolerance(2.0, 2.5).unwrap(), 1.0);
        assert!(performance_tolerance(0.0, 1.0).is_err());
        assert!(performance_tolerance(1.0, -1.0).is_err());
    }

    #[test]
    fn resource_fit_examples() {
        assert_eq!(resource_fit(9.0, 1.0, 9.0).unwrap(), 0.0);
        assert_eq!(resource_fit(1.0, 1.0, 9.0).unwrap(), 1.0);
        assert_eq!(resource_fit(5.0, 1.0, 9.0).unwrap(), 0.5);
        assert_eq!(resource_fit(3.0, 3.0, 3.0).unwrap(), 1.0);
        assert!(resource_fit(10.0, 1.0, 9.0).is_err());
    }

    #[test]
    fn composite_examples() {
        // 0.245 + 0.35 + 0.176 + 0.094
        assert!(close(composite(0.98, 1.00, 0.88, 0.47, &W).unwrap(), 0.865, 1e-12));
        assert!(close(composite(0.82, 0.98, 0.86, 0.55, &W).unwrap(), 0.830, 1e-12));
        assert!(close(composite(0.37, 0.37, 0.37, 0.37, &W).unwrap(), 0.37, 1e-15));
        assert!(matches!(composite(1.1, 0.0, 0.0, 0.0, &W), Err(Error::Range { .. })));
    }

    #[test]
    fn normalize_handles_ties_and_zeros() {
        assert_eq!(normalize(&[0.5, 0.25, 0.5]), vec![1.0, 0.5, 1.0]);
        assert_eq!(normalize(&[0.0, 0.0]), vec![1.0, 1.0]);
        assert_eq!(normalize(&[0.3]), vec![1.0]);
    }

    #[test]
    fn table_rows_compose_to_hand_evaluated_values() {
        let rows: Vec<SubScores> = [
            ("d1", 0.98, 1.00, 0.88, 0.47),
            ("d2", 0.82, 0.98, 0.86, 0.55),
            ("d3", 1.00, 0.82, 0.75, 0.00),
            ("d4", 0.94, 0.79, 0.79, 0.13),
            ("d5", 0.19, 0.25, 0.97, 1.00),
            ("d6", 0.26, 0.31, 1.00, 0.84),
        ]
        .into_iter()
        .map(|(id, a, o, p, r)| SubScores {
            ip_id: id.into(),
            adaptability: a,
            piracy_threat: o,
            performance_tolerance: p,
            resource_fit: r,
            area: None,
        })
        .collect();
        let cards = score_from_subscores(&rows, &W).unwrap();
        let order: Vec<&str> = cards.iter().map(|c| c.ip_id.as_str()).collect();
        assert_eq!(order, ["d1", "d2", "d4", "d3", "d6", "d5"]);
        let expected = [("d1", 0.865), ("d2", 0.830), ("d3", 0.687), ("d4", 0.6955), ("d5", 0.529), ("d6", 0.5415)];
        for (id, v) in expected {
            let c = cards.iter().find(|c| c.ip_id == id).unwrap();
            assert!(close(c.composite, v, 1e-12), "{id}: {}", c.composite);
        }
        assert_eq!(cards[0].normalized, 1.0);
    }

    #[test]
    fn all_ones_row_scores_one() {
        let row = SubScores {
            ip_id: "x".into(),
            adaptability: 1.0,
            piracy_threat: 1.0,
            performance_tolerance: 1.0,
            resource_fit: 1.0,
            area: None,
        };
        let cards = score_from_subscores(&[row], &W).unwrap();
        assert_eq!(cards[0].composite, 1.0);
        assert_eq!(cards[0].normalized, 1.0);
    }

    #[test]
    fn out_of_range_subscore_is_rejected() {
        let row = SubScores {
            ip_id: "x".into(),
            adaptability: 1.0,
            piracy_threat: -0.1,
            performance_tolerance: 1.0,
            resource_fit: 1.0,
            area: None,
        };
        assert!(matches!(score_from_subscores(&[row], &W), Err(Error::Range { .. })));
    }
}

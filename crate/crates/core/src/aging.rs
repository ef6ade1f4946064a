//! Temperature-dependent timing slack and aging-aware logic remapping.
//!
//! Slack versus temperature is a piecewise-linear curve per platform. Fabric
//! regions degrade through a multiplicative health factor, so a block's
//! effective slack is `slack_at(T) * health(region)`. Remapping moves blocks
//! off degraded regions onto healthier ones with spare capacity.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlackCurve {
    pub platform: String,
    /// (temperature in °C, slack in ns), strictly increasing temperature.
    pub points: Vec<(f64, f64)>,
}

impl SlackCurve {
    pub fn new(platform: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        let curve = Self {
            platform: platform.into(),
            points,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        let subject = format!("slack curve {:?}", self.platform);
        if self.points.len() < 2 {
            return Err(Error::validation(subject, "points", "need at least 2 points"));
        }
        for (i, &(t, s)) in self.points.iter().enumerate() {
            if !t.is_finite() || !s.is_finite() {
                return Err(Error::validation(&subject, "points", format!("point {i} is not finite")));
            }
            if s < 0.0 {
                return Err(Error::validation(&subject, "points", format!("slack {s} at {t}°C is negative")));
            }
        }
        if self.points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::validation(
                subject,
                "points",
                "temperatures must be strictly increasing",
            ));
        }
        Ok(())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }
}

/// Linear interpolation between knots; exact at knots, no extrapolation.
pub fn slack_at(curve: &SlackCurve, temp: f64) -> Result<f64> {
    curve.validate()?;
    let (lo, hi) = curve.range();
    if !(lo..=hi).contains(&temp) {
        return Err(Error::TemperatureOutOfRange { temp, lo, hi });
    }
    let pts = &curve.points;
    // first knot with temperature >= temp
    let i = pts.partition_point(|&(t, _)| t < temp);
    if pts[i].0 == temp {
        return Ok(pts[i].1);
    }
    let (t0, s0) = pts[i - 1];
    let (t1, s1) = pts[i];
    let frac = (temp - t0) / (t1 - t0);
    Ok(s0 + frac * (s1 - s0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FabricRegion {
    pub id: String,
    pub capacity: f64,
    /// Multiplier on base slack; 1 is pristine.
    pub health_factor: f64,
}

impl FabricRegion {
    fn validate(&self) -> Result<()> {
        let subject = format!("region {:?}", self.id);
        if !(self.capacity > 0.0 && self.capacity.is_finite()) {
            return Err(Error::validation(subject, "capacity", format!("{} must be > 0", self.capacity)));
        }
        if !(self.health_factor > 0.0 && self.health_factor <= 1.0) {
            return Err(Error::validation(
                subject,
                "health_factor",
                format!("{} is outside (0, 1]", self.health_factor),
            ));
        }
        Ok(())
    }
}

/// A unit of mapped logic and the region currently hosting it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogicBlock {
    pub id: String,
    pub size: f64,
    pub region: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemapPlan {
    /// block id -> region id
    pub assignment: BTreeMap<String, String>,
    pub min_slack_before: f64,
    pub min_slack_after: f64,
}

impl RemapPlan {
    pub fn moved(&self, blocks: &[LogicBlock]) -> usize {
        blocks
            .iter()
            .filter(|b| self.assignment.get(&b.id) != Some(&b.region))
            .count()
    }
}

fn region_index(regions: &[FabricRegion]) -> Result<HashMap<&str, &FabricRegion>> {
    let mut idx = HashMap::with_capacity(regions.len());
    for r in regions {
        r.validate()?;
        if idx.insert(r.id.as_str(), r).is_some() {
            return Err(Error::validation(format!("region {:?}", r.id), "id", "duplicate id"));
        }
    }
    Ok(idx)
}

/// Smallest effective slack over all blocks under `assignment`.
pub fn min_slack(
    blocks: &[LogicBlock],
    assignment: &BTreeMap<String, String>,
    regions: &[FabricRegion],
    base_curve: &SlackCurve,
    temp: f64,
) -> Result<f64> {
    let idx = region_index(regions)?;
    let base = slack_at(base_curve, temp)?;
    let mut min = f64::INFINITY;
    for b in blocks {
        let region = assignment
            .get(&b.id)
            .and_then(|r| idx.get(r.as_str()))
            .ok_or_else(|| Error::UnassignedBlock(b.id.clone()))?;
        min = min.min(base * region.health_factor);
    }
    Ok(min)
}

fn check_capacity(
    blocks: &[LogicBlock],
    assignment: &BTreeMap<String, String>,
    idx: &HashMap<&str, &FabricRegion>,
) -> Result<()> {
    let mut load: HashMap<&str, f64> = HashMap::new();
    for b in blocks {
        *load.entry(assignment[&b.id].as_str()).or_default() += b.size;
    }
    for (region, used) in load {
        let cap = idx[region].capacity;
        if used > cap {
            return Err(Error::validation(
                format!("region {region:?}"),
                "capacity",
                format!("hosts {used} units but holds {cap}"),
            ));
        }
    }
    Ok(())
}

/// Re-places blocks, largest first, into the healthiest region that still
/// has room (ties keep a block where it is, then go by region id). The new
/// placement is adopted only if it raises the minimum effective slack;
/// otherwise the current assignment is returned unchanged.
pub fn remap(
    blocks: &[LogicBlock],
    regions: &[FabricRegion],
    base_curve: &SlackCurve,
    temp: f64,
) -> Result<RemapPlan> {
    let idx = region_index(regions)?;
    let mut seen = HashMap::new();
    for b in blocks {
        if !(b.size > 0.0 && b.size.is_finite()) {
            return Err(Error::validation(format!("block {:?}", b.id), "size", format!("{} must be > 0", b.size)));
        }
        if seen.insert(b.id.as_str(), ()).is_some() {
            return Err(Error::validation(format!("block {:?}", b.id), "id", "duplicate id"));
        }
        if !idx.contains_key(b.region.as_str()) {
            return Err(Error::UnassignedBlock(b.id.clone()));
        }
    }
    let demand: f64 = blocks.iter().map(|b| b.size).sum();
    let supply: f64 = regions.iter().map(|r| r.capacity).sum();
    if demand > supply {
        return Err(Error::InfeasibleCapacity { demand, supply });
    }

    let current: BTreeMap<String, String> = blocks
        .iter()
        .map(|b| (b.id.clone(), b.region.clone()))
        .collect();
    check_capacity(blocks, &current, &idx)?;
    let before = min_slack(blocks, &current, regions, base_curve, temp)?;

    let mut order: Vec<&LogicBlock> = blocks.iter().collect();
    order.sort_by(|a, b| b.size.total_cmp(&a.size).then_with(|| a.id.cmp(&b.id)));
    let mut free: HashMap<&str, f64> = regions.iter().map(|r| (r.id.as_str(), r.capacity)).collect();
    let mut proposed = BTreeMap::new();
    let mut placed_all = true;
    for b in order {
        let target = regions
            .iter()
            .filter(|r| free[r.id.as_str()] >= b.size)
            .max_by(|x, y| {
                x.health_factor
                    .total_cmp(&y.health_factor)
                    .then_with(|| (x.id == b.region).cmp(&(y.id == b.region)))
                    .then_with(|| y.id.cmp(&x.id))
            });
        match target {
            Some(r) => {
                *free.get_mut(r.id.as_str()).expect("known region") -= b.size;
                proposed.insert(b.id.clone(), r.id.clone());
            }
            None => {
                placed_all = false;
                break;
            }
        }
    }

    if placed_all {
        let after = min_slack(blocks, &proposed, regions, base_curve, temp)?;
        if after.partial_cmp(&before) == Some(Ordering::Greater) {
            return Ok(RemapPlan {
                assignment: proposed,
                min_slack_before: before,
                min_slack_after: after,
            });
        }
    }
    Ok(RemapPlan {
        assignment: current,
        min_slack_before: before,
        min_slack_after: before,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> SlackCurve {
        SlackCurve::new("test", vec![(25.0, 10.0), (85.0, 8.0), (125.0, 4.0)]).unwrap()
    }

    fn region(id: &str, capacity: f64, health: f64) -> FabricRegion {
        FabricRegion {
            id: id.into(),
            capacity,
            health_factor: health,
        }
    }

    fn block(id: &str, size: f64, region: &str) -> LogicBlock {
        LogicBlock {
            id: id.into(),
            size,
            region: region.into(),
        }
    }

    #[test]
    fn interpolation_is_exact_at_knots_and_linear_between() {
        let c = curve();
        assert_eq!(slack_at(&c, 25.0).unwrap(), 10.0);
        assert_eq!(slack_at(&c, 85.0).unwrap(), 8.0);
        assert_eq!(slack_at(&c, 125.0).unwrap(), 4.0);
        assert_eq!(slack_at(&c, 105.0).unwrap(), 6.0);
        assert_eq!(slack_at(&c, 55.0).unwrap(), 9.0);
    }

    #[test]
    fn no_extrapolation() {
        let c = curve();
        assert!(matches!(slack_at(&c, 24.9), Err(Error::TemperatureOutOfRange { .. })));
        assert!(matches!(slack_at(&c, 130.0), Err(Error::TemperatureOutOfRange { .. })));
        assert!(slack_at(&c, f64::NAN).is_err());
    }

    #[test]
    fn malformed_curves_are_rejected() {
        assert!(SlackCurve::new("x", vec![(0.0, 1.0)]).is_err());
        assert!(SlackCurve::new("x", vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(SlackCurve::new("x", vec![(10.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(SlackCurve::new("x", vec![(0.0, -1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn min_slack_with_healthy_and_degraded_regions() {
        let regions = [region("r0", 10.0, 1.0), region("r1", 10.0, 0.5)];
        let blocks = [block("a", 1.0, "r0"), block("b", 1.0, "r0")];
        let mut asg: BTreeMap<String, String> = blocks.iter().map(|b| (b.id.clone(), b.region.clone())).collect();
        assert_eq!(min_slack(&blocks, &asg, &regions, &curve(), 85.0).unwrap(), 8.0);
        asg.insert("b".into(), "r1".into());
        assert_eq!(min_slack(&blocks, &asg, &regions, &curve(), 85.0).unwrap(), 4.0);
        asg.remove("a");
        assert!(matches!(
            min_slack(&blocks, &asg, &regions, &curve(), 85.0),
            Err(Error::UnassignedBlock(_))
        ));
    }

    #[test]
    fn healthy_fabric_is_left_alone() {
        let regions = [region("r0", 10.0, 1.0), region("r1", 10.0, 1.0)];
        let blocks = [block("a", 3.0, "r1"), block("b", 2.0, "r0")];
        let plan = remap(&blocks, &regions, &curve(), 100.0).unwrap();
        assert_eq!(plan.moved(&blocks), 0);
        assert_eq!(plan.min_slack_before, plan.min_slack_after);
    }

    #[test]
    fn block_moves_off_degraded_region() {
        let regions = [region("hot", 4.0, 0.4), region("cool", 4.0, 1.0)];
        let blocks = [block("a", 2.0, "hot")];
        let plan = remap(&blocks, &regions, &curve(), 125.0).unwrap();
        assert_eq!(plan.assignment["a"], "cool");
        assert!((plan.min_slack_before - 1.6).abs() < 1e-12);
        assert_eq!(plan.min_slack_after, 4.0);
    }

    #[test]
    fn stuck_greedy_keeps_original_assignment() {
        // Best region is too small for the big block; nothing improves.
        let regions = [region("a", 5.0, 0.5), region("b", 1.0, 1.0)];
        let blocks = [block("big", 5.0, "a")];
        let plan = remap(&blocks, &regions, &curve(), 85.0).unwrap();
        assert_eq!(plan.assignment["big"], "a");
        assert_eq!(plan.min_slack_after, plan.min_slack_before);
    }

    #[test]
    fn infeasible_demand_is_an_error() {
        let regions = [region("a", 2.0, 1.0)];
        let blocks = [block("x", 3.0, "a")];
        assert!(matches!(
            remap(&blocks, &regions, &curve(), 85.0),
            Err(Error::InfeasibleCapacity { .. })
        ));
    }

    #[test]
    fn unknown_region_and_overfull_input_are_rejected() {
        let regions = [region("a", 2.0, 1.0), region("b", 2.0, 1.0)];
        assert!(matches!(
            remap(&[block("x", 1.0, "zz")], &regions, &curve(), 85.0),
            Err(Error::UnassignedBlock(_))
        ));
        assert!(matches!(
            remap(&[block("x", 1.5, "a"), block("y", 1.5, "a")], &regions, &curve(), 85.0),
            Err(Error::Validation { .. })
        ));
    }
}

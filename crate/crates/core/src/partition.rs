//! ASIC/eFPGA placement under a fabric area budget.
//!
//! Each IP either goes to the eFPGA fabric or stays hardened. The objective
//! is the summed composite score of the eFPGA-mapped IPs, i.e. a 0/1
//! knapsack with value = composite and weight = area. Two planners:
//! a rank-order greedy and an exhaustive search for small sets.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::ecoscore::ScoreCard;
use crate::error::{Error, Result};
use crate::model::Dataset;

/// Upper bound on dataset size for [`plan_exact`].
pub const EXACT_MAX_IPS: usize = 20;

const ACCOUNTING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FabricBudget {
    capacity: f64,
}

impl FabricBudget {
    pub fn new(capacity: f64) -> Result<Self> {
        if capacity > 0.0 && capacity.is_finite() {
            Ok(Self { capacity })
        } else {
            Err(Error::Budget(capacity))
        }
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanMethod {
    Greedy,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionPlan {
    pub efpga_ips: BTreeSet<String>,
    pub asic_ips: BTreeSet<String>,
    pub used_area: f64,
    pub total_score: f64,
    pub method: PlanMethod,
}

struct Item<'a> {
    id: &'a str,
    area: f64,
    score: f64,
}

/// Pairs each dataset IP with its card, in dataset order. Fails unless the
/// cards and the dataset name exactly the same IPs.
fn items<'a>(cards: &'a [ScoreCard], d: &'a Dataset) -> Result<Vec<Item<'a>>> {
    let mut by_id: HashMap<&str, &ScoreCard> = HashMap::with_capacity(cards.len());
    for c in cards {
        if by_id.insert(c.ip_id.as_str(), c).is_some() {
            return Err(Error::Coverage(format!("duplicate score card for {}", c.ip_id)));
        }
    }
    if by_id.len() != d.ips.len() {
        return Err(Error::Coverage(format!(
            "{} score cards for {} IPs",
            by_id.len(),
            d.ips.len()
        )));
    }
    d.ips
        .iter()
        .map(|ip| {
            let card = by_id
                .get(ip.id.as_str())
                .ok_or_else(|| Error::Coverage(format!("no score card for {}", ip.id)))?;
            Ok(Item {
                id: ip.id.as_str(),
                area: ip.area,
                score: card.composite,
            })
        })
        .collect()
}

fn build(selected: &[&Item<'_>], all: &[Item<'_>], method: PlanMethod) -> PartitionPlan {
    let efpga_ips: BTreeSet<String> = selected.iter().map(|i| i.id.to_owned()).collect();
    let asic_ips = all
        .iter()
        .filter(|i| !efpga_ips.contains(i.id))
        .map(|i| i.id.to_owned())
        .collect();
    PartitionPlan {
        used_area: selected.iter().map(|i| i.area).sum(),
        total_score: selected.iter().map(|i| i.score).sum(),
        efpga_ips,
        asic_ips,
        method,
    }
}

/// Walks the ranked cards and admits each IP whose area still fits.
pub fn plan_greedy(cards: &[ScoreCard], d: &Dataset, b: FabricBudget) -> Result<PartitionPlan> {
    let all = items(cards, d)?;
    let by_id: HashMap<&str, &Item<'_>> = all.iter().map(|i| (i.id, i)).collect();
    let mut remaining = b.capacity();
    let mut selected = Vec::new();
    for card in cards {
        let item = by_id[card.ip_id.as_str()];
        if item.area <= remaining {
            remaining -= item.area;
            selected.push(item);
        }
    }
    let plan = build(&selected, &all, PlanMethod::Greedy);
    validate_plan(&plan, d, b)?;
    Ok(plan)
}

/// Exhaustive search over every subset. Ties on total score go to the
/// smaller used area, then to the lexicographically smallest id set.
pub fn plan_exact(cards: &[ScoreCard], d: &Dataset, b: FabricBudget) -> Result<PartitionPlan> {
    if d.ips.len() > EXACT_MAX_IPS {
        return Err(Error::Size {
            max: EXACT_MAX_IPS,
            found: d.ips.len(),
        });
    }
    let mut all = items(cards, d)?;
    // Bit i of a mask selects the i-th id in sorted order, so sums are
    // always accumulated in the same sequence.
    all.sort_by(|a, b| a.id.cmp(b.id));
    let n = all.len();

    let mut best: Option<(u32, f64, f64)> = None;
    for mask in 0u32..(1u32 << n) {
        let (mut area, mut score) = (0.0, 0.0);
        for (i, item) in all.iter().enumerate() {
            if mask & (1 << i) != 0 {
                area += item.area;
                score += item.score;
            }
        }
        if area > b.capacity() {
            continue;
        }
        let better = match best {
            None => true,
            Some((best_mask, best_score, best_area)) => {
                score > best_score
                    || (score == best_score
                        && (area < best_area
                            || (area == best_area && ids_before(mask, best_mask, &all))))
            }
        };
        if better {
            best = Some((mask, score, area));
        }
    }
    // The empty subset is always feasible.
    let (mask, _, _) = best.expect("empty plan is feasible");
    let selected: Vec<&Item<'_>> = all
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, item)| item)
        .collect();
    let plan = build(&selected, &all, PlanMethod::Exact);
    validate_plan(&plan, d, b)?;
    Ok(plan)
}

/// Compares the sorted id lists of two subsets.
fn ids_before(a: u32, b: u32, all: &[Item<'_>]) -> bool {
    let ids = |m: u32| {
        all.iter()
            .enumerate()
            .filter(move |(i, _)| m & (1 << i) != 0)
            .map(|(_, item)| item.id)
    };
    ids(a).lt(ids(b))
}

/// Checks that a plan partitions the dataset, fits the budget and reports
/// its used area correctly.
pub fn validate_plan(p: &PartitionPlan, d: &Dataset, b: FabricBudget) -> Result<()> {
    if let Some(id) = p.efpga_ips.intersection(&p.asic_ips).next() {
        return Err(Error::Coverage(format!("{id} is placed on both eFPGA and ASIC")));
    }
    let known: BTreeSet<&str> = d.ips.iter().map(|ip| ip.id.as_str()).collect();
    for id in p.efpga_ips.iter().chain(&p.asic_ips) {
        if !known.contains(id.as_str()) {
            return Err(Error::Coverage(format!("{id} is not in the dataset")));
        }
    }
    for id in &known {
        if !p.efpga_ips.contains(*id) && !p.asic_ips.contains(*id) {
            return Err(Error::Coverage(format!("{id} is not placed")));
        }
    }
    let actual: f64 = d
        .ips
        .iter()
        .filter(|ip| p.efpga_ips.contains(&ip.id))
        .map(|ip| ip.area)
        .sum();
    let scale = actual.abs().max(1.0);
    if (actual - p.used_area).abs() > ACCOUNTING_TOLERANCE * scale {
        return Err(Error::Accounting {
            recorded: p.used_area,
            actual,
        });
    }
    if actual > b.capacity() {
        return Err(Error::Capacity {
            used: actual,
            capacity: b.capacity(),
        });
    }
    Ok(())
}

//! Deployment-phase carbon model.
//!
//! Per application, deployment carbon is the fleet's runtime emissions plus
//! a one-off application-development charge (CPU time for RTL/HLS synthesis
//! and bitstream configuration):
//!
//! ```text
//! deploy = n_vol * intensity * (e_use_rate * lifetime_hours) + app_dev
//! app_dev = power_per_core * cores * (rtl + hls + config hours) / 1000 * intensity
//! ```
//!
//! Totals over several applications are plain sums. Manufacturing
//! (embodied) carbon is not modeled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Platform;

pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Mass unit of the configured grid intensity. Reports are always in kg.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntensityUnit {
    #[default]
    KgPerKwh,
    GPerKwh,
}

impl IntensityUnit {
    fn to_kg(self) -> f64 {
        match self {
            IntensityUnit::KgPerKwh => 1.0,
            IntensityUnit::GPerKwh => 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarbonParams {
    pub n_vol: u64,
    pub lifetime_hours: f64,
    /// Stored as configured, in `grid_intensity_unit` per kWh.
    pub grid_intensity: f64,
    #[serde(default)]
    pub grid_intensity_unit: IntensityUnit,
    /// Runtime energy per device-hour; may be left out when calibrated.
    #[serde(default)]
    pub e_use_per_hour_kwh: f64,
    pub cpu_power_per_core_w: f64,
    pub cpu_cores: u32,
    pub rtl_synth_hours: f64,
    pub hls_synth_hours: f64,
    pub config_hours: f64,
    /// Permits `n_vol = 0` for prototype-only accounting.
    #[serde(default)]
    pub prototype: bool,
}

impl CarbonParams {
    /// Reference deployment parameters: 1M units, 131,400 h,
    /// intensity 700, 8 cores at 10 W, 2.5 h RTL + 1.0 h HLS + 0 h config.
    pub fn reference(e_use_per_hour_kwh: f64) -> Self {
        Self {
            n_vol: 1_000_000,
            lifetime_hours: 131_400.0,
            grid_intensity: 700.0,
            grid_intensity_unit: IntensityUnit::KgPerKwh,
            e_use_per_hour_kwh,
            cpu_power_per_core_w: 10.0,
            cpu_cores: 8,
            rtl_synth_hours: 2.5,
            hls_synth_hours: 1.0,
            config_hours: 0.0,
            prototype: false,
        }
    }

    pub fn with_scenario(mut self, s: Scenario) -> Self {
        self.lifetime_hours = s.lifetime_years * HOURS_PER_YEAR;
        self.n_vol = s.volume;
        self
    }

    /// Grid intensity in kg CO2 per kWh.
    pub fn intensity_kg(&self) -> f64 {
        self.grid_intensity * self.grid_intensity_unit.to_kg()
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_fixed()?;
        positive("e_use_per_hour_kwh", self.e_use_per_hour_kwh)
    }

    // Everything except the runtime energy rate, which calibration solves for.
    fn validate_fixed(&self) -> Result<()> {
        if self.n_vol == 0 && !self.prototype {
            return Err(Error::validation(
                "carbon params",
                "n_vol",
                "0 requires the prototype flag",
            ));
        }
        positive("lifetime_hours", self.lifetime_hours)?;
        positive("grid_intensity", self.grid_intensity)?;
        positive("cpu_power_per_core_w", self.cpu_power_per_core_w)?;
        if self.cpu_cores == 0 {
            return Err(Error::validation("carbon params", "cpu_cores", "must be > 0"));
        }
        non_negative("rtl_synth_hours", self.rtl_synth_hours)?;
        non_negative("hls_synth_hours", self.hls_synth_hours)?;
        non_negative("config_hours", self.config_hours)
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation("carbon params", field, format!("{v} must be > 0")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation("carbon params", field, format!("{v} must be >= 0")))
    }
}

/// kg CO2 for synthesis and configuration CPU time of one application.
pub fn app_dev_carbon(p: &CarbonParams) -> Result<f64> {
    p.validate_fixed()?;
    let hours = p.rtl_synth_hours + p.hls_synth_hours + p.config_hours;
    let kwh = p.cpu_power_per_core_w * f64::from(p.cpu_cores) * hours / 1000.0;
    Ok(kwh * p.intensity_kg())
}

fn runtime_carbon(p: &CarbonParams) -> f64 {
    p.n_vol as f64 * p.intensity_kg() * (p.e_use_per_hour_kwh * p.lifetime_hours)
}

/// kg CO2 for one application: fleet runtime energy plus app development.
pub fn deploy_carbon(p: &CarbonParams) -> Result<f64> {
    p.validate()?;
    Ok(runtime_carbon(p) + app_dev_carbon(p)?)
}

/// Sum of [`deploy_carbon`] over applications; each entry carries its own
/// lifetime and is charged its own app-development term.
pub fn total_cfp(apps: &[CarbonParams]) -> Result<f64> {
    if apps.is_empty() {
        return Err(Error::Empty("no applications".into()));
    }
    apps.iter().map(deploy_carbon).sum()
}

/// Solves for the runtime energy rate (kWh per device-hour) at which
/// `deploy_carbon(p)` equals `anchor_kg`.
pub fn calibrate_e_use(anchor_kg: f64, p: &CarbonParams) -> Result<f64> {
    let floor = app_dev_carbon(p)?;
    let denom = p.n_vol as f64 * p.intensity_kg() * p.lifetime_hours;
    if !(anchor_kg.is_finite() && anchor_kg > floor) || denom <= 0.0 {
        return Err(Error::InfeasibleAnchor {
            anchor: anchor_kg,
            floor,
        });
    }
    Ok((anchor_kg - floor) / denom)
}

/// One (lifetime, volume) point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub lifetime_years: f64,
    pub volume: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub lifetimes_years: Vec<f64>,
    pub volumes: Vec<u64>,
    pub fixed_lifetime_for_volume_sweep_years: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lifetimes_years.is_empty() {
            return Err(Error::validation("sweep", "lifetimes_years", "list is empty"));
        }
        if self.volumes.is_empty() {
            return Err(Error::validation("sweep", "volumes", "list is empty"));
        }
        for &l in &self.lifetimes_years {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::validation("sweep", "lifetimes_years", format!("{l} must be > 0")));
            }
        }
        if self.volumes.contains(&0) {
            return Err(Error::validation("sweep", "volumes", "0 must be > 0"));
        }
        let f = self.fixed_lifetime_for_volume_sweep_years;
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::validation(
                "sweep",
                "fixed_lifetime_for_volume_sweep_years",
                format!("{f} must be > 0"),
            ));
        }
        Ok(())
    }

    /// Lifetime points at `volume`, then volume points at the fixed
    /// lifetime, with exact duplicates dropped.
    pub fn scenarios(&self, volume: u64) -> Vec<Scenario> {
        let mut out: Vec<Scenario> = Vec::new();
        let lifetime_axis = self.lifetimes_years.iter().map(|&l| Scenario {
            lifetime_years: l,
            volume,
        });
        let volume_axis = self.volumes.iter().map(|&v| Scenario {
            lifetime_years: self.fixed_lifetime_for_volume_sweep_years,
            volume: v,
        });
        for s in lifetime_axis.chain(volume_axis) {
            if !out.contains(&s) {
                out.push(s);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub scenario: Scenario,
    pub kg_co2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarbonReport {
    pub design_id: String,
    pub platform: Platform,
    pub e_use_per_hour_kwh: f64,
    pub cells: Vec<Cell>,
    /// Mean per-cell reduction against the FPGA report of the same design.
    pub reduction_vs_fpga: Option<f64>,
}

impl CarbonReport {
    pub fn cell(&self, s: Scenario) -> Option<f64> {
        self.cells.iter().find(|c| c.scenario == s).map(|c| c.kg_co2)
    }
}

/// Evaluates `base` at every scenario of `spec`. The lifetime axis runs at
/// `base.n_vol`.
pub fn sweep(
    design_id: &str,
    platform: Platform,
    spec: &SweepSpec,
    base: &CarbonParams,
) -> Result<CarbonReport> {
    spec.validate()?;
    base.validate()?;
    let cells = spec
        .scenarios(base.n_vol)
        .into_iter()
        .map(|s| {
            Ok(Cell {
                scenario: s,
                kg_co2: deploy_carbon(&base.with_scenario(s))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CarbonReport {
        design_id: design_id.to_owned(),
        platform,
        e_use_per_hour_kwh: base.e_use_per_hour_kwh,
        cells,
        reduction_vs_fpga: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellReduction {
    pub scenario: Scenario,
    /// `1 - ours / baseline`; negative when ours emits more.
    pub reduction: f64,
}

/// Per-cell reduction of `ours` relative to `baseline` over identical grids.
pub fn compare(ours: &CarbonReport, baseline: &CarbonReport) -> Result<Vec<CellReduction>> {
    if ours.cells.len() != baseline.cells.len()
        || ours
            .cells
            .iter()
            .zip(&baseline.cells)
            .any(|(a, b)| a.scenario != b.scenario)
    {
        return Err(Error::GridMismatch(format!(
            "{}/{} has {} cells, {}/{} has {}",
            ours.design_id,
            ours.platform,
            ours.cells.len(),
            baseline.design_id,
            baseline.platform,
            baseline.cells.len()
        )));
    }
    ours.cells
        .iter()
        .zip(&baseline.cells)
        .map(|(a, b)| {
            if b.kg_co2 <= 0.0 {
                return Err(Error::DivisionGuard(format!(
                    "baseline cell is {} kg",
                    b.kg_co2
                )));
            }
            Ok(CellReduction {
                scenario: a.scenario,
                reduction: 1.0 - a.kg_co2 / b.kg_co2,
            })
        })
        .collect()
}

/// Mean reduction at `scenario` over the listed designs.
pub fn mean_reduction(
    per_design: &[(String, Vec<CellReduction>)],
    scenario: Scenario,
    designs: &[String],
) -> Result<f64> {
    if designs.is_empty() {
        return Err(Error::Empty("reduction subset".into()));
    }
    let mut sum = 0.0;
    for id in designs {
        let (_, cells) = per_design
            .iter()
            .find(|(d, _)| d == id)
            .ok_or_else(|| Error::Argument(format!("unknown design {id} in reduction subset")))?;
        let cell = cells
            .iter()
            .find(|c| c.scenario == scenario)
            .ok_or_else(|| Error::GridMismatch(format!("{id} has no cell for {scenario:?}")))?;
        sum += cell.reduction;
    }
    Ok(sum / designs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn app_dev_of_reference_parameters() {
        // 10 W * 8 cores * 3.5 h = 0.28 kWh
        let p = CarbonParams::reference(1e-6);
        assert!(rel(app_dev_carbon(&p).unwrap(), 0.28 * 700.0) < 1e-12);
        let g = CarbonParams {
            grid_intensity_unit: IntensityUnit::GPerKwh,
            ..p
        };
        assert!(rel(app_dev_carbon(&g).unwrap(), 0.196) < 1e-12);
    }

    #[test]
    fn app_dev_zero_hours_and_linear_in_cores() {
        let p = CarbonParams {
            rtl_synth_hours: 0.0,
            hls_synth_hours: 0.0,
            config_hours: 0.0,
            ..CarbonParams::reference(1e-6)
        };
        assert_eq!(app_dev_carbon(&p).unwrap(), 0.0);
        let base = CarbonParams::reference(1e-6);
        let doubled = CarbonParams {
            cpu_cores: 16,
            ..base
        };
        assert!(rel(app_dev_carbon(&doubled).unwrap(), 2.0 * app_dev_carbon(&base).unwrap()) < 1e-12);
    }

    #[test]
    fn zero_volume_requires_prototype_flag() {
        let p = CarbonParams {
            n_vol: 0,
            ..CarbonParams::reference(1e-3)
        };
        assert!(deploy_carbon(&p).is_err());
        let proto = CarbonParams { prototype: true, ..p };
        assert_eq!(deploy_carbon(&proto).unwrap(), app_dev_carbon(&proto).unwrap());
    }

    #[test]
    fn halving_lifetime_halves_runtime_term() {
        let p = CarbonParams::reference(2e-5);
        let floor = app_dev_carbon(&p).unwrap();
        let full = deploy_carbon(&p).unwrap() - floor;
        let half = deploy_carbon(&CarbonParams {
            lifetime_hours: p.lifetime_hours / 2.0,
            ..p
        })
        .unwrap()
            - floor;
        assert!(rel(half, full / 2.0) < 1e-12);
    }

    #[test]
    fn total_cfp_sums_applications() {
        let p = CarbonParams::reference(3e-6);
        assert_eq!(total_cfp(&[p]).unwrap(), deploy_carbon(&p).unwrap());
        assert!(rel(total_cfp(&[p; 4]).unwrap(), 4.0 * deploy_carbon(&p).unwrap()) < 1e-12);
        assert!(matches!(total_cfp(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn total_cfp_of_five_applications_matches_hand_sum() {
        // Five applications with lifetimes 1..=5 years, rate 1e-5 kWh/h,
        // 1000 units, intensity 0.5 kg/kWh, 8 * 10 W * 3.5 h app-dev each.
        // runtime_i = 1000 * 0.5 * 1e-5 * 8760 * i = 43.8 * i
        // app_dev   = 0.28 * 0.5 = 0.14
        // total     = 43.8 * 15 + 5 * 0.14 = 657.7
        let apps: Vec<CarbonParams> = (1..=5)
            .map(|years| CarbonParams {
                n_vol: 1000,
                lifetime_hours: years as f64 * HOURS_PER_YEAR,
                grid_intensity: 0.5,
                e_use_per_hour_kwh: 1e-5,
                ..CarbonParams::reference(1e-5)
            })
            .collect();
        assert!(rel(total_cfp(&apps).unwrap(), 657.7) < 1e-12);
    }

    #[test]
    fn calibration_round_trips_and_rejects_low_anchors() {
        let p = CarbonParams::reference(4.2e-6);
        let anchor = deploy_carbon(&p).unwrap();
        assert!(rel(calibrate_e_use(anchor, &p).unwrap(), 4.2e-6) < 1e-12);
        let floor = app_dev_carbon(&p).unwrap();
        assert!(matches!(calibrate_e_use(floor * 0.5, &p), Err(Error::InfeasibleAnchor { .. })));
        assert!(matches!(calibrate_e_use(floor, &p), Err(Error::InfeasibleAnchor { .. })));
    }

    #[test]
    fn unit_spec_yields_single_cell() {
        let spec = SweepSpec {
            lifetimes_years: vec![1.0],
            volumes: vec![1_000_000],
            fixed_lifetime_for_volume_sweep_years: 1.0,
        };
        let base = CarbonParams::reference(1e-6).with_scenario(Scenario {
            lifetime_years: 1.0,
            volume: 1_000_000,
        });
        let r = sweep("d", Platform::Ecologic, &spec, &base).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.cells[0].kg_co2, deploy_carbon(&base).unwrap());
    }

    #[test]
    fn compare_identical_reports_is_zero_and_mismatch_errors() {
        let spec = SweepSpec {
            lifetimes_years: vec![0.5, 1.0],
            volumes: vec![10, 100],
            fixed_lifetime_for_volume_sweep_years: 2.0,
        };
        let base = CarbonParams::reference(1e-6);
        let a = sweep("d", Platform::Ecologic, &spec, &base).unwrap();
        assert!(compare(&a, &a).unwrap().iter().all(|c| c.reduction == 0.0));
        let other = SweepSpec {
            volumes: vec![10],
            ..spec
        };
        let b = sweep("d", Platform::Fpga, &other, &base).unwrap();
        assert!(matches!(compare(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn invalid_sweep_specs() {
        let ok = SweepSpec {
            lifetimes_years: vec![1.0],
            volumes: vec![1],
            fixed_lifetime_for_volume_sweep_years: 1.0,
        };
        assert!(ok.validate().is_ok());
        assert!(SweepSpec { lifetimes_years: vec![], ..ok.clone() }.validate().is_err());
        assert!(SweepSpec { volumes: vec![0], ..ok.clone() }.validate().is_err());
        assert!(SweepSpec { lifetimes_years: vec![-1.0], ..ok.clone() }.validate().is_err());
    }
}

//! Run configuration and the report-producing commands behind the CLI.
//!
//! Every command renders all of its files in memory first and only then
//! touches the output directory, so a failing command leaves no new files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aging::{remap, slack_at, FabricRegion, LogicBlock, SlackCurve};
use crate::carbon::{
    calibrate_e_use, compare, mean_reduction, sweep, CarbonParams, CarbonReport, CellReduction,
    Scenario, SweepSpec,
};
use crate::ecoscore::{score_dataset, ScoreCard, ScoringOptions};
use crate::error::{Error, Result};
use crate::model::{check_schema_version, load_dataset, Dataset, Platform, ScoreWeights};
use crate::partition::{plan_exact, plan_greedy, FabricBudget, PartitionPlan, PlanMethod};
use crate::report::{
    fmt_sig, platform_comparison, tables_to_json, tables_to_markdown, Metric, Table,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSection {
    pub capacity: f64,
    #[serde(default = "default_method")]
    pub method: PlanMethod,
}

fn default_method() -> PlanMethod {
    PlanMethod::Greedy
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformCarbon {
    /// kg CO2 at the anchor scenario; calibrates the runtime energy rate.
    #[serde(default)]
    pub anchor_kg: Option<f64>,
    /// Used directly when no anchor is given.
    #[serde(default)]
    pub e_use_per_hour_kwh: Option<f64>,
    /// Overrides the section-wide sweep for this platform.
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignCarbon {
    pub id: String,
    pub platforms: BTreeMap<Platform, PlatformCarbon>,
}

fn default_anchor() -> Scenario {
    Scenario {
        lifetime_years: 1.0,
        volume: 1_000_000,
    }
}

fn default_ours() -> Platform {
    Platform::Ecologic
}

fn default_baseline() -> Platform {
    Platform::Fpga
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarbonSection {
    pub base: CarbonParams,
    pub sweep: SweepSpec,
    #[serde(default = "default_anchor")]
    pub anchor: Scenario,
    pub designs: Vec<DesignCarbon>,
    #[serde(default = "default_ours")]
    pub ours: Platform,
    #[serde(default = "default_baseline")]
    pub baseline: Platform,
    /// Designs averaged for the headline reduction; defaults to all.
    #[serde(default)]
    pub reduction_subset: Option<Vec<String>>,
    #[serde(default = "default_anchor")]
    pub reduction_scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    #[serde(default = "default_ours")]
    pub ours: Platform,
    #[serde(default = "default_baseline")]
    pub baseline: Platform,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgingSection {
    pub curves: Vec<SlackCurve>,
    #[serde(default)]
    pub regions: Vec<FabricRegion>,
    #[serde(default)]
    pub blocks: Vec<LogicBlock>,
    /// Operating point for the remap.
    pub temperature: f64,
    /// Platform label of the curve used as base slack for the remap.
    #[serde(default)]
    pub remap_curve: Option<String>,
    /// Temperatures sampled into the plot series.
    #[serde(default)]
    pub plot_temperatures: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[allow(dead_code)]
    schema_version: String,
    #[serde(default)]
    dataset: Option<PathBuf>,
    #[serde(default)]
    weights: Option<ScoreWeights>,
    #[serde(default)]
    scoring: ScoringOptions,
    #[serde(default)]
    partition: Option<PartitionSection>,
    #[serde(default)]
    carbon: Option<CarbonSection>,
    #[serde(default)]
    compare: Option<CompareSection>,
    #[serde(default)]
    aging: Option<AgingSection>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    formats: Option<Vec<Format>>,
}

/// Fully resolved run configuration. Relative paths in a config file are
/// taken relative to the file's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub weights: ScoreWeights,
    pub scoring: ScoringOptions,
    pub partition: Option<PartitionSection>,
    pub carbon: Option<CarbonSection>,
    pub compare: CompareSection,
    pub aging: Option<AgingSection>,
    pub output_dir: PathBuf,
    pub formats: BTreeSet<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            weights: ScoreWeights::REFERENCE,
            scoring: ScoringOptions::default(),
            partition: None,
            carbon: None,
            compare: CompareSection {
                ours: Platform::Ecologic,
                baseline: Platform::Fpga,
            },
            aging: None,
            output_dir: PathBuf::from("."),
            formats: BTreeSet::from([Format::Json, Format::Csv, Format::Markdown]),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|source| Error::Parse {
            what: "config".into(),
            source,
        })?;
        check_schema_version(&value)?;
        let raw: RawConfig = serde_json::from_value(value).map_err(|source| Error::Parse {
            what: "config".into(),
            source,
        })?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };
        let cfg = RunConfig {
            dataset: raw.dataset.map(resolve),
            weights: raw.weights.unwrap_or(ScoreWeights::REFERENCE),
            scoring: raw.scoring,
            partition: raw.partition,
            carbon: raw.carbon,
            compare: raw.compare.unwrap_or(CompareSection {
                ours: Platform::Ecologic,
                baseline: Platform::Fpga,
            }),
            aging: raw.aging,
            output_dir: raw.output_dir.map(resolve).unwrap_or_else(|| base_dir.to_path_buf()),
            formats: match raw.formats {
                Some(f) => f.into_iter().collect(),
                None => RunConfig::default().formats,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.formats.is_empty() {
            return Err(Error::validation("config", "formats", "at least one output format is required"));
        }
        self.weights.validate()?;
        Ok(())
    }

    fn load_dataset(&self) -> Result<Dataset> {
        let path = self
            .dataset
            .as_ref()
            .ok_or_else(|| Error::validation("config", "dataset", "no dataset path given"))?;
        load_dataset(path)
    }
}

/// A rendered report file, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

fn emit(stem: &str, title: &str, formats: &BTreeSet<Format>, tables: &[&Table]) -> Vec<OutputFile> {
    let mut files = Vec::new();
    for f in formats {
        match f {
            Format::Json => files.push(OutputFile {
                name: format!("{stem}.json"),
                contents: tables_to_json(tables),
            }),
            Format::Csv => {
                for (i, t) in tables.iter().enumerate() {
                    let name = if i == 0 {
                        format!("{stem}.csv")
                    } else {
                        format!("{stem}_{}.csv", t.name)
                    };
                    files.push(OutputFile {
                        name,
                        contents: t.to_csv(),
                    });
                }
            }
            Format::Markdown => files.push(OutputFile {
                name: format!("{stem}.md"),
                contents: tables_to_markdown(title, tables),
            }),
        }
    }
    files
}

/// Writes every file or none: on the first failure, files already created
/// by this call are removed again.
pub fn write_outputs(dir: &Path, files: &[OutputFile]) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    let dir_existed = dir.is_dir();
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for f in files {
        let path = dir.join(&f.name);
        let tmp = dir.join(format!(".{}.tmp", f.name));
        let result = fs::write(&tmp, &f.contents).and_then(|_| fs::rename(&tmp, &path));
        if let Err(source) = result {
            let _ = fs::remove_file(&tmp);
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if !dir_existed {
                let _ = fs::remove_dir(dir);
            }
            return Err(Error::Io { path, source });
        }
        written.push(path);
    }
    Ok(written)
}

// ---------------------------------------------------------------- score

pub fn score_table(cards: &[ScoreCard], d: &Dataset) -> Table {
    let mut t = Table::new(
        "scores",
        &[
            ("rank", "Rank"),
            ("ip_id", "Design"),
            ("name", "Name"),
            ("adaptability", "A_i Adapt."),
            ("piracy_threat", "O_i Obfus."),
            ("performance_tolerance", "P_i Perf."),
            ("resource_fit", "R_i Resrc."),
            ("composite", "ECOScore"),
            ("normalized", "Normalized"),
            ("exposure", "E_i Exposure"),
            ("redaction_ratio", "Redaction ratio"),
        ],
    );
    for (rank, c) in cards.iter().enumerate() {
        let name = d.get(&c.ip_id).map(|ip| ip.name.clone()).unwrap_or_default();
        t.push(vec![
            (rank as u64 + 1).into(),
            c.ip_id.as_str().into(),
            name.into(),
            c.adaptability.into(),
            c.piracy_threat.into(),
            c.performance_tolerance.into(),
            c.resource_fit.into(),
            c.composite.into(),
            c.normalized.into(),
            c.exposure.into(),
            c.redaction_ratio.into(),
        ]);
    }
    t
}

pub fn cmd_score(cfg: &RunConfig) -> Result<Vec<OutputFile>> {
    let d = cfg.load_dataset()?;
    let cards = score_dataset(&d, &cfg.weights, cfg.scoring)?;
    let t = score_table(&cards, &d);
    Ok(emit("score", "IP redaction scores", &cfg.formats, &[&t]))
}

// ------------------------------------------------------------ partition

pub fn run_partition(
    cfg: &RunConfig,
    method: Option<PlanMethod>,
    capacity: Option<f64>,
) -> Result<(Dataset, Vec<ScoreCard>, FabricBudget, PartitionPlan)> {
    let section = cfg.partition.as_ref();
    let capacity = capacity
        .or(section.map(|s| s.capacity))
        .ok_or_else(|| Error::validation("config", "partition.capacity", "no fabric capacity given"))?;
    let budget = FabricBudget::new(capacity)?;
    let method = method.or(section.map(|s| s.method)).unwrap_or(PlanMethod::Greedy);
    let d = cfg.load_dataset()?;
    let cards = score_dataset(&d, &cfg.weights, cfg.scoring)?;
    let plan = match method {
        PlanMethod::Greedy => plan_greedy(&cards, &d, budget)?,
        PlanMethod::Exact => plan_exact(&cards, &d, budget)?,
    };
    Ok((d, cards, budget, plan))
}

pub fn cmd_partition(
    cfg: &RunConfig,
    method: Option<PlanMethod>,
    capacity: Option<f64>,
) -> Result<Vec<OutputFile>> {
    let (d, cards, budget, plan) = run_partition(cfg, method, capacity)?;
    let mut placement = Table::new(
        "placement",
        &[
            ("rank", "Rank"),
            ("ip_id", "Design"),
            ("target", "Target"),
            ("area", "Area"),
            ("composite", "ECOScore"),
        ],
    );
    for (rank, c) in cards.iter().enumerate() {
        let target = if plan.efpga_ips.contains(&c.ip_id) { "efpga" } else { "asic" };
        let area = d.get(&c.ip_id).map(|ip| ip.area);
        placement.push(vec![
            (rank as u64 + 1).into(),
            c.ip_id.as_str().into(),
            target.into(),
            area.into(),
            c.composite.into(),
        ]);
    }
    let mut summary = Table::new(
        "summary",
        &[
            ("method", "Method"),
            ("capacity", "Capacity"),
            ("used_area", "Used area"),
            ("total_score", "Total score"),
            ("efpga_count", "eFPGA IPs"),
            ("asic_count", "ASIC IPs"),
        ],
    );
    let method = match plan.method {
        PlanMethod::Greedy => "greedy",
        PlanMethod::Exact => "exact",
    };
    summary.push(vec![
        method.into(),
        budget.capacity().into(),
        plan.used_area.into(),
        plan.total_score.into(),
        (plan.efpga_ips.len() as u64).into(),
        (plan.asic_ips.len() as u64).into(),
    ]);
    Ok(emit("partition", "Partition plan", &cfg.formats, &[&placement, &summary]))
}

// --------------------------------------------------------------- carbon

/// Calibrated sweep reports per design and platform, the per-design
/// reductions of `ours` against `baseline`, and the subset mean.
#[derive(Debug, Clone, PartialEq)]
pub struct CarbonOutcome {
    pub reports: Vec<CarbonReport>,
    pub reductions: Vec<(String, Vec<CellReduction>)>,
    pub mean_reduction: Option<f64>,
}

pub fn run_carbon(section: &CarbonSection) -> Result<CarbonOutcome> {
    section.sweep.validate()?;
    let mut reports = Vec::new();
    let mut reductions = Vec::new();
    for design in &section.designs {
        let mut by_platform: BTreeMap<Platform, CarbonReport> = BTreeMap::new();
        for (&platform, pc) in &design.platforms {
            let rate = match (pc.anchor_kg, pc.e_use_per_hour_kwh) {
                (Some(anchor), _) => calibrate_e_use(anchor, &section.base.with_scenario(section.anchor))?,
                (None, Some(rate)) => rate,
                (None, None) => {
                    return Err(Error::validation(
                        format!("design {:?} platform {platform}", design.id),
                        "anchor_kg",
                        "needs anchor_kg or e_use_per_hour_kwh",
                    ))
                }
            };
            let params = CarbonParams {
                e_use_per_hour_kwh: rate,
                ..section.base
            };
            let spec = pc.sweep.as_ref().unwrap_or(&section.sweep);
            by_platform.insert(platform, sweep(&design.id, platform, spec, &params)?);
        }
        if let (Some(ours), Some(base)) = (by_platform.get(&section.ours), by_platform.get(&section.baseline)) {
            let cells = compare(ours, base)?;
            let mean = cells.iter().map(|c| c.reduction).sum::<f64>() / cells.len() as f64;
            by_platform
                .get_mut(&section.ours)
                .expect("present")
                .reduction_vs_fpga = Some(mean);
            reductions.push((design.id.clone(), cells));
        }
        reports.extend(by_platform.into_values());
    }
    let subset: Vec<String> = match &section.reduction_subset {
        Some(s) => s.clone(),
        None => reductions.iter().map(|(id, _)| id.clone()).collect(),
    };
    let mean = if subset.is_empty() {
        None
    } else {
        Some(mean_reduction(&reductions, section.reduction_scenario, &subset)?)
    };
    Ok(CarbonOutcome {
        reports,
        reductions,
        mean_reduction: mean,
    })
}

pub fn cmd_carbon(cfg: &RunConfig) -> Result<Vec<OutputFile>> {
    let section = cfg
        .carbon
        .as_ref()
        .ok_or_else(|| Error::validation("config", "carbon", "section missing"))?;
    let outcome = run_carbon(section)?;

    let mut grid = Table::new(
        "grid",
        &[
            ("design_id", "Design"),
            ("platform", "Platform"),
            ("lifetime_years", "Lifetime (years)"),
            ("volume", "Volume"),
            ("kg_co2", "kg CO2"),
        ],
    );
    for r in &outcome.reports {
        for c in &r.cells {
            grid.push(vec![
                r.design_id.as_str().into(),
                r.platform.as_str().into(),
                c.scenario.lifetime_years.into(),
                c.scenario.volume.into(),
                c.kg_co2.into(),
            ]);
        }
    }
    let mut reduction = Table::new(
        "reduction",
        &[
            ("design_id", "Design"),
            ("lifetime_years", "Lifetime (years)"),
            ("volume", "Volume"),
            ("reduction", "Reduction"),
        ],
    );
    for (id, cells) in &outcome.reductions {
        for c in cells {
            reduction.push(vec![
                id.as_str().into(),
                c.scenario.lifetime_years.into(),
                c.scenario.volume.into(),
                c.reduction.into(),
            ]);
        }
    }
    let mut calibration = Table::new(
        "calibration",
        &[
            ("design_id", "Design"),
            ("platform", "Platform"),
            ("e_use_per_hour_kwh", "E_use (kWh per device-hour)"),
            ("reduction_vs_baseline", "Mean reduction"),
        ],
    );
    for r in &outcome.reports {
        calibration.push(vec![
            r.design_id.as_str().into(),
            r.platform.as_str().into(),
            r.e_use_per_hour_kwh.into(),
            r.reduction_vs_fpga.into(),
        ]);
    }
    let mut summary = Table::new(
        "summary",
        &[
            ("lifetime_years", "Lifetime (years)"),
            ("volume", "Volume"),
            ("designs", "Designs"),
            ("mean_reduction", "Mean reduction"),
        ],
    );
    if let Some(mean) = outcome.mean_reduction {
        let designs = section
            .reduction_subset
            .clone()
            .unwrap_or_else(|| outcome.reductions.iter().map(|(id, _)| id.clone()).collect());
        summary.push(vec![
            section.reduction_scenario.lifetime_years.into(),
            section.reduction_scenario.volume.into(),
            designs.join(" ").into(),
            mean.into(),
        ]);
    }
    Ok(emit(
        "carbon",
        "Deployment carbon",
        &cfg.formats,
        &[&grid, &reduction, &calibration, &summary],
    ))
}

// -------------------------------------------------------------- compare

pub fn cmd_compare(cfg: &RunConfig) -> Result<Vec<OutputFile>> {
    let d = cfg.load_dataset()?;
    let (ours, baseline) = (cfg.compare.ours, cfg.compare.baseline);
    let rows = platform_comparison(&d, ours, baseline);
    let (ours_col, base_col) = (ours.as_str(), baseline.as_str());
    let mut t = Table::new(
        "comparison",
        &[
            ("scope", "Scope"),
            ("metric", "Metric"),
            (ours_col, ours_col),
            (base_col, base_col),
            ("ratio", "Ratio"),
            ("delta", "Delta"),
        ],
    );
    for r in &rows {
        t.push(vec![
            r.scope.as_str().into(),
            r.metric.key().into(),
            r.ours.into(),
            r.baseline.into(),
            r.ratio.into(),
            r.delta.into(),
        ]);
    }
    let mut plot = Table::new("plot", &[("series", "Series"), ("x", "x"), ("y", "y")]);
    for m in Metric::ALL {
        for p in [Platform::Asic, Platform::Fpga, Platform::Ecologic] {
            for ip in &d.ips {
                if let Some(y) = m.of_ip(ip, p) {
                    plot.push(vec![format!("{}:{p}", m.key()).into(), ip.id.as_str().into(), y.into()]);
                }
            }
        }
    }
    let mut files = emit("compare", "Platform comparison", &cfg.formats, &[&t]);
    files.push(OutputFile {
        name: "compare_plot.csv".into(),
        contents: plot.to_csv(),
    });
    Ok(files)
}

// ---------------------------------------------------------------- aging

pub fn cmd_aging(cfg: &RunConfig) -> Result<Vec<OutputFile>> {
    let section = cfg
        .aging
        .as_ref()
        .ok_or_else(|| Error::validation("config", "aging", "section missing"))?;
    for c in &section.curves {
        c.validate()?;
    }
    let mut plot = Table::new("plot", &[("series", "Series"), ("x", "x"), ("y", "y")]);
    for c in &section.curves {
        for &temp in &section.plot_temperatures {
            plot.push(vec![c.platform.as_str().into(), temp.into(), slack_at(c, temp)?.into()]);
        }
    }
    let mut at_temp = Table::new("slack", &[("platform", "Platform"), ("temperature", "Temperature (C)"), ("slack_ns", "Slack (ns)")]);
    for c in &section.curves {
        at_temp.push(vec![
            c.platform.as_str().into(),
            section.temperature.into(),
            slack_at(c, section.temperature)?.into(),
        ]);
    }
    let mut tables = vec![at_temp];
    if !section.blocks.is_empty() {
        let label = section
            .remap_curve
            .clone()
            .unwrap_or_else(|| section.curves.first().map(|c| c.platform.clone()).unwrap_or_default());
        let curve = section
            .curves
            .iter()
            .find(|c| c.platform == label)
            .ok_or_else(|| Error::validation("config", "aging.remap_curve", format!("no curve labelled {label:?}")))?;
        let plan = remap(&section.blocks, &section.regions, curve, section.temperature)?;
        let health: BTreeMap<&str, f64> = section
            .regions
            .iter()
            .map(|r| (r.id.as_str(), r.health_factor))
            .collect();
        let base = slack_at(curve, section.temperature)?;
        let mut moves = Table::new(
            "remap",
            &[
                ("block", "Block"),
                ("size", "Size"),
                ("from", "From"),
                ("to", "To"),
                ("slack_before_ns", "Slack before (ns)"),
                ("slack_after_ns", "Slack after (ns)"),
            ],
        );
        for b in &section.blocks {
            let to = &plan.assignment[&b.id];
            moves.push(vec![
                b.id.as_str().into(),
                b.size.into(),
                b.region.as_str().into(),
                to.as_str().into(),
                (base * health[b.region.as_str()]).into(),
                (base * health[to.as_str()]).into(),
            ]);
        }
        let mut summary = Table::new(
            "remap_summary",
            &[
                ("curve", "Curve"),
                ("temperature", "Temperature (C)"),
                ("min_slack_before_ns", "Min slack before (ns)"),
                ("min_slack_after_ns", "Min slack after (ns)"),
                ("moved", "Blocks moved"),
            ],
        );
        summary.push(vec![
            label.into(),
            section.temperature.into(),
            plan.min_slack_before.into(),
            plan.min_slack_after.into(),
            (plan.moved(&section.blocks) as u64).into(),
        ]);
        tables.push(moves);
        tables.push(summary);
    }
    let refs: Vec<&Table> = tables.iter().collect();
    let mut files = emit("aging", "Slack and remapping", &cfg.formats, &refs);
    files.push(OutputFile {
        name: "aging_plot.csv".into(),
        contents: plot.to_csv(),
    });
    Ok(files)
}

/// One-line human summary of written files.
pub fn describe(files: &[PathBuf]) -> String {
    files
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Formats a fraction as a percentage with 4 significant digits.
pub fn percent(x: f64) -> String {
    format!("{}%", fmt_sig(x * 100.0))
}

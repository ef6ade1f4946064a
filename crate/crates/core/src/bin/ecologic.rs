use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ecologic::partition::PlanMethod;
use ecologic::pipeline::{self, Format, RunConfig};
use ecologic::Result;

#[derive(Debug, Parser)]
#[command(name = "ecologic", version, about = "IP redaction scoring, partition planning, carbon and aging reports")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset path; overrides the config.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated output formats.
    #[arg(long, global = true, value_delimiter = ',')]
    formats: Option<Vec<FormatArg>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    #[value(alias = "md")]
    Markdown,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Greedy,
    Exact,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rank IPs by composite score.
    Score,
    /// Choose the IPs to map onto the eFPGA fabric.
    Partition {
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Fabric capacity in dataset area units.
        #[arg(long, value_parser = positive_capacity)]
        capacity: Option<f64>,
    },
    /// Deployment carbon sweep and reductions.
    Carbon,
    /// Area, power, slack and frequency comparison between platforms.
    Compare,
    /// Slack versus temperature and health-aware remapping.
    Aging,
}

fn positive_capacity(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("capacity must be > 0, got {s}"))
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(d) = cli.dataset {
        cfg.dataset = Some(d);
    }
    if let Some(o) = cli.out {
        cfg.output_dir = o;
    }
    if let Some(f) = cli.formats {
        cfg.formats = f
            .into_iter()
            .map(|f| match f {
                FormatArg::Json => Format::Json,
                FormatArg::Csv => Format::Csv,
                FormatArg::Markdown => Format::Markdown,
            })
            .collect();
    }
    cfg.validate()?;
    let files = match cli.command {
        Command::Score => pipeline::cmd_score(&cfg)?,
        Command::Partition { method, capacity } => {
            let method = method.map(|m| match m {
                MethodArg::Greedy => PlanMethod::Greedy,
                MethodArg::Exact => PlanMethod::Exact,
            });
            pipeline::cmd_partition(&cfg, method, capacity)?
        }
        Command::Carbon => pipeline::cmd_carbon(&cfg)?,
        Command::Compare => pipeline::cmd_compare(&cfg)?,
        Command::Aging => pipeline::cmd_aging(&cfg)?,
    };
    pipeline::write_outputs(&cfg.output_dir, &files)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(written) => {
            println!("{}", pipeline::describe(&written));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

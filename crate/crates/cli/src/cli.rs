use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{analyze, report, simulate_campaign, AnalyzeOptions};
use crate::config::{Analysis, CampaignConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "fiberlink",
    version,
    about = "Two-way optical fiber link simulation and analysis"
)]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a campaign and write Π and Λ counter files per seed.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        /// Replace the configured seeds (repeatable).
        #[arg(short, long = "seed")]
        seeds: Vec<u64>,
        /// Replace the configured output directory.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Analyse the counter files of one record.
    Analyze {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        /// Comma-separated subset of stability, psd, accuracy, reciprocity,
        /// correlation, ledger. Defaults to the config's list, or all.
        #[arg(short, long, value_delimiter = ',')]
        analyses: Vec<String>,
        #[arg(long)]
        tau_avg: Option<f64>,
        /// Flag cycle slips beyond this many robust σ.
        #[arg(long)]
        slip_threshold: Option<f64>,
        /// Take analyses, τ_avg and slip threshold defaults from a campaign
        /// config.
        #[arg(short, long)]
        config: Option<PathBuf>,
    },
    /// Print the summary of an analysis directory.
    Report { dir: PathBuf },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, seeds, out } => {
            let cfg = CampaignConfig::load(&config)?;
            let seeds = (!seeds.is_empty()).then_some(seeds);
            for run in simulate_campaign(&cfg, seeds.as_deref(), out.as_deref())? {
                println!("{}", run.pi.display());
                println!("{}", run.lambda.display());
                println!("{}", run.sidecar.display());
            }
        }
        Command::Analyze {
            inputs,
            out,
            analyses,
            tau_avg,
            slip_threshold,
            config,
        } => {
            let cfg = config.as_deref().map(CampaignConfig::load).transpose()?;
            let analyses: Vec<Analysis> = if !analyses.is_empty() {
                analyses
                    .iter()
                    .map(|a| a.trim().parse())
                    .collect::<Result<_>>()?
            } else if let Some(cfg) = &cfg {
                if cfg.analyses.is_empty() {
                    return Err(CliError::Config(
                        "analyses: at least one analysis is required for analyze".into(),
                    ));
                }
                cfg.analyses.clone()
            } else {
                Analysis::ALL.to_vec()
            };
            let opts = AnalyzeOptions {
                inputs,
                out,
                analyses,
                tau_avg_s: tau_avg.or(cfg.as_ref().and_then(|c| c.tau_avg_s)),
                slip_threshold_sigma: slip_threshold
                    .or(cfg.as_ref().and_then(|c| c.slip_threshold_sigma)),
            };
            let result = analyze(&opts)?;
            for f in result.files {
                println!("{}", f.display());
            }
        }
        Command::Report { dir } => print!("{}", report(&dir)?),
    }
    Ok(())
}

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use aavr_core::{Error, ScenarioConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "aavr", version, about = "Adherence-aware vehicle rebalancing experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Scenario configuration (TOML or JSON); flags below override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Planning horizon in minutes.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    /// Relative MIP gap of the recommenders.
    #[arg(long, global = true)]
    pub mip_gap: Option<f64>,
    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Two-station case studies 1-3.
    CaseStudy(commands::CaseStudyArgs),
    /// Multi-period simulation of one or all models.
    Simulate(commands::SimulateArgs),
    /// Fit travel tables, demand histories and preference weights.
    Fit(commands::FitArgs),
    /// Long-format series for plotting.
    Plotdata(commands::PlotdataArgs),
}

impl Global {
    /// The scenario's own configuration, replaced by `--config` when given,
    /// then overridden by individual flags.
    pub fn resolve(&self, base: &ScenarioConfig) -> aavr_core::Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => base.clone(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = aavr_core::PlanningHorizon::new(h)?;
        }
        if let Some(b) = self.beta {
            cfg.beta = b;
        }
        if let Some(r) = self.rho {
            cfg.rho = r;
        }
        if let Some(g) = self.mip_gap {
            cfg.mip_rel_gap = g;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Exit status of a failed command.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Period { source, .. } => match **source {
                    Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Schema { .. } => 4,
                    _ => 3,
                },
                Error::Solve { .. } | Error::RejectedSnapshot(_) | Error::Certificate { .. } => 3,
                Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::TomlDe(_) | Error::Schema { .. } => 4,
                Error::RejectedScenario(_) => 4,
                Error::InvalidInput(_) => 2,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 4;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(j) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

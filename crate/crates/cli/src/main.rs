use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eventcurve::config::RunConfig;
use eventcurve::report::{cmd_all, cmd_build, cmd_figures, cmd_fit, PipelineError};

#[derive(Parser)]
#[command(name = "eventcurve", version, about = "Two-window yield-curve event study")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build events_dataset.csv and drops.csv from the raw inputs.
    Build(Common),
    /// Fit the configured specifications; writes fits.json and table2.csv.
    Fit(FitArgs),
    /// Write the figure data files from the dataset and fits.
    Figures(Common),
    /// Run build, fit and figures in sequence.
    All(FitArgs),
}

#[derive(Args)]
struct Common {
    /// Run configuration file (TOML).
    #[arg(long, short)]
    config: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Fit only this specification.
    #[arg(long)]
    spec: Option<String>,
    /// Ridge penalty.
    #[arg(long)]
    lambda: Option<f64>,
    /// Minimum complete observations per specification and subgroup.
    #[arg(long)]
    min_n: Option<usize>,
}

impl FitArgs {
    fn config(&self) -> Result<RunConfig, PipelineError> {
        let mut cfg = RunConfig::load(&self.common.config)?;
        if let Some(name) = &self.spec {
            cfg.select_spec(name)?;
        }
        if let Some(l) = self.lambda {
            cfg.fit.ridge_lambda = l;
        }
        if let Some(k) = self.min_n {
            cfg.fit.min_n = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Build(args) => {
            let s = cmd_build(&RunConfig::load(&args.config)?)?;
            println!("{} events retained, {} dropped: {}", s.rows, s.drops, s.dataset.display());
        }
        Command::Fit(args) => {
            let s = cmd_fit(&args.config()?)?;
            println!("{} specifications fitted, {} skipped: {}", s.fitted, s.skipped, s.fits.display());
        }
        Command::Figures(args) => {
            for path in cmd_figures(&RunConfig::load(&args.config)?)? {
                println!("{}", path.display());
            }
        }
        Command::All(args) => {
            let cfg = args.config()?;
            cmd_all(&cfg)?;
            println!("outputs in {}", cfg.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

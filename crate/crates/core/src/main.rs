use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use rpcert::cli::{self, CheckSftOptions, Report, RunConfig};
use rpcert::suite::Fault;

#[derive(Parser)]
#[command(name = "rpcert", version, about = "Reflection-positivity certification for Levin-Wen models")]
struct Args {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    ConvolutionSignFlip,
}

#[derive(Subcommand)]
enum Command {
    /// Randomised SFT / RP invariant suite.
    CheckSft {
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Test hook: deliberately break the implementation.
        #[arg(long, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// Full certification pipeline for the configured model.
    Certify,
    /// Lowest eigenvalues and kernel dimension of H.
    Spectrum,
    /// Check a category (builtin name or file; defaults to the config's).
    ValidateCategory { category: Option<String> },
    /// Check a graph (builtin name or file; defaults to the config's).
    ValidateGraph { graph: Option<String> },
}

fn run(args: Args) -> anyhow::Result<Report> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let report = match args.command {
        Command::CheckSft { dims, trials, inject_fault } => cli::cmd_check_sft(&CheckSftOptions {
            dims,
            trials,
            seed: cfg.seed,
            fault: inject_fault.map(|FaultArg::ConvolutionSignFlip| Fault::ConvolutionSignFlip),
        })?,
        Command::Certify => cli::cmd_certify(&cfg)?,
        Command::Spectrum => cli::cmd_spectrum(&cfg)?,
        Command::ValidateCategory { category } => {
            cli::cmd_validate_category(category.as_deref().unwrap_or(&cfg.category), cfg.tolerance)?
        }
        Command::ValidateGraph { graph } => cli::cmd_validate_graph(graph.as_deref().unwrap_or(&cfg.graph))?,
    };
    let text = report.to_toml()?;
    match &args.out {
        Some(p) => {
            std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
            println!("{}: {:?}", report.command, report.verdict);
        }
        None => print!("{text}"),
    }
    Ok(report)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(r) => ExitCode::from(r.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use lanehouse::synth::SynthSpec;
use lanehouse_cli::{cmd_compare, cmd_llm, cmd_preprocess, cmd_report, cmd_synth, Outcome, RunConfig};

#[derive(Parser)]
#[command(
    name = "lanehouse",
    version,
    about = "Rental-price regression and LLM prompting workbench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Clean and encode the dataset; write the summary and region plot data.
    Preprocess(Common),
    /// Tune and compare the classical models.
    Compare(Common),
    /// Few-shot LLM predictions on the test split.
    Llm {
        #[command(flatten)]
        common: Common,
        /// Use the offline mock model.
        #[arg(long, conflicts_with = "live")]
        mock: bool,
        /// Call the configured endpoint (needs LANEHOUSE_LLM_API_KEY).
        #[arg(long)]
        live: bool,
        /// Comma-separated shot counts, e.g. 0,1,5,10.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        /// Concurrent requests.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Combine the existing reports into report.md.
    Report(Common),
    /// Write a synthetic listing CSV.
    Synth {
        #[arg(long, default_value_t = 200)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        missing: usize,
        #[arg(long, default_value_t = 0)]
        duplicates: usize,
        /// Destination CSV.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(c: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Preprocess(c) => cmd_preprocess(&load(&c)?),
        Command::Compare(c) => cmd_compare(&load(&c)?),
        Command::Llm {
            common,
            mock,
            live,
            k,
            workers,
        } => {
            let mut cfg = load(&common)?;
            if mock || live {
                cfg.llm.client.mock_mode = mock;
            }
            if let Some(k) = k {
                cfg.llm.k_values = k;
            }
            if let Some(w) = workers {
                cfg.llm.client.workers = w;
            }
            cfg.validate()?;
            cmd_llm(&cfg)
        }
        Command::Report(c) => cmd_report(&load(&c)?),
        Command::Synth {
            rows,
            seed,
            missing,
            duplicates,
            out,
        } => cmd_synth(
            &SynthSpec {
                rows,
                seed,
                missing,
                duplicates,
            },
            &out,
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! `multigoal`: train agents, evaluate checkpoints, serve environments and
//! plot benchmark results. Log verbosity follows `MULTIGOAL_LOG`
//! (`error`, `warn`, `info`, `debug`, `trace`; default `info`).

use std::io::Write;
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use multigoal_core::harness::{self, wire};
use multigoal_core::Result;

#[derive(Parser)]
#[command(
    name = "multigoal",
    version,
    about = "Multi-goal manipulation benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent per seed and write metrics, checkpoints and plots.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of seeds, numbered from 0; overrides the config's `seeds`.
        #[arg(long)]
        seeds: Option<u64>,
        /// Overrides the config's `epochs`.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Greedy success rate of a saved agent.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
    },
    /// Serve environments over line-delimited JSON on stdin/stdout, or on a
    /// TCP port with one session per connection.
    Serve {
        /// Run config whose `env` section builds the initial environment.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Rebuild aggregate CSVs and SVG curves from per-seed CSVs.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            out,
            seeds,
            epochs,
        } => {
            let mut cfg = harness::parse_config(&config)?;
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            if let Some(n) = seeds {
                cfg.seeds = (0..n).collect();
            }
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            let a = harness::run_benchmark(&cfg)?;
            for p in a
                .seed_csvs
                .iter()
                .chain(&a.checkpoints)
                .chain(&a.aggregates)
                .chain(&a.plots)
            {
                println!("{}", p.display());
            }
        }
        Command::Eval {
            checkpoint,
            episodes,
        } => {
            let (sr, ret) = harness::eval_checkpoint(&checkpoint, episodes)?;
            println!("success_rate {sr}\nmean_return {ret}");
        }
        Command::Serve { config, port } => {
            let env = config
                .map(|p| harness::parse_config(&p))
                .transpose()?
                .map(|c| c.env);
            match port {
                Some(port) => {
                    let listener = TcpListener::bind(("127.0.0.1", port))?;
                    let addr = listener.local_addr()?;
                    info!("serving on {addr}");
                    println!("listening on {addr}");
                    std::io::stdout().flush()?;
                    wire::serve_tcp(listener, env)?;
                }
                None => {
                    let session = wire::Session::new(env)?;
                    wire::serve_stream(session, std::io::stdin().lock(), std::io::stdout().lock())?;
                }
            }
        }
        Command::Plot { input } => {
            let a = harness::plot_dir(&input)?;
            for p in a.aggregates.iter().chain(&a.plots) {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MULTIGOAL_LOG", "info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

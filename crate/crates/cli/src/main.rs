use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use hrk_cli::commands::{cmd_al, cmd_bench_list, cmd_fit, cmd_predict};
use hrk_cli::config::ExperimentConfig;
use hrk_core::ModelKind;

#[derive(Parser)]
#[command(name = "hrk", version, about = "Kriging surrogates (OK, RK, HRK) and ALM benchmark runs")]
struct Cli {
    /// Worker threads for replicated runs [default: available cores]
    #[arg(long, global = true, env = "HRK_THREADS")]
    threads: Option<usize>,
    /// Base seed; overrides the config file
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config file
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a CSV with header x1..xp,y
    Fit {
        data: PathBuf,
        #[arg(long, default_value = "hrk")]
        model: ModelKind,
        /// Model file [default: <out-dir>/model.json]
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Predict at native-unit points (CSV with header x1..xp)
    Predict {
        model: PathBuf,
        points: PathBuf,
        /// Output CSV [default: stdout]
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a replicated active-learning experiment from a TOML config
    Al { config: PathBuf },
    /// List the built-in test functions
    BenchList,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Fit { data, model, output } => {
            let output = output.unwrap_or_else(|| cli.out_dir.clone().unwrap_or_else(|| ".".into()).join("model.json"));
            let report = cmd_fit(&data, model, cli.seed.unwrap_or(0), &output)?;
            let mut out = io::stdout().lock();
            for (k, v) in &report.lines {
                if k == "warning" {
                    eprintln!("warning: {v}");
                }
                writeln!(out, "{k}: {v}")?;
            }
        }
        Command::Predict { model, points, output } => match output {
            Some(path) => {
                let f = std::fs::File::create(&path)?;
                cmd_predict(&model, &points, f)?;
            }
            None => cmd_predict(&model, &points, io::stdout().lock())?,
        },
        Command::Al { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let threads = cli
                .threads
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let outcome = cmd_al(&cfg, cli.seed, cli.out_dir.as_deref(), threads)?;
            for (m, rep, e) in &outcome.failures {
                eprintln!("warning: {m} replicate {rep} failed: {e}");
            }
            println!(
                "wrote {} traces and {}",
                outcome.trace_files.len(),
                outcome.summary_file.display()
            );
            if !outcome.failed_models.is_empty() {
                let names: Vec<String> = outcome.failed_models.iter().map(|m| m.to_string()).collect();
                eprintln!("error: every replicate failed for: {}", names.join(", "));
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::BenchList => cmd_bench_list(io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use protoselect::dataset::{gaussian_mixture, write_binary_matrix, write_csv};
use protoselect_harness::config::ExperimentConfig;
use protoselect_harness::grid::run_experiments;
use protoselect_harness::output::{self, CsvRow};
use protoselect_harness::summary::{summarize, summarize_traces};
use protoselect_harness::validation;

#[derive(Parser)]
#[command(
    name = "protoselect",
    version,
    about = "Prototype selection experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment grid described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Aggregate a record file (.csv or .jsonl) per grid cell.
    Summarize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Mean objective-vs-queries traces (JSON lines); needs .jsonl input.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Run the acceptance checks.
    Validate,
    /// Write a Gaussian-mixture dataset (.csv with labels, or .bin).
    GenSynth {
        #[arg(long)]
        components: usize,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        dims: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn is_jsonl(path: &std::path::Path) -> bool {
    path.extension().is_some_and(|e| e == "jsonl")
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config)?;
            let records = run_experiments(&config)?;
            output::write_csv(&config.csv_path(), &records)?;
            output::write_jsonl(&config.jsonl_path(), &records)?;
            let failed = records.iter().filter(|r| r.error.is_some()).count();
            eprintln!(
                "{} records ({failed} failed) written to {} and {}",
                records.len(),
                config.csv_path().display(),
                config.jsonl_path().display()
            );
            Ok(true)
        }
        Command::Summarize {
            input,
            output,
            traces,
        } => {
            let (rows, records) = if is_jsonl(&input) {
                let records = output::read_jsonl(&input)?;
                (records.iter().map(CsvRow::from).collect(), Some(records))
            } else {
                (output::read_csv(&input)?, None)
            };
            if rows.is_empty() {
                bail!("{} holds no records", input.display());
            }
            let mut w = csv::Writer::from_path(&output)
                .with_context(|| format!("creating {}", output.display()))?;
            for cell in summarize(&rows) {
                w.serialize(cell)?;
            }
            w.flush()?;
            if let Some(path) = traces {
                let Some(records) = records else {
                    bail!("--traces needs a .jsonl record file");
                };
                let mut w = BufWriter::new(
                    File::create(&path).with_context(|| format!("creating {}", path.display()))?,
                );
                for t in summarize_traces(&records) {
                    serde_json::to_writer(&mut w, &t)?;
                    std::io::Write::write_all(&mut w, b"\n")?;
                }
            }
            Ok(true)
        }
        Command::Validate => {
            let outcomes = validation::run_all(|o| println!("{o}"));
            let passed = outcomes.iter().filter(|o| o.passed).count();
            println!("{passed}/{} criteria passed", outcomes.len());
            Ok(passed == outcomes.len())
        }
        Command::GenSynth {
            components,
            points,
            dims,
            seed,
            out,
        } => {
            let data = gaussian_mixture(components, points, dims, seed)?;
            let file = BufWriter::new(
                File::create(&out).with_context(|| format!("creating {}", out.display()))?,
            );
            match out.extension().and_then(|e| e.to_str()) {
                Some("bin") => write_binary_matrix(file, &data)?,
                _ => write_csv(file, &data)?,
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

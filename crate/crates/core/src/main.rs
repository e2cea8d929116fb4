use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use localfwi::config::{ExperimentConfig, ExperimentKind};
use localfwi::experiments::{
    run_forward, run_inclusion_experiment, run_invert, run_timelapse_experiment, Artifacts,
};
use localfwi::linsolve::{entries_from_csv, entries_to_csv};
use localfwi::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "localfwi",
    version,
    about = "Frequency-domain acoustic waveform inversion with localized updates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration merged over the defaults of the chosen verb.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output_dir` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// RNG seed; overrides `seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize data for the configured model and acquisition.
    Forward,
    /// Invert data with the configured algorithm (irwri, lwi or multiblock).
    Invert,
    /// Naive versus data-assimilated target wavefield around an inclusion.
    Inclusion,
    /// Baseline inversion plus localized and full monitor inversions.
    Timelapse,
    /// Print a solve ledger CSV, totalled by size class.
    LedgerDump {
        /// Ledger CSV written by any other verb.
        path: PathBuf,
    },
}

fn load(cli: &Cli, kind: ExperimentKind) -> Result<(ExperimentConfig, Artifacts)> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path, kind)?,
        None => ExperimentConfig::defaults(kind),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = Some(out.clone());
    }
    let dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((config, Artifacts::create(dir)?))
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("summary serializes")
    );
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Forward => {
            let (config, out) = load(cli, ExperimentKind::Timelapse)?;
            let data = run_forward(&config, &out)?;
            println!(
                "wrote {} frequencies x {} sources x {} receivers to {}",
                data.frequencies().len(),
                data.sources().len(),
                data.receivers().len(),
                out.path("data.lwid").display()
            );
        }
        Command::Invert => {
            let (config, out) = load(cli, ExperimentKind::Timelapse)?;
            print_json(&run_invert(&config, &out)?);
        }
        Command::Inclusion => {
            let (config, out) = load(cli, ExperimentKind::Inclusion)?;
            print_json(&run_inclusion_experiment(&config, &out)?);
        }
        Command::Timelapse => {
            let (config, out) = load(cli, ExperimentKind::Timelapse)?;
            print_json(&run_timelapse_experiment(&config, &out)?);
        }
        Command::LedgerDump { path } => {
            let entries = entries_from_csv(&std::fs::read_to_string(path)?)?;
            print!("{}", entries_to_csv(&entries));
            let mut totals = std::collections::BTreeMap::new();
            for e in &entries {
                *totals.entry(e.size_class.as_str()).or_insert(0u64) += e.count;
            }
            for (class, count) in totals {
                println!("# total {class}: {count}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

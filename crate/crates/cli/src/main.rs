//! `ctb`: batch front end for the CTB dueling-bandit simulator.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ctb::config::ExperimentConfig;
use ctb::experiment::{preflight, run_experiment, write_outputs, Replication, Resources};
use ctb::harness::{lemma1_mc_check, theorem1_bound, BoundInputs, DEFAULT_LEMMA1_HORIZON};
use ctb::record::{format_cell_listing, format_instance_record, instance_record};
use ctb::Error;

#[derive(Parser)]
#[command(name = "ctb", version, about = "Comparing-the-best dueling bandit simulator")]
struct Cli {
    /// Worker threads for parallel replications.
    #[arg(long, global = true, env = "CTB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write raw.csv and summary.csv.
    Run {
        config: PathBuf,
        /// Overrides the configured output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print the cell table of one replication's instance.
    EnumerateCells {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        replication: u64,
        /// Write the listing here instead of standard output.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Also write a replayable record of the instance.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Evaluate the cumulative regret bound.
    Bound {
        #[arg(long = "n")]
        n_arms: usize,
        #[arg(long)]
        m_prime: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
        #[arg(long)]
        lambda: f64,
    },
    /// Compare simulated walk occupation with its closed form.
    CheckLemma1 {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        s: u64,
        #[arg(long, default_value_t = 100_000)]
        walks: usize,
        #[arg(long, default_value_t = DEFAULT_LEMMA1_HORIZON)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Failure::Config(e.to_string())
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }

    /// Bad input is a config failure, anything else a runtime one.
    fn classify(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse { .. } | Error::Domain(_) | Error::DimensionMismatch { .. } => {
                Failure::config(e)
            }
            other => Failure::runtime(other),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: CTB_THREADS must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match cli.command {
        Command::Run { config, output_dir } => run(&config, output_dir),
        Command::EnumerateCells {
            config,
            replication,
            output,
            record,
        } => enumerate_cells(&config, replication, output, record),
        Command::Bound {
            n_arms,
            m_prime,
            p,
            delta,
            lambda,
        } => bound(BoundInputs {
            n_arms,
            m_prime,
            p,
            delta,
            lambda,
        }),
        Command::CheckLemma1 {
            p,
            s,
            walks,
            horizon,
            seed,
        } => check_lemma1(p, s, walks, horizon, seed),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<(ExperimentConfig, Resources, PathBuf), Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let config = ExperimentConfig::from_toml(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let res = Resources::load(&config, &base).map_err(Failure::config)?;
    Ok((config, res, base))
}

fn run(path: &Path, output_dir: Option<PathBuf>) -> Result<(), Failure> {
    let (config, res, base) = load(path)?;
    preflight(&config, &res).map_err(Failure::classify)?;
    let out = run_experiment(&config, &res);
    let dir = output_dir.unwrap_or_else(|| base.join(&config.output_dir));
    let written = write_outputs(&config, &out, &dir).map_err(Failure::runtime)?;
    for p in &written {
        println!("{}", p.display());
    }
    match out.error {
        None => Ok(()),
        Some(e) => Err(Failure::Runtime(format!("run stopped early, partial output kept: {e}"))),
    }
}

fn enumerate_cells(
    path: &Path,
    replication: u64,
    output: Option<PathBuf>,
    record: Option<PathBuf>,
) -> Result<(), Failure> {
    let (config, res, _) = load(path)?;
    let rep = Replication::prepare_with_cells(&config, &res, replication).map_err(Failure::classify)?;
    let table = rep.table.as_ref().ok_or_else(|| Failure::runtime("no cell table"))?;
    let listing = format_cell_listing(table).map_err(Failure::runtime)?;
    match output {
        Some(p) => fs::write(&p, listing).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?,
        None => std::io::stdout()
            .write_all(listing.as_bytes())
            .map_err(Failure::runtime)?,
    }
    if let Some(p) = record {
        let text = format_instance_record(&instance_record(rep.env.instance())).map_err(Failure::runtime)?;
        fs::write(&p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn bound(inputs: BoundInputs) -> Result<(), Failure> {
    let value = theorem1_bound(&inputs).map_err(Failure::config)?;
    println!("{value}");
    Ok(())
}

fn check_lemma1(p: f64, s: u64, walks: usize, horizon: usize, seed: u64) -> Result<(), Failure> {
    let check = lemma1_mc_check(p, s, walks, horizon, seed).map_err(Failure::classify)?;
    println!("estimate {}", check.estimate);
    println!("stderr {}", check.stderr);
    println!("closed_form {}", check.closed_form);
    println!("z {}", check.z_score());
    Ok(())
}

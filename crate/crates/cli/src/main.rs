//! `twinrecover` — end-to-end pipeline for recoverability analysis of
//! selection-biased experiments: parse a causal graph, build its twin
//! network, answer d-separation queries, decide recoverability, execute the
//! recovery on data, and reproduce the built-in simulation studies.
//!
//! Exit codes: 0 = success (for `decide`: the distribution is recoverable),
//! 1 = usage or input error, 2 = scientific negative (`decide` failure, or
//! a reproduction report that misses its tolerances).

mod commands;
mod io;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "twinrecover", version, about)]
struct Cli {
    /// Seed for anything random (simulation, sweeps).
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Machine-readable JSON output where both forms exist.
    #[arg(long, global = true)]
    json: bool,
    /// Directory for produced files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a graph file; print the canonical rendering.
    Parse { graph: PathBuf },
    /// Print the twin network of a graph in the same text format.
    Twin {
        graph: PathBuf,
        /// Intervention node (defaults to the file's target line).
        #[arg(long)]
        intervene: Option<String>,
        /// Outcome node (defaults to the file's target line).
        #[arg(long)]
        outcome: Option<String>,
    },
    /// Answer a d-separation query on a graph (or on its twin network).
    Dsep {
        graph: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Conditioning set, comma-separated.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        given: Vec<String>,
        /// Build the twin network first (query may then use starred names).
        #[arg(long)]
        twin: bool,
        /// Print one active path when connected.
        #[arg(long)]
        explain: bool,
    },
    /// Decide recoverability of the experimental distribution; JSON verdict
    /// on stdout. Exit 0 when recoverable, 2 when not.
    Decide {
        graph: PathBuf,
        #[arg(long)]
        intervene: Option<String>,
        #[arg(long)]
        outcome: Option<String>,
        /// Variables recorded in the biased experiment, comma-separated.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        measured: Vec<String>,
        /// Variables with population-level unbiased distributions.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        external: Vec<String>,
        /// Largest adjustment set tried.
        #[arg(long, default_value_t = 4)]
        max_size: usize,
        /// Recursion budget of the conditional-recovery routine.
        #[arg(long, default_value_t = 8)]
        rc_depth: usize,
    },
    /// Exact discrete recovery from a biased count table plus an external
    /// marginal.
    RecoverDiscrete {
        /// CSV with header `x,<stratum columns...>,y,count`.
        #[arg(long)]
        biased: PathBuf,
        /// CSV with header `<columns...>,prob` (normalized).
        #[arg(long)]
        external: PathBuf,
        /// Treatment level.
        #[arg(long)]
        x: u8,
        /// Also write recovered.csv into --out.
        #[arg(long)]
        write: bool,
    },
    /// Binned KDE recovery of a continuous outcome density.
    RecoverContinuous {
        /// CSV with header `x,z,y` (biased rows).
        #[arg(long)]
        biased: PathBuf,
        /// CSV with header `z` (external unbiased sample).
        #[arg(long)]
        external: PathBuf,
        /// Treatment value.
        #[arg(long)]
        x: f64,
        #[arg(long)]
        grid_min: Option<f64>,
        #[arg(long)]
        grid_max: Option<f64>,
        #[arg(long, default_value_t = 512)]
        grid_points: usize,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long, default_value_t = 5)]
        min_cell: usize,
    },
    /// Compare two gridded densities with all four error metrics.
    Metrics {
        /// First density CSV (`grid,value`).
        a: PathBuf,
        /// Second density CSV on the same grid.
        b: PathBuf,
        /// Sample size to record in the report.
        #[arg(long, default_value_t = 0)]
        n: usize,
    },
    /// Draw a synthetic trial dataset and write it as CSV.
    Simulate {
        /// Built-in configuration: discrete, basic or advanced.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Flat key=value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Selected-cohort size.
        #[arg(long)]
        n: usize,
    },
    /// Run the (sizes x seeds) error-metric sweep and write summary CSVs.
    Sweep {
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![100, 200, 500, 1000, 2000, 4000])]
        sizes: Vec<usize>,
        /// Number of seeds (1..=count).
        #[arg(long, default_value_t = 50)]
        seeds: usize,
    },
    /// Reproduce a built-in study and check it against tolerances.
    /// Exit 2 when a tolerance fails.
    Reproduce {
        /// One of: discrete, continuous, advanced.
        experiment: String,
        /// Number of seeds for the continuous studies.
        #[arg(long, default_value_t = 50)]
        seeds: usize,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("TWINRECOVER_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    };
    ExitCode::from(code)
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Parse { ref graph } => commands::parse(graph, cli.json),
        Command::Twin {
            ref graph,
            ref intervene,
            ref outcome,
        } => commands::twin(graph, intervene.as_deref(), outcome.as_deref()),
        Command::Dsep {
            ref graph,
            ref x,
            ref y,
            ref given,
            twin,
            explain,
        } => commands::dsep(graph, x, y, given, twin, explain, cli.json),
        Command::Decide {
            ref graph,
            ref intervene,
            ref outcome,
            ref measured,
            ref external,
            max_size,
            rc_depth,
        } => commands::decide(
            graph,
            intervene.as_deref(),
            outcome.as_deref(),
            measured,
            external,
            max_size,
            rc_depth,
        ),
        Command::RecoverDiscrete {
            ref biased,
            ref external,
            x,
            write,
        } => commands::recover_discrete_cmd(biased, external, x, write, &cli.out),
        Command::RecoverContinuous {
            ref biased,
            ref external,
            x,
            grid_min,
            grid_max,
            grid_points,
            bins,
            min_cell,
        } => commands::recover_continuous_cmd(
            biased,
            external,
            x,
            grid_min,
            grid_max,
            grid_points,
            bins,
            min_cell,
            &cli.out,
        ),
        Command::Metrics { ref a, ref b, n } => commands::metrics(a, b, n),
        Command::Simulate {
            ref preset,
            ref config,
            n,
        } => commands::simulate(preset.as_deref(), config.as_deref(), n, cli.seed, &cli.out),
        Command::Sweep {
            ref preset,
            ref config,
            ref sizes,
            seeds,
        } => commands::sweep_cmd(preset.as_deref(), config.as_deref(), sizes, seeds, &cli.out),
        Command::Reproduce {
            ref experiment,
            seeds,
        } => commands::reproduce(experiment, seeds, &cli.out),
    }
}

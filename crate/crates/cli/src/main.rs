use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use convoga_cli::commands::{self, BenchOptions, RunOptions};

#[derive(Parser)]
#[command(name = "convoga", version, about = "Online monopoly reserve-price learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Directory receiving CSVs and the effective config.
    #[arg(long, env = "CONVOGA_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    /// Number of seeds, counted up from the seed base.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    seed_base: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Config override, e.g. `--set step.nu=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn options(self) -> RunOptions {
        let jobs = if self.jobs == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            self.jobs
        };
        RunOptions {
            config: self.config,
            out_dir: self.out_dir,
            seeds: self.seeds,
            seed_base: self.seed_base,
            jobs,
            overrides: self.overrides,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Single-phase convergence experiment.
    RunStationary(Common),
    /// Piecewise-stationary experiment with dynamic regret.
    RunTracking(Common),
    /// Surrogate bias and second-moment bounds, kernel norms.
    VerifyBounds(Common),
    /// Finite differences, Monte Carlo unbiasedness, single-peak checks.
    VerifyGradients(Common),
    /// Per-update time and state size at increasing step counts.
    BenchUpdate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [1_000u64, 1_000_000])]
        checkpoints: Vec<u64>,
        #[arg(long, default_value_t = 10_000)]
        batch: u64,
        /// Batch size for ERM and discrete ERM.
        #[arg(long, default_value_t = 100)]
        baseline_batch: u64,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Benchmark all four learners instead of the configured one.
        #[arg(long)]
        all: bool,
    },
    /// Monopoly price, revenue and assumption checks per phase.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::RunStationary(c) => commands::run_stationary(&c.options()),
        Command::RunTracking(c) => commands::run_tracking(&c.options()),
        Command::VerifyBounds(c) => commands::verify_bounds(&c.options()),
        Command::VerifyGradients(c) => commands::verify_gradients(&c.options()),
        Command::BenchUpdate { common, checkpoints, batch, baseline_batch, repeats, all } => commands::bench_update(
            &common.options(),
            &BenchOptions { checkpoints, batch, baseline_batch, repeats, all },
        ),
        Command::Oracle { common, tol } => commands::oracle(&common.options(), tol),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

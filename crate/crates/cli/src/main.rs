//! Command-line driver.
//!
//! Exit codes: 0 success / dissipative / exciting / feasible, 1 verified
//! negative outcome, 2 usage or input-format error, 3 numerical failure
//! (empty null space, non-finite data).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dissipativity::gain::BisectionConfig;
use dissipativity::Error;

use config::{ConfigFile, Settings};

#[derive(Parser)]
#[command(
    name = "dissipativity",
    version,
    about = "Verify dissipativity of discrete-time LTI systems from one measured trajectory"
)]
struct Cli {
    /// JSON config file ({"seed", "jobs", "eig_tol", "input_std"}); CLI flags
    /// take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for batch subcommands (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Master seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Eigenvalue acceptance tolerance (dissipative when min eig >= -eig_tol).
    #[arg(long, global = true)]
    eig_tol: Option<f64>,

    /// Standard deviation of generated input signals.
    #[arg(long, global = true)]
    input_std: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random stable systems and simulated trajectory records.
    Generate {
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// System order n.
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = 2)]
        inputs: usize,
        #[arg(long, default_value_t = 2)]
        outputs: usize,
        /// Record length.
        #[arg(long, default_value_t = 500)]
        tf: usize,
        #[arg(long, default_value_t = 0.3)]
        radius_lo: f64,
        #[arg(long, default_value_t = 0.95)]
        radius_hi: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },

    /// Simulate a model from the zero initial state and write the record.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        /// Length of a generated random input.
        #[arg(long)]
        steps: Option<usize>,
        /// Take the input columns from an existing trajectory CSV instead.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },

    /// Persistency-of-excitation rank check on the input columns of a record.
    PeCheck {
        #[arg(long)]
        data: PathBuf,
        /// Excitation order to test.
        #[arg(long)]
        order: usize,
    },

    /// Run the data-driven dissipativity test; prints a JSON verdict.
    Verify {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        supply: PathBuf,
        #[arg(long = "L")]
        horizon: usize,
        #[arg(long)]
        nu: usize,
        /// System order, when known (sets the excitation order to L+N+n).
        #[arg(long)]
        order: Option<usize>,
        /// Number of stacked samples T to use (default: all available).
        #[arg(long)]
        samples: Option<usize>,
    },

    /// Exact model-based dissipativity decision; mirrors `verify` output.
    Oracle {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        supply: PathBuf,
        #[arg(long = "L")]
        horizon: usize,
        #[arg(long)]
        nu: usize,
    },

    /// Minimal L2-gain bound by bisection over the gain supply.
    L2gain {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "L")]
        horizon: usize,
        #[arg(long)]
        nu: usize,
        /// Bisection bracket tolerance.
        #[arg(long, default_value_t = 0.001)]
        tol: f64,
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
    },

    /// Gain estimates for a manifest of records (CSV: `system_id,trajectory[,model]`).
    BatchL2gain {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "L", default_value_t = 30)]
        horizon: usize,
        /// Zero-initialization lengths, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![5usize, 28])]
        nu: Vec<usize>,
        #[arg(long, default_value_t = 0.001)]
        tol: f64,
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
        /// Cut a snapshot [start, start+len) from each record first.
        #[arg(long, requires = "snapshot_len")]
        snapshot_start: Option<usize>,
        #[arg(long, requires = "snapshot_start")]
        snapshot_len: Option<usize>,
    },

    /// Gain-estimation experiment: random order-4 systems, snapshots at 50,
    /// estimates at nu = 5 and 28 against the true H-infinity norm.
    ReproduceExampleA {
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 500)]
        tf: usize,
        #[arg(long = "L", default_value_t = 30)]
        horizon: usize,
        #[arg(long, default_value_t = 50)]
        snapshot_start: usize,
        #[arg(long, default_value_t = 0.001)]
        tol: f64,
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
        #[arg(long)]
        out: PathBuf,
    },

    /// Oscillator experiment: supply sums over seeded records plus the
    /// verdict matrix over horizons, nu values and both data-length modes.
    ReproduceExampleB {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Records fed through the verdict matrix (kept small for speed).
        #[arg(long, default_value_t = 5)]
        matrix_samples: usize,
        #[arg(long, default_value_t = 300)]
        tf: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn classify(err: &Error) -> u8 {
    match err {
        Error::EmptyNullspace { .. } | Error::NonFinite(_) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let settings = Settings::resolve(&file, cli.seed, cli.jobs, cli.eig_tol, cli.input_std);
    if let Some(jobs) = settings.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("cannot size worker pool: {e}")))?;
    }

    match cli.command {
        Command::Generate {
            count,
            order,
            inputs,
            outputs,
            tf,
            radius_lo,
            radius_hi,
            out_dir,
        } => commands::generate(
            &settings,
            count,
            order,
            inputs,
            outputs,
            tf,
            (radius_lo, radius_hi),
            &out_dir,
        ),
        Command::Simulate {
            model,
            steps,
            input,
            out,
        } => commands::simulate(&settings, &model, steps, input.as_deref(), cli.seed, &out),
        Command::PeCheck { data, order } => commands::pe_check(&data, order),
        Command::Verify {
            data,
            supply,
            horizon,
            nu,
            order,
            samples,
        } => commands::verify_cmd(&settings, &data, &supply, horizon, nu, order, samples),
        Command::Oracle {
            model,
            supply,
            horizon,
            nu,
        } => commands::oracle_cmd(&settings, &model, &supply, horizon, nu),
        Command::L2gain {
            data,
            horizon,
            nu,
            tol,
            max_iters,
        } => {
            let cfg = BisectionConfig {
                abs_tol: tol,
                max_iters,
                initial_upper: None,
            };
            commands::l2gain(&settings, &data, horizon, nu, &cfg)
        }
        Command::BatchL2gain {
            manifest,
            out,
            horizon,
            nu,
            tol,
            max_iters,
            snapshot_start,
            snapshot_len,
        } => {
            let cfg = BisectionConfig {
                abs_tol: tol,
                max_iters,
                initial_upper: None,
            };
            let snapshot = snapshot_start.zip(snapshot_len);
            commands::batch_l2gain(&settings, &manifest, &out, horizon, &nu, &cfg, snapshot)
        }
        Command::ReproduceExampleA {
            count,
            tf,
            horizon,
            snapshot_start,
            tol,
            max_iters,
            out,
        } => {
            let cfg = BisectionConfig {
                abs_tol: tol,
                max_iters,
                initial_upper: None,
            };
            commands::reproduce_example_a(&settings, count, tf, horizon, snapshot_start, &cfg, &out)
        }
        Command::ReproduceExampleB {
            samples,
            matrix_samples,
            tf,
            out_dir,
        } => commands::reproduce_example_b(&settings, samples, matrix_samples, tf, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(classify(&err))
        }
    }
}

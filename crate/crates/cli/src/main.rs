use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, OnceLock};

use clap::{Parser, Subcommand};
use mads_cli::{format_solution, run_bench, run_solve, BenchOptions, SolveOptions};

#[derive(Parser)]
#[command(
    name = "mads",
    version,
    about = "Derivative-free blackbox optimization by mesh adaptive direct search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the problem described by a parameter file.
    ///
    /// SIGINT triggers a hot restart: the parameter file is re-read and the
    /// mutable parameters (MAX_BB_EVAL, EPSILON, SEARCHES, ORDERING,
    /// OPPORTUNISM) are applied without losing progress.
    Solve {
        paramfile: PathBuf,
        /// Override the SEED key.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the NB_THREADS key.
        #[arg(long)]
        threads: Option<usize>,
        /// Override the CACHE_FILE key.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Directory for CSV output (history.csv unless HISTORY_FILE is set).
        #[arg(long, value_name = "DIR")]
        csv: Option<PathBuf>,
    },
    /// Run a benchmark suite and write profile/envelope CSVs.
    Bench {
        /// One of: smoke, unconstrained, constrained, large, all.
        suite: String,
        /// Comma-separated solver list.
        #[arg(long, value_delimiter = ',', default_value = "mads")]
        solvers: Vec<String>,
        /// Number of seeds per (problem, solver) pair.
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        /// Convergence-test tolerance for the data profile.
        #[arg(long, default_value_t = 0.01)]
        tau: f64,
        /// Directory for CSV output (defaults to the working directory).
        #[arg(long, value_name = "DIR")]
        csv: Option<PathBuf>,
    },
}

static INTERRUPT: OnceLock<Arc<AtomicBool>> = OnceLock::new();

fn interrupt_flag() -> Arc<AtomicBool> {
    Arc::clone(INTERRUPT.get_or_init(|| Arc::new(AtomicBool::new(false))))
}

extern "C" fn on_sigint(_: libc::c_int) {
    // Only touches an existing atomic: async-signal-safe.
    if let Some(flag) = INTERRUPT.get() {
        flag.store(true, Ordering::SeqCst);
    }
}

fn install_sigint() {
    interrupt_flag(); // materialize the flag before the handler can fire
    unsafe {
        libc::signal(
            libc::SIGINT,
            on_sigint as extern "C" fn(libc::c_int) as *const () as libc::sighandler_t,
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    install_sigint();
    let result = match cli.command {
        Command::Solve {
            paramfile,
            seed,
            threads,
            cache,
            csv,
        } => {
            let opts = SolveOptions {
                seed,
                threads,
                cache,
                csv_dir: csv,
                interrupt: interrupt_flag(),
            };
            run_solve(&paramfile, &opts).map(|report| {
                println!(
                    "stopped: {} after {} evaluations ({} cached points)",
                    report.stop, report.evaluations, report.cache_size
                );
                println!("{}", format_solution(&report));
            })
        }
        Command::Bench {
            suite,
            solvers,
            seeds,
            tau,
            csv,
        } => {
            let opts = BenchOptions {
                suite,
                solvers,
                seeds,
                tau,
                csv_dir: csv,
            };
            run_bench(&opts).map(|summary| println!("{summary}"))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Library half of the `mads` executable.
//!
//! Everything the binary does — parameter files, the external blackbox
//! protocol, cache and history files, interrupt-driven hot restarts, the
//! benchmark runner — lives here behind plain functions, so integration
//! tests drive the exact code paths the binary ships.
//!
//! # Blackbox protocol
//!
//! An external blackbox is any executable. For each evaluation the solver
//! writes one line of space-separated coordinates (shortest round-trip
//! decimal, full double precision) to a temporary file and runs
//!
//! ```text
//! <BB_EXE> <input-file>
//! ```
//!
//! The first `1 + m` whitespace-separated tokens on standard output are read
//! as the objective followed by the `m` constraint values, in
//! `BB_OUTPUT_TYPE` order. A token of `inf` or `nan` maps to `+inf`. A
//! nonzero exit status, missing tokens, or an unparsable token marks the
//! evaluation FAILED; the run carries on. When `GROUP_MAX_SIZE` exceeds 1
//! the input file holds up to that many lines and stdout is read line by
//! line, one result line per input line.

pub mod benchcmd;
pub mod cachefile;
pub mod evaluator;
pub mod paramfile;
pub mod solve;

pub use benchcmd::{run_bench, BenchOptions};
pub use cachefile::{parse_cache, read_cache, render_cache, write_cache_atomic};
pub use evaluator::ProcessBlackbox;
pub use paramfile::{dump_params, parse_params, parse_spec, BbSource, ParamError, RunSpec};
pub use solve::{format_solution, run_solve, SolveOptions, SolveReport};

/// Top-level error: everything the binary can fail with, mapped onto the
/// documented exit codes (2 for parameter problems, 3 for fatal I/O).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Param(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Param(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> CliError {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Param(e.to_string())
    }
}

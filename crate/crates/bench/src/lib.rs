//! Benchmarking harness for the `mads` solver: bundled analytic problems,
//! run capture, convergence tests, data profiles, and envelope statistics.
//!
//! The pieces compose in a straight line: pick problems
//! ([`problems::bundled`] or your own [`BenchProblem`]), run them with
//! [`run_mads`]/[`run_psd`] under different seeds and solver settings, then
//! aggregate the resulting [`RunRecord`]s into [`data_profile`]s and
//! [`convergence_envelope`]s and render the pinned CSV schemas.

pub mod problems;
pub mod profile;
pub mod record;

pub use problems::{
    bundled, crescent, disk, make_srosenbr, pentagon, quartic10, rosenbrock, snake, sphere,
    synthetic_slow_blackbox, BenchProblem,
};
pub use profile::{
    convergence_envelope, convergence_eval_count, data_profile, default_checkpoints, envelope_csv,
    profile_csv, resolve_reference_values, DataProfile, EnvelopePoint, ProblemMeta,
};
pub use record::{run_mads, run_psd, RunRecord};

//! Parameter files.
//!
//! A run is described by a plain text file of `KEY value...` lines. `#`
//! starts a comment, blank lines are skipped, keys are case-sensitive and
//! uppercase. Later occurrences of a key override earlier ones, except `X0`,
//! which accumulates one starting point per line. Unknown keys are rejected
//! with their line number, as are malformed values — a typo should never
//! silently fall back to a default.
//!
//! ```text
//! DIMENSION 2
//! BB_EXE ./simulator.sh          # or builtin:SPHERE2
//! BB_OUTPUT_TYPE OBJ PB PB
//! X0 ( 0.71 2.0 )
//! LOWER_BOUND * -10
//! MAX_BB_EVAL 1200
//! ```
//!
//! [`parse_spec`] reads a file into a [`RunSpec`]; [`RunSpec::build`] turns
//! it into the solver-facing problem and parameters. [`dump_params`] writes
//! a spec back out in canonical form, and parsing that dump reproduces the
//! spec exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mads::psd::PsdParams;
use mads::{
    BarrierKind, FnBlackbox, OrderingStrategy, OutputKind, Params, Problem, Searches,
    ValidatedProblem,
};

use crate::evaluator::ProcessBlackbox;
use crate::CliError;

#[derive(Debug, thiserror::Error)]
pub enum ParamError {
    #[error("missing mandatory key {key}")]
    MissingKey { key: &'static str },
    #[error("line {line}: unknown key {key}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: {what}")]
    Parse { line: usize, what: String },
}

/// Where evaluations come from: an external executable or one of the
/// bundled analytic problems (`BB_EXE builtin:NAME`).
#[derive(Clone, Debug, PartialEq)]
pub enum BbSource {
    Process(PathBuf),
    Builtin(String),
}

/// `PSD ON n_s n_mt`: run the parallel space decomposition variant with
/// subspaces of dimension `n_s` across `n_mt` lanes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PsdSpec {
    pub n_s: usize,
    pub n_mt: usize,
}

/// A parsed parameter file, still independent of any solver state.
///
/// `None` means the key was absent and the solver default applies. Two specs
/// compare equal exactly when they describe the same run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub dimension: usize,
    pub bb_exe: BbSource,
    pub output_kinds: Vec<OutputKind>,
    /// One or more starting points.
    pub x0: Vec<Vec<f64>>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub max_bb_eval: Option<usize>,
    pub seed: Option<u64>,
    pub initial_frame_size: Option<f64>,
    pub epsilon: Option<f64>,
    pub opportunism: Option<bool>,
    pub ordering: Option<OrderingStrategy>,
    pub searches: Option<Searches>,
    pub nb_threads: Option<usize>,
    pub group_max_size: Option<usize>,
    pub mega_search_poll: Option<bool>,
    pub psd: Option<PsdSpec>,
    pub cache_file: Option<PathBuf>,
    pub history_file: Option<PathBuf>,
}

/// Everything [`RunSpec::build`] produces: the validated problem, the full
/// parameter set, and the file-handling extras the solver core does not know
/// about.
#[derive(Debug)]
pub struct BuiltRun {
    pub problem: ValidatedProblem,
    pub params: Params,
    pub psd: Option<PsdParams>,
    pub cache_file: Option<PathBuf>,
    pub history_file: Option<PathBuf>,
}

/// Reads and parses a parameter file.
pub fn parse_spec(path: &Path) -> Result<RunSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_spec_text(&text).map_err(CliError::from)
}

/// Reads a parameter file and builds the problem/parameter pair it
/// describes.
pub fn parse_params(path: &Path) -> Result<(ValidatedProblem, Params), CliError> {
    let built = parse_spec(path)?.build()?;
    Ok((built.problem, built.params))
}

const KEYS: &[&str] = &[
    "DIMENSION",
    "BB_EXE",
    "BB_OUTPUT_TYPE",
    "X0",
    "LOWER_BOUND",
    "UPPER_BOUND",
    "MAX_BB_EVAL",
    "SEED",
    "INITIAL_FRAME_SIZE",
    "EPSILON",
    "OPPORTUNISM",
    "ORDERING",
    "SEARCHES",
    "NB_THREADS",
    "GROUP_MAX_SIZE",
    "MEGA_SEARCH_POLL",
    "PSD",
    "CACHE_FILE",
    "HISTORY_FILE",
];

/// Parses parameter-file text. Exposed separately from [`parse_spec`] so
/// tests and tools can work on strings.
pub fn parse_spec_text(text: &str) -> Result<RunSpec, ParamError> {
    // First pass: split into (line number, key, value tokens), validating
    // key names. Vector/bound values are kept as raw tokens because their
    // interpretation needs DIMENSION, which may appear later in the file.
    let mut entries: Vec<(usize, String, Vec<String>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        // Parens need not be space-separated: `X0 (1 2)` is fine.
        let spaced = content.replace('(', " ( ").replace(')', " ) ");
        let mut tokens = spaced.split_whitespace().map(str::to_owned);
        let Some(key) = tokens.next() else { continue };
        if !KEYS.contains(&key.as_str()) {
            return Err(ParamError::UnknownKey { line, key });
        }
        entries.push((line, key, tokens.collect()));
    }

    let dimension = {
        let mut dim = None;
        for (line, key, tokens) in &entries {
            if key == "DIMENSION" {
                dim = Some(parse_single::<usize>(*line, "DIMENSION", tokens)?);
            }
        }
        dim.ok_or(ParamError::MissingKey { key: "DIMENSION" })?
    };
    if dimension == 0 {
        return Err(ParamError::MissingKey { key: "DIMENSION" });
    }

    let mut bb_exe = None;
    let mut output_kinds = None;
    let mut x0: Vec<Vec<f64>> = Vec::new();
    let mut spec = RunSpec {
        dimension,
        bb_exe: BbSource::Builtin(String::new()), // placeholder until checked below
        output_kinds: Vec::new(),
        x0: Vec::new(),
        lower: None,
        upper: None,
        max_bb_eval: None,
        seed: None,
        initial_frame_size: None,
        epsilon: None,
        opportunism: None,
        ordering: None,
        searches: None,
        nb_threads: None,
        group_max_size: None,
        mega_search_poll: None,
        psd: None,
        cache_file: None,
        history_file: None,
    };

    for (line, key, tokens) in &entries {
        let line = *line;
        match key.as_str() {
            "DIMENSION" => {} // already handled
            "BB_EXE" => {
                let value = parse_single_token(line, "BB_EXE", tokens)?;
                bb_exe = Some(match value.strip_prefix("builtin:") {
                    Some(name) => BbSource::Builtin(name.to_uppercase()),
                    None => BbSource::Process(PathBuf::from(value)),
                });
            }
            "BB_OUTPUT_TYPE" => {
                if tokens.is_empty() {
                    return Err(err(line, "BB_OUTPUT_TYPE needs at least one entry"));
                }
                let kinds = tokens
                    .iter()
                    .map(|t| match t.to_uppercase().as_str() {
                        "OBJ" => Ok(OutputKind::Obj),
                        "PB" => Ok(OutputKind::Pb),
                        "EB" => Ok(OutputKind::Eb),
                        other => Err(err(line, &format!("unknown output type {other}"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                output_kinds = Some(kinds);
            }
            "X0" => x0.push(parse_vector(line, "X0", tokens, dimension, None)?),
            "LOWER_BOUND" => {
                spec.lower = Some(parse_bound(line, "LOWER_BOUND", tokens, dimension, f64::NEG_INFINITY)?)
            }
            "UPPER_BOUND" => {
                spec.upper = Some(parse_bound(line, "UPPER_BOUND", tokens, dimension, f64::INFINITY)?)
            }
            "MAX_BB_EVAL" => spec.max_bb_eval = Some(parse_single(line, "MAX_BB_EVAL", tokens)?),
            "SEED" => spec.seed = Some(parse_single(line, "SEED", tokens)?),
            "INITIAL_FRAME_SIZE" => {
                let v: f64 = parse_single(line, "INITIAL_FRAME_SIZE", tokens)?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(err(line, "INITIAL_FRAME_SIZE must be positive and finite"));
                }
                spec.initial_frame_size = Some(v);
            }
            "EPSILON" => {
                let v: f64 = parse_single(line, "EPSILON", tokens)?;
                if !(v >= 0.0) {
                    return Err(err(line, "EPSILON must be nonnegative"));
                }
                spec.epsilon = Some(v);
            }
            "OPPORTUNISM" => spec.opportunism = Some(parse_bool(line, "OPPORTUNISM", tokens)?),
            "ORDERING" => {
                let value = parse_single_token(line, "ORDERING", tokens)?;
                spec.ordering = Some(match value.to_uppercase().as_str() {
                    "LAST_SUCCESS" => OrderingStrategy::LastSuccessDirection,
                    "GENERATION" => OrderingStrategy::GenerationOrder,
                    "LEXICOGRAPHIC" => OrderingStrategy::Lexicographic,
                    "RANDOM" => OrderingStrategy::Random,
                    other => {
                        return Err(err(
                            line,
                            &format!(
                                "unknown ordering {other} (choices: LAST_SUCCESS, \
                                 GENERATION, LEXICOGRAPHIC, RANDOM)"
                            ),
                        ))
                    }
                });
            }
            "SEARCHES" => spec.searches = Some(parse_searches(line, tokens)?),
            "NB_THREADS" => {
                let v: usize = parse_single(line, "NB_THREADS", tokens)?;
                if v == 0 {
                    return Err(err(line, "NB_THREADS must be at least 1"));
                }
                spec.nb_threads = Some(v);
            }
            "GROUP_MAX_SIZE" => {
                let v: usize = parse_single(line, "GROUP_MAX_SIZE", tokens)?;
                if v == 0 {
                    return Err(err(line, "GROUP_MAX_SIZE must be at least 1"));
                }
                spec.group_max_size = Some(v);
            }
            "MEGA_SEARCH_POLL" => {
                spec.mega_search_poll = Some(parse_bool(line, "MEGA_SEARCH_POLL", tokens)?)
            }
            "PSD" => spec.psd = parse_psd(line, tokens)?,
            "CACHE_FILE" => {
                spec.cache_file = Some(PathBuf::from(parse_single_token(line, "CACHE_FILE", tokens)?))
            }
            "HISTORY_FILE" => {
                spec.history_file =
                    Some(PathBuf::from(parse_single_token(line, "HISTORY_FILE", tokens)?))
            }
            _ => unreachable!("key set checked in the first pass"),
        }
    }

    spec.bb_exe = bb_exe.ok_or(ParamError::MissingKey { key: "BB_EXE" })?;
    spec.output_kinds = output_kinds.ok_or(ParamError::MissingKey {
        key: "BB_OUTPUT_TYPE",
    })?;
    if x0.is_empty() {
        return Err(ParamError::MissingKey { key: "X0" });
    }
    spec.x0 = x0;
    Ok(spec)
}

fn err(line: usize, what: &str) -> ParamError {
    ParamError::Parse {
        line,
        what: what.to_owned(),
    }
}

fn parse_single_token<'a>(
    line: usize,
    key: &str,
    tokens: &'a [String],
) -> Result<&'a str, ParamError> {
    match tokens {
        [value] => Ok(value),
        _ => Err(err(line, &format!("{key} takes exactly one value"))),
    }
}

fn parse_single<T: std::str::FromStr>(
    line: usize,
    key: &str,
    tokens: &[String],
) -> Result<T, ParamError> {
    let value = parse_single_token(line, key, tokens)?;
    value
        .parse()
        .map_err(|_| err(line, &format!("cannot parse {key} value `{value}`")))
}

fn parse_bool(line: usize, key: &str, tokens: &[String]) -> Result<bool, ParamError> {
    let value = parse_single_token(line, key, tokens)?;
    match value.to_uppercase().as_str() {
        "TRUE" | "YES" | "ON" | "1" => Ok(true),
        "FALSE" | "NO" | "OFF" | "0" => Ok(false),
        _ => Err(err(line, &format!("cannot parse {key} value `{value}` as a boolean"))),
    }
}

/// `( v1 v2 ... vn )`, exactly `n` values. `unbounded` substitutes for a
/// bare `-` token when the caller allows one (bounds do, `X0` does not).
fn parse_vector(
    line: usize,
    key: &str,
    tokens: &[String],
    n: usize,
    unbounded: Option<f64>,
) -> Result<Vec<f64>, ParamError> {
    let inner = match tokens {
        [first, mid @ .., last] if first == "(" && last == ")" => mid,
        _ => return Err(err(line, &format!("{key} expects `( v1 ... v{n} )`"))),
    };
    if inner.len() != n {
        return Err(err(
            line,
            &format!("{key} has {} values, expected {n}", inner.len()),
        ));
    }
    inner
        .iter()
        .map(|t| match (t.as_str(), unbounded) {
            ("-", Some(v)) => Ok(v),
            _ => t
                .parse::<f64>()
                .map_err(|_| err(line, &format!("cannot parse {key} value `{t}`"))),
        })
        .collect()
}

/// A bound line: either `* scalar` broadcast or an explicit vector.
fn parse_bound(
    line: usize,
    key: &str,
    tokens: &[String],
    n: usize,
    unbounded: f64,
) -> Result<Vec<f64>, ParamError> {
    match tokens {
        [star, value] if star == "*" => {
            let v: f64 = value
                .parse()
                .map_err(|_| err(line, &format!("cannot parse {key} value `{value}`")))?;
            Ok(vec![v; n])
        }
        _ => parse_vector(line, key, tokens, n, Some(unbounded)),
    }
}

fn parse_searches(line: usize, tokens: &[String]) -> Result<Searches, ParamError> {
    if tokens.is_empty() {
        return Err(err(line, "SEARCHES needs at least one entry"));
    }
    let upper: Vec<String> = tokens.iter().map(|t| t.to_uppercase()).collect();
    match upper.as_slice() {
        [one] if one == "NONE" => return Ok(Searches::none()),
        [one] if one == "ALL" => return Ok(Searches::all()),
        _ => {}
    }
    let mut searches = Searches::none();
    for name in &upper {
        match name.as_str() {
            "SPECULATIVE" => searches.speculative = true,
            "LH" => searches.latin_hypercube = true,
            "NM" => searches.nelder_mead = true,
            "QUAD" => searches.quad_model = true,
            other => {
                return Err(err(
                    line,
                    &format!(
                        "unknown search {other} (choices: SPECULATIVE, LH, NM, QUAD, ALL, NONE)"
                    ),
                ))
            }
        }
    }
    Ok(searches)
}

fn parse_psd(line: usize, tokens: &[String]) -> Result<Option<PsdSpec>, ParamError> {
    match tokens {
        [one] if one.eq_ignore_ascii_case("OFF") => Ok(None),
        [on, n_s, n_mt] if on.eq_ignore_ascii_case("ON") => {
            let parse = |t: &str| {
                t.parse::<usize>()
                    .map_err(|_| err(line, &format!("cannot parse PSD value `{t}`")))
            };
            Ok(Some(PsdSpec {
                n_s: parse(n_s)?,
                n_mt: parse(n_mt)?,
            }))
        }
        _ => Err(err(line, "PSD expects `ON n_s n_mt` or `OFF`")),
    }
}

impl RunSpec {
    /// Resolves the spec into a validated problem and full parameter set.
    ///
    /// Builtin problems must agree with the file on dimension and output
    /// layout; their bounds apply when the file gives none. The barrier kind
    /// follows the declared constraint types: all-`EB` constraint sets run
    /// under the extreme barrier, anything with a `PB` constraint under the
    /// progressive one.
    pub fn build(&self) -> Result<BuiltRun, CliError> {
        if self.output_kinds.iter().filter(|k| **k == OutputKind::Obj).count() != 1 {
            return Err(CliError::Param(
                "BB_OUTPUT_TYPE must contain exactly one OBJ".into(),
            ));
        }

        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        let blackbox: Arc<dyn mads::Blackbox> = match &self.bb_exe {
            BbSource::Process(path) => {
                Arc::new(ProcessBlackbox::new(path.clone(), self.output_kinds.len())?)
            }
            BbSource::Builtin(name) => {
                let bp = mads_bench::bundled()
                    .into_iter()
                    .find(|p| p.name == *name)
                    .ok_or_else(|| {
                        CliError::Param(format!("no builtin problem named {name}"))
                    })?;
                if bp.n != self.dimension {
                    return Err(CliError::Param(format!(
                        "builtin {name} has dimension {}, parameter file says {}",
                        bp.n, self.dimension
                    )));
                }
                if bp.output_kinds.len() != self.output_kinds.len()
                    || self.output_kinds[0] != OutputKind::Obj
                {
                    return Err(CliError::Param(format!(
                        "builtin {name} produces {} outputs with the objective first",
                        bp.output_kinds.len()
                    )));
                }
                lower = lower.or_else(|| Some(bp.lower.clone()));
                upper = upper.or_else(|| Some(bp.upper.clone()));
                let eval = bp.eval_fn();
                Arc::new(FnBlackbox::new(move |x: &[f64]| eval(x)))
            }
        };

        let mut problem = Problem::new(self.dimension, self.output_kinds.clone(), blackbox);
        if let Some(lo) = lower {
            problem.lower = lo;
        }
        if let Some(hi) = upper {
            problem.upper = hi;
        }
        for x in &self.x0 {
            problem = problem.with_x0(x.clone());
        }
        let problem = problem
            .validate()
            .map_err(|e| CliError::Param(e.to_string()))?;

        let mut params = Params::default_for(&problem);
        if let Some(v) = self.max_bb_eval {
            params.max_bb_eval = v;
        }
        if let Some(v) = self.seed {
            params.seed = v;
        }
        if let Some(v) = self.initial_frame_size {
            params.delta0 = v;
        }
        if let Some(v) = self.epsilon {
            params.eps_stop = v;
        }
        if let Some(v) = self.opportunism {
            params.opportunism = v;
        }
        if let Some(v) = self.ordering {
            params.ordering = v;
        }
        if let Some(v) = self.searches {
            params.searches = v;
        }
        if let Some(v) = self.nb_threads {
            params.n_workers = v;
        }
        if let Some(v) = self.group_max_size {
            params.group_max_size = v;
        }
        if let Some(v) = self.mega_search_poll {
            params.mega_search_poll = v;
        }
        let constraints: Vec<_> = self
            .output_kinds
            .iter()
            .filter(|k| **k != OutputKind::Obj)
            .collect();
        params.barrier = if !constraints.is_empty()
            && constraints.iter().all(|k| **k == OutputKind::Eb)
        {
            BarrierKind::Extreme
        } else {
            BarrierKind::Progressive
        };
        params
            .validate()
            .map_err(|e| CliError::Param(e.to_string()))?;

        let psd = match self.psd {
            Some(PsdSpec { n_s, n_mt }) => {
                let mut p = PsdParams::default_for(&problem);
                p.n_s = n_s;
                p.n_mt = n_mt;
                Some(p)
            }
            None => None,
        };

        Ok(BuiltRun {
            problem,
            params,
            psd,
            cache_file: self.cache_file.clone(),
            history_file: self.history_file.clone(),
        })
    }
}

/// Writes a spec in canonical form: one line per set key, fixed order,
/// shortest round-trip floats. Parsing the dump yields the original spec.
pub fn dump_params(spec: &RunSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "DIMENSION {}", spec.dimension);
    match &spec.bb_exe {
        BbSource::Process(path) => drop(writeln!(out, "BB_EXE {}", path.display())),
        BbSource::Builtin(name) => drop(writeln!(out, "BB_EXE builtin:{name}")),
    }
    let kinds: Vec<&str> = spec
        .output_kinds
        .iter()
        .map(|k| match k {
            OutputKind::Obj => "OBJ",
            OutputKind::Pb => "PB",
            OutputKind::Eb => "EB",
        })
        .collect();
    let _ = writeln!(out, "BB_OUTPUT_TYPE {}", kinds.join(" "));
    for x in &spec.x0 {
        let _ = writeln!(out, "X0 {}", vector(x));
    }
    if let Some(lo) = &spec.lower {
        let _ = writeln!(out, "LOWER_BOUND {}", vector(lo));
    }
    if let Some(hi) = &spec.upper {
        let _ = writeln!(out, "UPPER_BOUND {}", vector(hi));
    }
    if let Some(v) = spec.max_bb_eval {
        let _ = writeln!(out, "MAX_BB_EVAL {v}");
    }
    if let Some(v) = spec.seed {
        let _ = writeln!(out, "SEED {v}");
    }
    if let Some(v) = spec.initial_frame_size {
        let _ = writeln!(out, "INITIAL_FRAME_SIZE {v}");
    }
    if let Some(v) = spec.epsilon {
        let _ = writeln!(out, "EPSILON {v}");
    }
    if let Some(v) = spec.opportunism {
        let _ = writeln!(out, "OPPORTUNISM {}", if v { "TRUE" } else { "FALSE" });
    }
    if let Some(v) = spec.ordering {
        let name = match v {
            OrderingStrategy::LastSuccessDirection => "LAST_SUCCESS",
            OrderingStrategy::GenerationOrder => "GENERATION",
            OrderingStrategy::Lexicographic => "LEXICOGRAPHIC",
            OrderingStrategy::Random => "RANDOM",
        };
        let _ = writeln!(out, "ORDERING {name}");
    }
    if let Some(s) = spec.searches {
        let _ = writeln!(out, "SEARCHES {}", searches_value(&s));
    }
    if let Some(v) = spec.nb_threads {
        let _ = writeln!(out, "NB_THREADS {v}");
    }
    if let Some(v) = spec.group_max_size {
        let _ = writeln!(out, "GROUP_MAX_SIZE {v}");
    }
    if let Some(v) = spec.mega_search_poll {
        let _ = writeln!(out, "MEGA_SEARCH_POLL {}", if v { "TRUE" } else { "FALSE" });
    }
    if let Some(PsdSpec { n_s, n_mt }) = spec.psd {
        let _ = writeln!(out, "PSD ON {n_s} {n_mt}");
    }
    if let Some(p) = &spec.cache_file {
        let _ = writeln!(out, "CACHE_FILE {}", p.display());
    }
    if let Some(p) = &spec.history_file {
        let _ = writeln!(out, "HISTORY_FILE {}", p.display());
    }
    out
}

fn vector(values: &[f64]) -> String {
    let inner: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("( {} )", inner.join(" "))
}

fn searches_value(s: &Searches) -> String {
    if *s == Searches::none() {
        return "NONE".into();
    }
    if *s == Searches::all() {
        return "ALL".into();
    }
    let mut names = Vec::new();
    if s.speculative {
        names.push("SPECULATIVE");
    }
    if s.latin_hypercube {
        names.push("LH");
    }
    if s.nelder_mead {
        names.push("NM");
    }
    if s.quad_model {
        names.push("QUAD");
    }
    names.join(" ")
}

/// The first immutable key whose value differs between two specs, if any.
///
/// Hot restarts may change the evaluation budget, stopping tolerance,
/// searches, ordering, and opportunism; everything else identifies the run
/// and must stay fixed while it is in progress.
pub fn immutable_change(old: &RunSpec, new: &RunSpec) -> Option<&'static str> {
    if old.dimension != new.dimension {
        return Some("DIMENSION");
    }
    if old.bb_exe != new.bb_exe {
        return Some("BB_EXE");
    }
    if old.output_kinds != new.output_kinds {
        return Some("BB_OUTPUT_TYPE");
    }
    if old.x0 != new.x0 {
        return Some("X0");
    }
    if old.lower != new.lower {
        return Some("LOWER_BOUND");
    }
    if old.upper != new.upper {
        return Some("UPPER_BOUND");
    }
    if old.seed != new.seed {
        return Some("SEED");
    }
    if old.initial_frame_size != new.initial_frame_size {
        return Some("INITIAL_FRAME_SIZE");
    }
    if old.nb_threads != new.nb_threads {
        return Some("NB_THREADS");
    }
    if old.group_max_size != new.group_max_size {
        return Some("GROUP_MAX_SIZE");
    }
    if old.mega_search_poll != new.mega_search_poll {
        return Some("MEGA_SEARCH_POLL");
    }
    if old.psd != new.psd {
        return Some("PSD");
    }
    if old.cache_file != new.cache_file {
        return Some("CACHE_FILE");
    }
    if old.history_file != new.history_file {
        return Some("HISTORY_FILE");
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        "DIMENSION 2\n\
         BB_EXE builtin:SPHERE2\n\
         BB_OUTPUT_TYPE OBJ\n\
         X0 ( 3 3 )\n"
            .to_owned()
    }

    #[test]
    fn minimal_file_parses_and_builds() {
        let spec = parse_spec_text(&minimal()).unwrap();
        assert_eq!(spec.dimension, 2);
        assert_eq!(spec.bb_exe, BbSource::Builtin("SPHERE2".into()));
        assert_eq!(spec.output_kinds, vec![OutputKind::Obj]);
        assert_eq!(spec.x0, vec![vec![3.0, 3.0]]);

        let built = spec.build().unwrap();
        assert_eq!(built.problem.n, 2);
        // The builtin's bounds apply when the file gives none.
        assert_eq!(built.problem.lower, vec![-10.0, -10.0]);
        assert_eq!(built.params.max_bb_eval, 20_000);
    }

    #[test]
    fn output_kinds_map_and_count_constraints() {
        let text = "DIMENSION 2\nBB_EXE ./bb.sh\nBB_OUTPUT_TYPE OBJ PB PB\nX0 ( 0.71 2.0 )\n";
        let spec = parse_spec_text(text).unwrap();
        assert_eq!(spec.dimension, 2);
        assert_eq!(
            spec.output_kinds,
            vec![OutputKind::Obj, OutputKind::Pb, OutputKind::Pb]
        );
        assert_eq!(
            spec.output_kinds.iter().filter(|k| **k != OutputKind::Obj).count(),
            2
        );
    }

    #[test]
    fn star_broadcasts_a_bound_to_every_coordinate() {
        let mut text = String::from("DIMENSION 50\nBB_EXE ./bb\nBB_OUTPUT_TYPE OBJ\n");
        text.push_str(&format!("X0 {}\n", vector(&vec![0.5; 50])));
        text.push_str("LOWER_BOUND * -10\n");
        let spec = parse_spec_text(&text).unwrap();
        assert_eq!(spec.lower, Some(vec![-10.0; 50]));
        assert_eq!(spec.upper, None);
    }

    #[test]
    fn missing_mandatory_keys_are_reported_by_name() {
        let text = "DIMENSION 2\nBB_EXE ./bb\nX0 ( 1 2 )\n";
        let e = parse_spec_text(text).unwrap_err();
        assert!(matches!(e, ParamError::MissingKey { key: "BB_OUTPUT_TYPE" }));

        let e = parse_spec_text("BB_EXE ./bb\n").unwrap_err();
        assert!(matches!(e, ParamError::MissingKey { key: "DIMENSION" }));
    }

    #[test]
    fn unknown_keys_error_with_their_line_number() {
        let text = "DIMENSION 2\nNOT_A_KEY 5\n";
        match parse_spec_text(text).unwrap_err() {
            ParamError::UnknownKey { line, key } => {
                assert_eq!(line, 2);
                assert_eq!(key, "NOT_A_KEY");
            }
            other => panic!("expected UnknownKey, got {other:?}"),
        }
    }

    #[test]
    fn malformed_values_error_with_their_line_number() {
        let text = "DIMENSION 2\nBB_EXE ./bb\nBB_OUTPUT_TYPE OBJ\nX0 ( 1 two )\n";
        match parse_spec_text(text).unwrap_err() {
            ParamError::Parse { line, what } => {
                assert_eq!(line, 4);
                assert!(what.contains("two"), "{what}");
            }
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn x0_lines_accumulate_starting_points() {
        let mut text = minimal();
        text.push_str("X0 ( -1 4 )\n");
        let spec = parse_spec_text(&text).unwrap();
        assert_eq!(spec.x0, vec![vec![3.0, 3.0], vec![-1.0, 4.0]]);
    }

    #[test]
    fn comments_blanks_and_glued_parens_are_tolerated() {
        let text = "# a run\nDIMENSION 2   # two variables\n\n\
                    BB_EXE builtin:SPHERE2\nBB_OUTPUT_TYPE OBJ\nX0 (3 3)\n";
        let spec = parse_spec_text(text).unwrap();
        assert_eq!(spec.x0, vec![vec![3.0, 3.0]]);
    }

    #[test]
    fn bound_vector_allows_dash_for_unbounded_coordinates() {
        let text = "DIMENSION 3\nBB_EXE ./bb\nBB_OUTPUT_TYPE OBJ\nX0 ( 0 0 0 )\n\
                    LOWER_BOUND ( -5 - 0 )\nUPPER_BOUND ( 5 - 1 )\n";
        let spec = parse_spec_text(text).unwrap();
        assert_eq!(spec.lower, Some(vec![-5.0, f64::NEG_INFINITY, 0.0]));
        assert_eq!(spec.upper, Some(vec![5.0, f64::INFINITY, 1.0]));
    }

    #[test]
    fn full_key_set_round_trips_through_the_canonical_dump() {
        let text = "DIMENSION 2\n\
                    BB_EXE builtin:SNAKE\n\
                    BB_OUTPUT_TYPE OBJ PB PB\n\
                    X0 ( 0 -5 )\n\
                    LOWER_BOUND ( -10 -10 )\n\
                    UPPER_BOUND * 10\n\
                    MAX_BB_EVAL 3000\n\
                    SEED 42\n\
                    INITIAL_FRAME_SIZE 0.25\n\
                    EPSILON 1e-9\n\
                    OPPORTUNISM FALSE\n\
                    ORDERING LEXICOGRAPHIC\n\
                    SEARCHES SPECULATIVE NM\n\
                    NB_THREADS 4\n\
                    GROUP_MAX_SIZE 8\n\
                    MEGA_SEARCH_POLL TRUE\n\
                    PSD ON 2 4\n\
                    CACHE_FILE run.cache\n\
                    HISTORY_FILE run.csv\n";
        let spec = parse_spec_text(text).unwrap();
        let reparsed = parse_spec_text(&dump_params(&spec)).unwrap();
        assert_eq!(spec, reparsed);
    }

    #[test]
    fn dump_round_trip_is_identity_on_problem_and_params() {
        let text = "DIMENSION 2\nBB_EXE builtin:SPHERE2\nBB_OUTPUT_TYPE OBJ\n\
                    X0 ( 0.7071067811865476 2e-300 )\nSEED 9\nEPSILON 1e-7\n";
        let first = parse_spec_text(text).unwrap();
        let second = parse_spec_text(&dump_params(&first)).unwrap();
        assert_eq!(first, second);

        let a = first.build().unwrap();
        let b = second.build().unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.problem.n, b.problem.n);
        assert_eq!(a.problem.lower, b.problem.lower);
        assert_eq!(a.problem.upper, b.problem.upper);
        assert_eq!(a.problem.x0, b.problem.x0);
    }

    #[test]
    fn build_applies_overrides_and_derives_the_barrier() {
        let mut text = minimal();
        text.push_str("MAX_BB_EVAL 500\nSEED 3\nOPPORTUNISM FALSE\nORDERING RANDOM\n");
        let built = parse_spec_text(&text).unwrap().build().unwrap();
        assert_eq!(built.params.max_bb_eval, 500);
        assert_eq!(built.params.seed, 3);
        assert!(!built.params.opportunism);
        assert_eq!(built.params.ordering, OrderingStrategy::Random);

        // The declared constraint kinds pick the barrier: all-EB runs under
        // the extreme barrier, any PB under the progressive one. Reusing the
        // SNAKE closure with EB declarations exercises the first branch.
        let eb = "DIMENSION 2\nBB_EXE builtin:SNAKE\nBB_OUTPUT_TYPE OBJ EB EB\nX0 ( 0 -5 )\n";
        let built = parse_spec_text(eb).unwrap().build().unwrap();
        assert_eq!(built.params.barrier, BarrierKind::Extreme);

        let pb = parse_spec_text("DIMENSION 2\nBB_EXE builtin:SNAKE\nBB_OUTPUT_TYPE OBJ PB PB\nX0 ( 0 -5 )\n")
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(pb.params.barrier, BarrierKind::Progressive);
    }

    #[test]
    fn builtin_must_agree_on_dimension_and_outputs() {
        let wrong_dim = "DIMENSION 3\nBB_EXE builtin:SPHERE2\nBB_OUTPUT_TYPE OBJ\nX0 ( 0 0 0 )\n";
        let e = parse_spec_text(wrong_dim).unwrap().build().unwrap_err();
        assert!(e.to_string().contains("dimension"), "{e}");

        let unknown = "DIMENSION 2\nBB_EXE builtin:NOPE\nBB_OUTPUT_TYPE OBJ\nX0 ( 0 0 )\n";
        let e = parse_spec_text(unknown).unwrap().build().unwrap_err();
        assert!(e.to_string().contains("NOPE"), "{e}");
    }

    #[test]
    fn immutable_change_flags_identity_keys_only() {
        let spec = parse_spec_text(&minimal()).unwrap();
        let mut tweaked = spec.clone();
        tweaked.max_bb_eval = Some(9_999);
        tweaked.epsilon = Some(1e-5);
        tweaked.opportunism = Some(false);
        tweaked.ordering = Some(OrderingStrategy::Random);
        tweaked.searches = Some(Searches::none());
        assert_eq!(immutable_change(&spec, &tweaked), None);

        let mut bad = spec.clone();
        bad.dimension = 3;
        assert_eq!(immutable_change(&spec, &bad), Some("DIMENSION"));

        let mut bad = spec.clone();
        bad.x0 = vec![vec![1.0, 1.0]];
        assert_eq!(immutable_change(&spec, &bad), Some("X0"));

        let mut bad = spec;
        bad.seed = Some(77);
        assert_eq!(immutable_change(&bad.clone(), &{
            let mut b = bad.clone();
            b.seed = Some(78);
            b
        }), Some("SEED"));
    }
}

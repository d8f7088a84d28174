//! Driving an external executable as the blackbox.
//!
//! The protocol is deliberately minimal (see the crate docs): coordinates go
//! into a temporary file, one point per line; the executable is invoked with
//! that file's path as its only argument; outputs are read from stdout. The
//! solver expects failures — a crashing simulation, a nonsense line, an
//! empty stdout all come back as failed evaluations rather than errors, and
//! the run continues around them.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::Command;

use mads::{Blackbox, Point};

use crate::CliError;

/// A [`Blackbox`] that shells out to an executable for every evaluation.
#[derive(Debug)]
pub struct ProcessBlackbox {
    exe: PathBuf,
    n_outputs: usize,
}

impl ProcessBlackbox {
    /// Checks the executable up front — a missing or non-executable path is
    /// a configuration mistake and fails the run before it starts, unlike
    /// the per-evaluation failures tolerated later.
    pub fn new(exe: PathBuf, n_outputs: usize) -> Result<ProcessBlackbox, CliError> {
        let meta = std::fs::metadata(&exe)
            .map_err(|_| CliError::Param(format!("blackbox `{}` not found", exe.display())))?;
        let executable = {
            use std::os::unix::fs::PermissionsExt;
            meta.is_file() && meta.permissions().mode() & 0o111 != 0
        };
        if !executable {
            return Err(CliError::Param(format!(
                "blackbox `{}` is not executable",
                exe.display()
            )));
        }
        Ok(ProcessBlackbox { exe, n_outputs })
    }

    /// One invocation on a pre-written input file; stdout split into lines.
    fn invoke(&self, input: &tempfile::NamedTempFile) -> Option<Vec<String>> {
        let output = Command::new(&self.exe).arg(input.path()).output().ok()?;
        if !output.status.success() {
            return None;
        }
        let text = String::from_utf8_lossy(&output.stdout).into_owned();
        Some(text.lines().map(str::to_owned).collect())
    }

    fn write_input(points: &[&Point]) -> Option<tempfile::NamedTempFile> {
        let mut file = tempfile::NamedTempFile::new().ok()?;
        for point in points {
            let coords: Vec<String> = point.as_slice().iter().map(f64::to_string).collect();
            writeln!(file, "{}", coords.join(" ")).ok()?;
        }
        file.flush().ok()?;
        Some(file)
    }
}

/// The first `n` whitespace tokens of `text` as numbers, or `None` if there
/// are too few or any fails to parse. `nan` carries no usable information
/// and maps to `+inf`, like `inf` itself.
fn parse_outputs(text: &str, n: usize) -> Option<Vec<f64>> {
    let mut values = Vec::with_capacity(n);
    for token in text.split_whitespace().take(n) {
        let v: f64 = token.parse().ok()?;
        values.push(if v.is_nan() { f64::INFINITY } else { v });
    }
    (values.len() == n).then_some(values)
}

impl Blackbox for ProcessBlackbox {
    fn eval_raw(&self, x: &Point) -> Option<Vec<f64>> {
        let input = Self::write_input(&[x])?;
        let lines = self.invoke(&input)?;
        parse_outputs(&lines.join(" "), self.n_outputs)
    }

    /// One process invocation for the whole group: the input file holds one
    /// line per point and stdout is read line by line, so a bad result for
    /// one point does not spoil the others.
    fn eval_batch(&self, xs: &[Point]) -> Vec<Option<Vec<f64>>> {
        if xs.len() == 1 {
            return vec![self.eval_raw(&xs[0])];
        }
        let points: Vec<&Point> = xs.iter().collect();
        let Some(input) = Self::write_input(&points) else {
            return vec![None; xs.len()];
        };
        let Some(lines) = self.invoke(&input) else {
            return vec![None; xs.len()];
        };
        (0..xs.len())
            .map(|i| {
                lines
                    .get(i)
                    .and_then(|line| parse_outputs(line, self.n_outputs))
            })
            .collect()
    }
}

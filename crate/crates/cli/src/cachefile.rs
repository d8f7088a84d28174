//! Cache files: every completed evaluation, one line per point.
//!
//! ```text
//! x_1 ... x_n | f c_1 ... c_m | status
//! ```
//!
//! Numbers are written with shortest round-trip decimal formatting, so
//! parsing a cache file reproduces the original coordinates and values bit
//! for bit — the property that lets a killed run resume without re-spending
//! budget on points it has already paid for. Writes go through a temporary
//! file in the target directory followed by a rename, so readers never see a
//! torn file.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use mads::{EvalStatus, Evaluation, Point};

use crate::CliError;

/// Renders cache entries in a parseable, bit-exact text form.
pub fn render_cache(entries: &[(Point, Evaluation)]) -> String {
    let mut out = String::new();
    for (point, eval) in entries {
        let coords: Vec<String> = point.as_slice().iter().map(f64::to_string).collect();
        let mut values = vec![eval.f.to_string()];
        values.extend(eval.c.iter().map(f64::to_string));
        let status = match eval.status {
            EvalStatus::Ok => "OK",
            EvalStatus::Failed => "FAILED",
        };
        out.push_str(&format!(
            "{} | {} | {}\n",
            coords.join(" "),
            values.join(" "),
            status
        ));
    }
    out
}

/// Parses cache-file text back into entries.
pub fn parse_cache(text: &str) -> Result<Vec<(Point, Evaluation)>, CliError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| CliError::Io(format!("cache line {line}: {what}"));
        let parts: Vec<&str> = raw.split('|').collect();
        let [coords, values, status] = parts.as_slice() else {
            return Err(bad("expected `x... | f c... | status`"));
        };
        let point = coords
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(&format!("bad coordinate `{t}`"))))
            .collect::<Result<Vec<f64>, _>>()?;
        if point.is_empty() {
            return Err(bad("no coordinates"));
        }
        let numbers = values
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(&format!("bad value `{t}`"))))
            .collect::<Result<Vec<f64>, _>>()?;
        let [f, c @ ..] = numbers.as_slice() else {
            return Err(bad("no objective value"));
        };
        let status = match status.trim() {
            "OK" => EvalStatus::Ok,
            "FAILED" => EvalStatus::Failed,
            other => return Err(bad(&format!("bad status `{other}`"))),
        };
        entries.push((
            Point::new(point),
            Evaluation {
                f: *f,
                c: c.to_vec(),
                status,
            },
        ));
    }
    Ok(entries)
}

pub fn read_cache(path: &Path) -> Result<Vec<(Point, Evaluation)>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_cache(&text)
}

/// Writes the cache atomically: temporary file next to the target, then a
/// rename over it. A crash mid-write leaves the previous file intact.
pub fn write_cache_atomic(path: &Path, entries: &[(Point, Evaluation)]) -> Result<(), CliError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .map_err(|e| CliError::io(path, e))?;
    tmp.write_all(render_cache(entries).as_bytes())
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

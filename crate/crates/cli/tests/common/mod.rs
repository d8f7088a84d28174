//! Helpers shared by the CLI integration tests: shell-script blackboxes and
//! parameter files in temporary directories.

use std::fs;
use std::path::{Path, PathBuf};

/// Writes an executable shell script and returns its path.
pub fn write_script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, format!("#!/bin/sh\n{body}")).unwrap();
    let mut perms = fs::metadata(&path).unwrap().permissions();
    std::os::unix::fs::PermissionsExt::set_mode(&mut perms, 0o755);
    fs::set_permissions(&path, perms).unwrap();
    path
}

/// A sphere objective (sum of squares), computed per input line so it also
/// serves batch invocations.
pub fn sphere_script(dir: &Path) -> PathBuf {
    write_script(
        dir,
        "sphere.sh",
        "awk '{ s = 0; for (i = 1; i <= NF; i++) s += $i * $i; print s }' \"$1\"\n",
    )
}

pub fn write_param_file(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

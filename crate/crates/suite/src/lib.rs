//! Plumbing for the acceptance suite: timed criterion reports, locating the
//! `m2no` binary, and directory checksums.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use sha2::{Digest, Sha256};

/// Result of one criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Runs `check`, prints one `PASS`/`FAIL` line and returns whether it passed.
/// An `Err` or a panic counts as a failure. `limit` is a wall-clock budget in
/// seconds; exceeding it fails the criterion.
pub fn report(id: usize, title: &str, limit: Option<f64>, check: impl FnOnce() -> Result<Outcome, String>) -> bool {
    let start = Instant::now();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check));
    let secs = start.elapsed().as_secs_f64();
    let mut out = match result {
        Ok(Ok(o)) => o,
        Ok(Err(e)) => Outcome::new(false, format!("error: {e}")),
        Err(_) => Outcome::new(false, "panicked"),
    };
    if let Some(limit) = limit {
        if secs > limit {
            out.pass = false;
            out.detail.push_str(&format!("; over the {limit} s budget"));
        }
    }
    let verdict = if out.pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {title}: {verdict} — {} [{secs:.2} s]", out.detail);
    out.pass
}

/// Path of the `m2no` binary next to the running test executable, building
/// it with the current cargo if it is missing.
pub fn cli_binary() -> Result<PathBuf, String> {
    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    let profile_dir = exe.parent().and_then(Path::parent).ok_or("cannot locate the target directory")?;
    let bin = profile_dir.join(format!("m2no{}", std::env::consts::EXE_SUFFIX));
    if !bin.exists() {
        let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
        let mut cmd = Command::new(cargo);
        cmd.args(["build", "-p", "m2no-cli", "--bin", "m2no"]);
        if profile_dir.file_name().is_some_and(|n| n == "release") {
            cmd.arg("--release");
        }
        let status = cmd.status().map_err(|e| e.to_string())?;
        if !status.success() || !bin.exists() {
            return Err(format!("could not build {}", bin.display()));
        }
    }
    Ok(bin)
}

/// SHA-256 of every file below `root`, keyed by relative path.
pub fn checksums(root: &Path) -> std::io::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let digest = Sha256::digest(std::fs::read(&path)?);
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, hex);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksums_see_nested_files() {
        let dir = tempdir();
        std::fs::create_dir_all(dir.join("a")).unwrap();
        std::fs::write(dir.join("a/x.txt"), b"abc").unwrap();
        let sums = checksums(&dir).unwrap();
        assert_eq!(sums["a/x.txt"], "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        std::fs::remove_dir_all(dir).unwrap();
    }

    fn tempdir() -> PathBuf {
        let d = std::env::temp_dir().join(format!("m2no-suite-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }
}

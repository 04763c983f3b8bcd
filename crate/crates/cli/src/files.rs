//! Directory listing and filename-stem pairing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::Failure;

/// Files directly under `dir` whose extension is one of `extensions`
/// (case-insensitive), keyed by stem.
pub fn list_stems(dir: &Path, extensions: &[&str]) -> Result<BTreeMap<String, PathBuf>, Failure> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry
            .map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?
            .path();
        if !path.is_file() {
            continue;
        }
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if !ext.is_some_and(|e| extensions.contains(&e.as_str())) {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if let Some(prev) = out.insert(stem.to_string(), path.clone()) {
            return Err(Failure::Data(format!(
                "stem {stem} is ambiguous: {} and {}",
                prev.display(),
                path.display()
            )));
        }
    }
    if out.is_empty() {
        return Err(Failure::Data(format!(
            "{} contains no .{} files",
            dir.display(),
            extensions.join("/.")
        )));
    }
    Ok(out)
}

/// Pairs two stem listings, failing with every stem present on one side only.
pub fn pair_stems(
    left: BTreeMap<String, PathBuf>,
    right: &BTreeMap<String, PathBuf>,
    left_name: &str,
    right_name: &str,
) -> Result<Vec<(String, PathBuf, PathBuf)>, Failure> {
    let only_left: Vec<&str> = left
        .keys()
        .filter(|k| !right.contains_key(*k))
        .map(String::as_str)
        .collect();
    let only_right: Vec<&str> = right
        .keys()
        .filter(|k| !left.contains_key(*k))
        .map(String::as_str)
        .collect();
    if !only_left.is_empty() || !only_right.is_empty() {
        let mut parts = Vec::new();
        if !only_left.is_empty() {
            parts.push(format!("only in {left_name}: {}", only_left.join(", ")));
        }
        if !only_right.is_empty() {
            parts.push(format!("only in {right_name}: {}", only_right.join(", ")));
        }
        return Err(Failure::Data(format!("unmatched stems; {}", parts.join("; "))));
    }
    Ok(left
        .into_iter()
        .map(|(stem, l)| {
            let r = right[&stem].clone();
            (stem, l, r)
        })
        .collect())
}

pub fn require_exists(path: &Path, what: &str) -> Result<(), Failure> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::Data(format!("{what} {} does not exist", path.display())))
    }
}

pub fn create_dir(path: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

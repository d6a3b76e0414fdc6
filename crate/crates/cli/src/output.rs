//! CSV/JSON emission with atomic renames.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;

pub const ARTIFACT: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One file to be written under the output directory.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// CSV with a header row; floats carry 17 significant digits.
pub fn csv(header: &[&str], columns: &[&[f64]]) -> String {
    let rows = columns.first().map_or(0, |c| c.len());
    debug_assert!(columns.iter().all(|c| c.len() == rows));
    let mut s = header.join(",");
    s.push('\n');
    for i in 0..rows {
        for (j, col) in columns.iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            write!(s, "{:.16e}", col[i]).expect("writing to a String");
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    artifact: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    result: &'a T,
}

pub fn json<T: Serialize>(config: &RunConfig, result: &T) -> String {
    let doc = Document { artifact: ARTIFACT, version: VERSION, config, result };
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    s.push('\n');
    s
}

/// Write to a hidden sibling first, then rename over the target.
pub fn write_atomic(dir: &Path, artifact: &Artifact) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let target = dir.join(&artifact.name);
    let tmp = dir.join(format!(".{}.{}.tmp", artifact.name, std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(artifact.contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(target)
}

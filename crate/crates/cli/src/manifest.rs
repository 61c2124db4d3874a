//! Run manifest: enough metadata next to every output to reproduce it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunManifest<P: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub master_seed: u64,
    /// RFC 3339; informational only, excluded from reproducibility checks.
    pub timestamp: String,
    pub params: P,
}

/// Write `manifest.json` into `dir` and return its path.
pub fn write_manifest<P: Serialize>(
    dir: &Path,
    subcommand: &'static str,
    master_seed: u64,
    params: P,
) -> std::io::Result<PathBuf> {
    let manifest = RunManifest {
        tool: "spiked",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        master_seed,
        timestamp: chrono::Utc::now().to_rfc3339(),
        params,
    };
    let path = dir.join("manifest.json");
    let mut w = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(path)
}

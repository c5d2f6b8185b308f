//! Report serialization. Every command writes a `report.json` carrying its
//! fully resolved configuration so each number is reproducible from the
//! artifact alone. The timestamp is the only non-deterministic field and is
//! kept on its own line.

use serde::Serialize;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Serialize)]
pub struct Report<C: Serialize, R: Serialize> {
    pub command: String,
    pub timestamp_unix: u64,
    pub config: C,
    pub result: R,
}

pub fn timestamp_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn write_report<C: Serialize, R: Serialize>(
    path: impl AsRef<Path>,
    report: &Report<C, R>,
) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

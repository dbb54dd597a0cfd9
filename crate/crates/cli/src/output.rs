//! CSV tables and the run manifests written next to them.

use std::path::{Path, PathBuf};

use serde::Serialize;
use vlc_noma::CurvePoint;

pub const COLUMNS: [&str; 7] = [
    "scheme",
    "gamma_db",
    "sum_rate",
    "ci_halfwidth",
    "outage_weak",
    "outage_strong",
    "conditioning_rate",
];

/// One CSV row: a curve label and a point on it.
#[derive(Debug, Clone)]
pub struct Row {
    pub scheme: String,
    pub point: CurvePoint,
}

/// Writes the rows with `f64` values in their shortest round-trip form,
/// so equal inputs always give identical bytes.
pub fn write_csv(path: &Path, rows: &[Row]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(COLUMNS)?;
    for r in rows {
        let p = &r.point;
        w.write_record([
            r.scheme.clone(),
            p.gamma_db.to_string(),
            p.sum_rate.to_string(),
            p.ci_halfwidth.to_string(),
            p.outage_weak.to_string(),
            p.outage_strong.to_string(),
            p.conditioning_rate.to_string(),
        ])?;
    }
    w.flush()
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: &'static str,
    pub engine_version: &'static str,
    pub source: String,
    pub overrides: Vec<String>,
    pub root_seed: Option<u64>,
    pub trials: Option<u64>,
    /// Resolved configuration; save it as a file and pass it to `--config`
    /// with the same seed to reproduce the CSV.
    pub config_toml: String,
    pub outputs: Vec<PathBuf>,
    pub started_unix_s: u64,
    pub elapsed_s: f64,
    pub notes: Vec<String>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn write_manifest(out: &Path, m: &Manifest) -> std::io::Result<PathBuf> {
    let path = manifest_path(out);
    let text = serde_json::to_string_pretty(m).map_err(std::io::Error::other)?;
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}

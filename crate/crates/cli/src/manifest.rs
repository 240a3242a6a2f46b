use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mmo::gen::Correlation;
use serde::{Deserialize, Serialize};

/// One generated instance as listed in `manifest.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative paths are resolved against the manifest's directory.
    pub path: PathBuf,
    pub corr: Correlation,
    pub n: usize,
    pub eps: f64,
    pub xi: f64,
    pub seed: u64,
}

pub fn write_manifest(entries: &[ManifestEntry]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(["path", "corr", "n", "eps", "xi", "seed"])?;
    for e in entries {
        w.serialize(e)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::Reader::from_path(path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    let mut out = Vec::new();
    for (k, rec) in rdr.deserialize::<ManifestEntry>().enumerate() {
        let mut e = rec.with_context(|| format!("manifest {} line {}", path.display(), k + 2))?;
        if e.path.is_relative() {
            e.path = base.join(&e.path);
        }
        out.push(e);
    }
    Ok(out)
}

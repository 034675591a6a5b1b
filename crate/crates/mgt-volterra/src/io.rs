//! Output files: trajectory CSV, JSON reports and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mgt_core::modal::Trajectory;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// 17 significant digits: round-trips every `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Columns `t`, then `u_k`, `ut_k`, `utt_k` for each mode `k`.
pub fn trajectory_csv(traj: &Trajectory) -> Result<Vec<u8>> {
    let k = traj.mode_count();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = Vec::with_capacity(1 + 3 * k);
    header.push("t".to_string());
    for prefix in ["u", "ut", "utt"] {
        header.extend((0..k).map(|i| format!("{prefix}_{i}")));
    }
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for n in 0..traj.grid.len() {
        row.clear();
        row.push(format_value(traj.grid.time(n)));
        row.extend(traj.modes.iter().map(|m| format_value(m.u[n])));
        row.extend(traj.modes.iter().map(|m| format_value(m.u_t[n])));
        row.extend(traj.modes.iter().map(|m| format_value(m.u_tt[n])));
        w.write_record(&row)?;
    }
    w.into_inner().context("flushing CSV buffer")
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Write to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .with_context(|| format!("{} has no file name", path.display()))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub config: &'a C,
    pub pass: bool,
    pub outputs: &'a [OutputEntry],
    /// The only field that differs between identical runs.
    pub wall_time_seconds: f64,
}

/// Collects the files of one run so the manifest can list their checksums.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    entries: Vec<OutputEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn write(&mut self, file: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(file);
        write_atomic(&path, bytes)?;
        self.entries.push(OutputEntry {
            file: file.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, file: &str, value: &T) -> Result<PathBuf> {
        self.write(file, &json_bytes(value)?)
    }

    pub fn entries(&self) -> &[OutputEntry] {
        &self.entries
    }

    pub fn write_manifest<C: Serialize>(
        &self,
        command: &str,
        seed: u64,
        config: &C,
        pass: bool,
        wall_time_seconds: f64,
    ) -> Result<PathBuf> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config,
            pass,
            outputs: &self.entries,
            wall_time_seconds,
        };
        let path = self.root.join("manifest.json");
        write_atomic(&path, &json_bytes(&manifest)?)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(format_value(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

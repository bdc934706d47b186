//! Atomic artifact writes. Timestamps go only into `<name>.meta.json`.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("cannot create {}", root.display()))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes through a temporary file in the same directory, then renames.
    pub fn write_with(&self, name: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<PathBuf> {
        let target = self.path(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root)?;
        {
            let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
            f(&mut buf)?;
            buf.flush()?;
        }
        tmp.as_file().sync_all()?;
        tmp.persist(&target).with_context(|| format!("cannot write {}", target.display()))?;
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        self.write_with(name, |w| {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(header)?;
            for row in rows {
                out.write_record(row)?;
            }
            out.flush()?;
            Ok(())
        })
    }
}

/// Run metadata; the only artifact that varies between identical runs.
#[derive(Serialize)]
pub struct Metadata<'a, C: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub started: String,
    pub elapsed_seconds: f64,
    pub threads: usize,
    pub config: &'a C,
    pub artifacts: Vec<String>,
}

/// Fixed-width scientific notation, so CSV output is byte-stable. Negative
/// zero prints as zero.
pub fn num(v: f64) -> String {
    format!("{:.12e}", v + 0.0)
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

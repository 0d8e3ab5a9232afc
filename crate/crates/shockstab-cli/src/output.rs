//! Atomic CSV and JSON writers.
//!
//! Every file is written to a temporary sibling and renamed into place, so a
//! reader never sees a partial file.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::CliResult;

#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    /// Creates the directory if needed. Call only after validation.
    pub fn create(root: impl AsRef<Path>) -> CliResult<Self> {
        let root = root.as_ref().to_path_buf();
        std::fs::create_dir_all(&root)?;
        Ok(Self { root, written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// File names written so far, in order.
    pub fn written(&self) -> Vec<String> {
        self.written.iter().filter_map(|p| p.file_name()).map(|s| s.to_string_lossy().into_owned()).collect()
    }

    fn commit(&mut self, name: &str, fill: impl FnOnce(&mut NamedTempFile) -> CliResult<()>) -> CliResult<PathBuf> {
        let dest = self.root.join(name);
        let mut tmp = NamedTempFile::new_in(&self.root)?;
        fill(&mut tmp)?;
        tmp.as_file_mut().sync_all()?;
        tmp.persist(&dest).map_err(|e| e.error)?;
        self.written.push(dest.clone());
        Ok(dest)
    }

    pub fn write_csv<R>(&mut self, name: &str, header: &[&str], rows: R) -> CliResult<PathBuf>
    where
        R: IntoIterator,
        R::Item: IntoIterator<Item = String>,
    {
        self.commit(name, |tmp| {
            let mut w = csv::Writer::from_writer(tmp.as_file_mut());
            w.write_record(header)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()?;
            Ok(())
        })
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        self.commit(name, |tmp| {
            serde_json::to_writer_pretty(tmp.as_file_mut(), value)?;
            tmp.as_file_mut().write_all(b"\n")?;
            Ok(())
        })
    }
}

/// Formats a float so that it parses back to the same value.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn nums<I: IntoIterator<Item = f64>>(xs: I) -> Vec<String> {
    xs.into_iter().map(num).collect()
}

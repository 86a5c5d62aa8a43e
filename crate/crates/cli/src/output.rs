//! Output files are staged in memory, then each one is written to a
//! temporary file in the target directory and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::commands::CliError;

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stages a file; `name` is relative to the output directory.
    pub fn add(&mut self, name: impl Into<PathBuf>, contents: Vec<u8>) {
        self.files.push((name.into(), contents));
    }

    pub fn add_json<T: serde::Serialize>(&mut self, name: impl Into<PathBuf>, value: &T) {
        let mut text = serde_json::to_vec_pretty(value).expect("output serializes to JSON");
        text.push(b'\n');
        self.add(name, text);
    }

    pub fn add_with(
        &mut self,
        name: impl Into<PathBuf>,
        write: impl FnOnce(&mut Vec<u8>) -> gphrf::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write(&mut buf).map_err(CliError::from)?;
        self.add(name, buf);
        Ok(())
    }

    /// Writes every staged file into `dir`, creating it if needed.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, contents) in self.files {
            let path = dir.join(&name);
            let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
            tmp.write_all(&contents).map_err(|e| CliError::io(&path, e))?;
            tmp.persist(&path).map_err(|e| CliError::io(&path, e.error))?;
            written.push(path);
        }
        Ok(written)
    }
}

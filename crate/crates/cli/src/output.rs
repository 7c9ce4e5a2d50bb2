//! Staged outputs, committed only after every computation has succeeded.

use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

/// Contents destined for files, or for stdout when no path is given.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
    stdout: Vec<u8>,
}

impl Outputs {
    pub fn file(&mut self, path: impl Into<PathBuf>, contents: impl Into<Vec<u8>>) {
        self.files.push((path.into(), contents.into()));
    }

    /// To `path` if given, else to stdout.
    pub fn primary(&mut self, path: Option<&Path>, contents: impl Into<Vec<u8>>) {
        match path {
            Some(p) => self.file(p, contents),
            None => self.stdout.extend(contents.into()),
        }
    }

    /// Writes each file through a temporary in its directory and renames it in
    /// place, so a file is either absent or complete.
    pub fn commit(self) -> CliResult<()> {
        let mut staged = Vec::with_capacity(self.files.len());
        for (path, contents) in &self.files {
            let io = |source| CliError::Io {
                path: path.clone(),
                source,
            };
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(contents).map_err(io)?;
            staged.push((tmp, path));
        }
        for (tmp, path) in staged {
            tmp.persist(path).map_err(|e| CliError::Io {
                path: path.clone(),
                source: e.error,
            })?;
        }
        std::io::stdout()
            .write_all(&self.stdout)
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })
    }
}

/// `<path>.<suffix>` next to `path`.
pub fn companion(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

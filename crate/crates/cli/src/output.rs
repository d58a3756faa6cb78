//! All-or-nothing file outputs.
//!
//! Each output is written to a hidden temp file next to its destination and
//! renamed into place only when the whole command has succeeded. Dropping an
//! uncommitted [`Outputs`] deletes the temp files.

use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{CliResult, PathContext};

#[derive(Default)]
pub struct Outputs {
    staged: Vec<(NamedTempFile, PathBuf)>,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stage `bytes` for `target`, creating the parent directory if needed.
    pub fn stage(&mut self, target: &Path, bytes: &[u8]) -> CliResult<()> {
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&parent).with_path(&parent)?;
        let mut tmp = tempfile::Builder::new()
            .prefix(".dvlae-")
            .suffix(".tmp")
            .tempfile_in(&parent)
            .with_path(&parent)?;
        tmp.write_all(bytes).with_path(target)?;
        tmp.as_file().sync_all().with_path(target)?;
        self.staged.push((tmp, target.to_path_buf()));
        Ok(())
    }

    /// Rename every staged file into place, in staging order.
    pub fn commit(self) -> CliResult<Vec<PathBuf>> {
        let mut done = Vec::with_capacity(self.staged.len());
        for (tmp, target) in self.staged {
            tmp.persist(&target).map_err(|e| e.error).with_path(&target)?;
            done.push(target);
        }
        Ok(done)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nothing_lands_without_commit() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("sub/a.txt");
        {
            let mut out = Outputs::new();
            out.stage(&target, b"x").unwrap();
        }
        assert!(!target.exists());
        assert_eq!(std::fs::read_dir(dir.path().join("sub")).unwrap().count(), 0);

        let mut out = Outputs::new();
        out.stage(&target, b"hello").unwrap();
        out.commit().unwrap();
        assert_eq!(std::fs::read(&target).unwrap(), b"hello");
    }
}

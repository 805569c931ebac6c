//! All-or-nothing artifact writing: commands assemble every output in
//! memory, then commit them together, so a failed run leaves no
//! partial files behind.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub struct OutputSet {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        OutputSet { files: Vec::new() }
    }

    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.files.push((path.into(), bytes.into()));
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    /// Write every file via a temporary sibling, then rename into
    /// place. On any failure, everything this call created is removed.
    pub fn commit(self) -> Result<()> {
        let mut temps: Vec<(PathBuf, PathBuf)> = Vec::new();
        let mut finals: Vec<PathBuf> = Vec::new();
        let cleanup = |temps: &[(PathBuf, PathBuf)], finals: &[PathBuf]| {
            for (tmp, _) in temps {
                let _ = fs::remove_file(tmp);
            }
            for f in finals {
                let _ = fs::remove_file(f);
            }
        };

        for (path, bytes) in &self.files {
            if let Some(parent) = path.parent()
                && !parent.as_os_str().is_empty()
                && let Err(e) = fs::create_dir_all(parent)
            {
                cleanup(&temps, &finals);
                return Err(e).context(format!("creating {}", parent.display()));
            }
            let tmp = path.with_extension(format!(
                "{}.partial",
                path.extension().and_then(|e| e.to_str()).unwrap_or("out")
            ));
            if let Err(e) = fs::write(&tmp, bytes) {
                cleanup(&temps, &finals);
                return Err(e).context(format!("writing {}", tmp.display()));
            }
            temps.push((tmp, path.clone()));
        }

        while let Some((tmp, path)) = temps.pop() {
            if let Err(e) = fs::rename(&tmp, &path) {
                temps.push((tmp, path.clone()));
                cleanup(&temps, &finals);
                return Err(e).context(format!("renaming into {}", path.display()));
            }
            finals.push(path);
        }
        Ok(())
    }
}

//! Staged output: a command queues whole files and they are committed
//! together at the end, so a failed run leaves nothing behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub struct Outputs {
    dir: PathBuf,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((self.dir.join(name), contents.into()));
    }

    /// Queues `existing contents of name` followed by `extra`.
    pub fn append(&mut self, name: &str, header: &str, row: &str) -> Result<()> {
        let path = self.dir.join(name);
        let mut contents = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => header.as_bytes().to_vec(),
            Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
        };
        contents.extend_from_slice(row.as_bytes());
        self.files.push((path, contents));
        Ok(())
    }

    /// Writes every file through a temporary sibling and renames it into
    /// place. On error, temporaries and files already renamed are removed.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        let mut staged = Vec::new();
        let result = (|| -> Result<()> {
            for (path, bytes) in &self.files {
                let tmp = temp_name(path);
                staged.push(tmp.clone());
                let mut f = fs::File::create(&tmp)
                    .with_context(|| format!("creating {}", tmp.display()))?;
                f.write_all(bytes)?;
                f.sync_all()?;
            }
            Ok(())
        })();
        if let Err(e) = result {
            for t in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(e);
        }
        let mut done = Vec::new();
        for ((path, _), tmp) in self.files.iter().zip(&staged) {
            if let Err(e) = fs::rename(tmp, path) {
                for t in &staged {
                    let _ = fs::remove_file(t);
                }
                for p in &done {
                    let _ = fs::remove_file(p);
                }
                return Err(e).with_context(|| format!("writing {}", path.display()));
            }
            done.push(path.clone());
        }
        Ok(done)
    }
}

fn temp_name(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp"))
}

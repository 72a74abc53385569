//! Atomic, hash-stamped output files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::CliError;

pub struct Output {
    root: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(root: impl Into<PathBuf>, hash: impl Into<String>) -> Self {
        Output {
            root: root.into(),
            hash: hash.into(),
            written: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Files written so far, relative to the root, in write order.
    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// CSV with a `# config-hash:` first line.
    pub fn csv<F>(&mut self, rel: impl AsRef<Path>, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> ecomplex::Result<()>,
    {
        let rel = rel.as_ref();
        let mut buf = format!("# config-hash: {}\n", self.hash).into_bytes();
        body(&mut buf).map_err(|e| CliError::data(format!("writing {}", rel.display()), e))?;
        self.write(rel, &buf)
    }

    /// Plain text with a `# config-hash:` first line.
    pub fn text(&mut self, rel: impl AsRef<Path>, body: &str) -> Result<(), CliError> {
        let s = format!("# config-hash: {}\n{body}", self.hash);
        self.write(rel.as_ref(), s.as_bytes())
    }

    /// Pretty JSON object with a top-level `config_hash` field. Keys are
    /// sorted, so output does not depend on struct field order.
    pub fn json<T: Serialize>(&mut self, rel: impl AsRef<Path>, value: &T) -> Result<(), CliError> {
        let mut v = serde_json::to_value(value).expect("output serializes");
        let obj = match v {
            serde_json::Value::Object(ref mut m) => m,
            _ => panic!("json outputs must be objects"),
        };
        obj.insert("config_hash".into(), self.hash.clone().into());
        let mut s = serde_json::to_string_pretty(&v).expect("output serializes");
        s.push('\n');
        self.write(rel.as_ref(), s.as_bytes())
    }

    fn write(&mut self, rel: &Path, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        let dir = path.parent().expect("output path has a parent");
        let fail = |e: std::io::Error| CliError::Output {
            path: path.clone(),
            source: e,
        };
        fs::create_dir_all(dir).map_err(fail)?;
        let mut tmp = NamedTempFile::new_in(dir).map_err(fail)?;
        tmp.write_all(bytes).map_err(fail)?;
        tmp.as_file().sync_all().map_err(fail)?;
        tmp.persist(&path).map_err(|e| fail(e.error))?;
        self.written.push(rel.to_path_buf());
        Ok(())
    }
}

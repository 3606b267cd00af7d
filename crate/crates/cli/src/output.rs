//! Artifact writing. Every output goes to a temporary file beside its
//! destination and is renamed into place only after all outputs of the
//! command were produced, so a failing command leaves nothing behind.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tempfile::NamedTempFile;
use ultrainject::signal::{save_wav, BitDepth, Waveform};

#[derive(Default)]
pub struct Staged {
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staged {
    fn temp_for(path: &Path) -> Result<NamedTempFile> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        tempfile::Builder::new()
            .prefix(".ultrainject-")
            .suffix(".tmp")
            .tempfile_in(dir)
            .with_context(|| format!("cannot write into {}", dir.display()))
    }

    pub fn bytes(&mut self, path: &Path, data: &[u8]) -> Result<()> {
        let mut tmp = Self::temp_for(path)?;
        tmp.write_all(data)?;
        tmp.flush()?;
        self.files.push((tmp, path.to_path_buf()));
        Ok(())
    }

    pub fn wav(&mut self, path: &Path, wave: &Waveform) -> Result<()> {
        let tmp = Self::temp_for(path)?;
        save_wav(wave, tmp.path(), BitDepth::Float32)?;
        self.files.push((tmp, path.to_path_buf()));
        Ok(())
    }

    pub fn commit(self) -> Result<()> {
        for (tmp, dest) in self.files {
            tmp.persist(&dest)
                .with_context(|| format!("moving output into place at {}", dest.display()))?;
        }
        Ok(())
    }
}

/// One machine-readable line of `key=value` pairs.
#[derive(Default)]
pub struct Summary(Vec<(String, String)>);

impl Summary {
    pub fn new(command: &str) -> Self {
        let mut s = Summary::default();
        s.push("command", command);
        s
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        let v = value.to_string();
        let v = if v.contains(char::is_whitespace) { format!("\"{v}\"") } else { v };
        self.0.push((key.to_string(), v));
        self
    }

    pub fn path(&mut self, key: &str, p: &Path) -> &mut Self {
        self.push(key, p.display())
    }

    pub fn line(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
    }
}

//! Atomic output files and the run manifest that records them.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "run-manifest.tsv";

/// Writes `path` through a temporary file in the same directory, so the
/// destination either keeps its old contents or holds the complete new ones.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write in {}", dir.display()))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        write(&mut buf).with_context(|| format!("cannot write {}", path.display()))?;
        buf.flush()?;
    }
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `artifact<TAB>path<TAB>sha256` records, keyed by artifact name, with
/// paths relative to the output directory.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunManifest {
    pub entries: BTreeMap<String, (PathBuf, String)>,
}

impl RunManifest {
    /// Loads the manifest in `out`, dropping entries whose file is gone.
    pub fn load(out: &Path) -> Result<RunManifest> {
        let path = out.join(MANIFEST_FILE);
        let mut manifest = RunManifest::default();
        if !path.exists() {
            return Ok(manifest);
        }
        let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        for line in text.lines().filter(|l| !l.is_empty()) {
            let mut parts = line.split('\t');
            if let (Some(name), Some(file), Some(hash)) = (parts.next(), parts.next(), parts.next()) {
                if out.join(file).exists() {
                    manifest.entries.insert(name.to_owned(), (PathBuf::from(file), hash.to_owned()));
                }
            }
        }
        Ok(manifest)
    }

    /// Records `file` (relative to `out`) under `name` with its current
    /// checksum.
    pub fn record(&mut self, out: &Path, name: impl Into<String>, file: impl Into<PathBuf>) -> Result<()> {
        let file = file.into();
        let hash = sha256_file(&out.join(&file))?;
        self.entries.insert(name.into(), (file, hash));
        Ok(())
    }

    pub fn save(&self, out: &Path) -> Result<()> {
        write_atomic(&out.join(MANIFEST_FILE), |w| {
            for (name, (file, hash)) in &self.entries {
                writeln!(w, "{name}\t{}\t{hash}", file.display())?;
            }
            Ok(())
        })
    }
}

//! Run manifests: what ran, with which configuration, on which files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunConfig;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let digest = Sha256::digest(&data);
        Ok(FileDigest {
            path: path.to_path_buf(),
            bytes: data.len() as u64,
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub command: String,
    pub code_version: String,
    pub started_utc: String,
    pub finished_utc: String,
    pub config: RunConfig,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub const MANIFEST_FORMAT: &str = "motrims-manifest 1.0";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn now_utc() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig, started_utc: String) -> Self {
        RunManifest {
            format: MANIFEST_FORMAT.into(),
            command: command.into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            started_utc,
            finished_utc: String::new(),
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Digests the listed files as they are now and writes the manifest into
    /// `dir`.
    pub fn finish(mut self, dir: &Path, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<PathBuf> {
        self.inputs = inputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_>>()?;
        self.outputs = outputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_>>()?;
        self.finished_utc = now_utc();
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&self).map_err(|e| Error::Data(format!("manifest: {e}")))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_matches_known_vector() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        std::fs::write(&p, "abc").unwrap();
        let d = FileDigest::of(&p).unwrap();
        assert_eq!(
            d.sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(d.bytes, 3);
    }

    #[test]
    fn manifest_lists_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o.txt");
        std::fs::write(&out, "x").unwrap();
        let m = RunManifest::new("test", &RunConfig::default(), now_utc());
        let path = m.finish(dir.path(), &[], std::slice::from_ref(&out)).unwrap();
        let back: RunManifest = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(back.outputs[0].path, out);
        assert_eq!(back.outputs[0].sha256, FileDigest::of(&out).unwrap().sha256);
        assert!(!back.finished_utc.is_empty());
    }
}

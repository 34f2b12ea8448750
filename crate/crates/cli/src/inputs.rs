//! Input directories, subject discovery and hashing of every file read.

use crate::error::CliError;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

pub const RESTING_RAW: &str = "resting.csv";
pub const RESTING_EPOCHS: &str = "resting_epochs.csv";
pub const FEATURES: &str = "features.csv";
pub const PERFORMANCE: &str = "performance.csv";
pub const REGRESSION_MODEL: &str = "regression_model.json";
pub const MANIFEST: &str = "manifest.json";

/// One recorded session of the speller task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Session {
    Train,
    Test,
}

impl Session {
    pub const ALL: [Session; 2] = [Session::Train, Session::Test];

    pub fn name(self) -> &'static str {
        match self {
            Session::Train => "train",
            Session::Test => "test",
        }
    }

    pub fn raw(self) -> String {
        format!("{}.csv", self.name())
    }

    pub fn events(self) -> String {
        format!("{}_events.csv", self.name())
    }

    pub fn epochs(self) -> String {
        format!("{}_epochs.csv", self.name())
    }
}

pub struct Inputs {
    dirs: Vec<PathBuf>,
    read: Mutex<BTreeMap<String, String>>,
}

impl Inputs {
    pub fn new(dirs: Vec<PathBuf>) -> Result<Self, CliError> {
        for d in &dirs {
            if !d.is_dir() {
                return Err(CliError::data(format!(
                    "input directory {} does not exist",
                    d.display()
                )));
            }
        }
        Ok(Self {
            dirs,
            read: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn require_dirs(&self) -> Result<(), CliError> {
        if self.dirs.is_empty() {
            return Err(CliError::Usage("--in is required for this command".into()));
        }
        Ok(())
    }

    /// First input directory holding `rel`.
    pub fn find(&self, rel: impl AsRef<Path>) -> Option<PathBuf> {
        self.dirs.iter().map(|d| d.join(rel.as_ref())).find(|p| p.is_file())
    }

    /// Like `find`, reporting the expected location when absent.
    pub fn require(&self, rel: impl AsRef<Path>, what: &str) -> Result<PathBuf, CliError> {
        let rel = rel.as_ref();
        self.find(rel).ok_or_else(|| {
            let expected = self.dirs.first().map_or_else(|| rel.to_path_buf(), |d| d.join(rel));
            CliError::data(format!("missing {what} file {}", expected.display()))
        })
    }

    /// Record a file as read and return its path unchanged.
    pub fn used(&self, path: PathBuf) -> Result<PathBuf, CliError> {
        let bytes = std::fs::read(&path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let hash = hex::encode(Sha256::digest(&bytes));
        let key = self
            .dirs
            .iter()
            .find_map(|d| path.strip_prefix(d).ok())
            .unwrap_or(&path)
            .to_string_lossy()
            .replace('\\', "/");
        self.read.lock().expect("hash table lock").insert(key, hash);
        Ok(path)
    }

    pub fn hashes(&self) -> BTreeMap<String, String> {
        self.read.lock().expect("hash table lock").clone()
    }

    /// Subject directories across all inputs, sorted by id, optionally
    /// restricted to `only`.
    pub fn subjects(&self, only: &[String]) -> Result<Vec<String>, CliError> {
        let mut found = std::collections::BTreeSet::new();
        for d in &self.dirs {
            let entries = std::fs::read_dir(d).map_err(|e| CliError::data(format!("{}: {e}", d.display())))?;
            for entry in entries.flatten() {
                if entry.path().is_dir() {
                    found.insert(entry.file_name().to_string_lossy().into_owned());
                }
            }
        }
        if !only.is_empty() {
            if let Some(missing) = only.iter().find(|s| !found.contains(*s)) {
                return Err(CliError::data(format!("subject {missing} not found in the inputs")));
            }
            found.retain(|s| only.contains(s));
        }
        if found.is_empty() {
            return Err(CliError::data("no subject directories in the inputs"));
        }
        Ok(found.into_iter().collect())
    }
}

//! Append-only keyed store persisted as JSON lines.
//!
//! Each line is `<sha256 of payload>\t<payload>` where the payload is a
//! `{"key": .., "value": ..}` object. A later line for the same key wins.
//! If any line fails to parse or its digest does not match, the file is
//! moved aside to `<name>.corrupt` and the store starts cold; a corrupted
//! file never yields data.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::hash::Hash;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::sha256_hex;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Serialize, Deserialize)]
struct Entry<K, V> {
    key: K,
    value: V,
}

pub struct AppendLog<K, V> {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<K, V>>,
    writer: Mutex<Option<BufWriter<File>>>,
}

impl<K, V> AppendLog<K, V>
where
    K: Serialize + DeserializeOwned + Eq + Hash + Clone,
    V: Serialize + DeserializeOwned + Clone,
{
    /// A store that lives only in memory.
    pub fn in_memory() -> Self {
        AppendLog {
            path: None,
            entries: RwLock::new(HashMap::new()),
            writer: Mutex::new(None),
        }
    }

    /// Opens (or creates) the store at `path`. The returned warnings describe
    /// a corrupted file that was set aside.
    pub fn open(path: &Path) -> Result<(Self, Vec<String>), StoreError> {
        let io = |source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut warnings = Vec::new();
        let mut entries = HashMap::new();
        match std::fs::read_to_string(path) {
            Ok(text) => match parse_lines::<K, V>(&text) {
                Ok(parsed) => entries = parsed,
                Err(line) => {
                    let aside = path.with_extension("corrupt");
                    std::fs::rename(path, &aside).map_err(io)?;
                    warnings.push(format!(
                        "{}: corrupted at line {line}; moved to {} and starting cold",
                        path.display(),
                        aside.display()
                    ));
                    tracing::warn!("{}", warnings.last().unwrap());
                }
            },
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) if e.kind() == std::io::ErrorKind::InvalidData => {
                let aside = path.with_extension("corrupt");
                std::fs::rename(path, &aside).map_err(io)?;
                warnings.push(format!("{}: not valid UTF-8; starting cold", path.display()));
            }
            Err(e) => return Err(io(e)),
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        Ok((
            AppendLog {
                path: Some(path.to_path_buf()),
                entries: RwLock::new(entries),
                writer: Mutex::new(Some(BufWriter::new(file))),
            },
            warnings,
        ))
    }

    pub fn get(&self, key: &K) -> Option<V> {
        self.entries.read().expect("store lock").get(key).cloned()
    }

    pub fn contains(&self, key: &K) -> bool {
        self.entries.read().expect("store lock").contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends `key -> value` and makes it visible to readers. The line is
    /// flushed before the in-memory map is updated.
    pub fn put(&self, key: K, value: V) -> Result<(), StoreError> {
        let mut writer = self.writer.lock().expect("store lock");
        if let Some(w) = writer.as_mut() {
            let payload = serde_json::to_string(&Entry { key: &key, value: &value }).expect("entry serializes");
            let line = format!("{}\t{payload}\n", sha256_hex(payload.as_bytes()));
            let io = |source| StoreError::Io {
                path: self.path.clone().unwrap_or_default(),
                source,
            };
            w.write_all(line.as_bytes()).map_err(io)?;
            w.flush().map_err(io)?;
        }
        self.entries.write().expect("store lock").insert(key, value);
        Ok(())
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }
}

/// Returns the 1-based number of the first bad line on failure.
fn parse_lines<K, V>(text: &str) -> Result<HashMap<K, V>, usize>
where
    K: DeserializeOwned + Eq + Hash,
    V: DeserializeOwned,
{
    let mut entries = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (digest, payload) = line.split_once('\t').ok_or(i + 1)?;
        if sha256_hex(payload.as_bytes()) != digest {
            return Err(i + 1);
        }
        let entry: Entry<K, V> = serde_json::from_str(payload).map_err(|_| i + 1)?;
        entries.insert(entry.key, entry.value);
    }
    Ok(entries)
}

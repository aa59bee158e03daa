//! Content-addressed store of [`RepTable`]s on disk.
//!
//! Entries are the table's persistence JSON, named by a SHA-256 over the
//! schema version, set digest, `k`, star, limit and method.

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::repcount::{Method, RepTable, Star, SCHEMA_VERSION};

/// Environment variable that supplies a cache directory when `--cache-dir` is absent.
pub const CACHE_ENV: &str = "ORDREP_CACHE_DIR";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheKey {
    pub set_digest: String,
    pub k: u32,
    pub star: Star,
    pub limit: usize,
    pub method: Method,
}

impl CacheKey {
    pub fn of(table: &RepTable) -> Self {
        CacheKey {
            set_digest: table.set_digest.clone(),
            k: table.k,
            star: table.star.clone(),
            limit: table.limit(),
            method: table.method,
        }
    }

    pub fn file_name(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(
            format!(
                "schema={SCHEMA_VERSION};set={};k={};star={};limit={};method={}",
                self.set_digest, self.k, self.star, self.limit, self.method
            )
            .as_bytes(),
        );
        format!("{}.json", hex::encode(hasher.finalize()))
    }
}

#[derive(Debug)]
pub enum Lookup {
    Hit(RepTable),
    Miss,
    /// An entry existed but could not be trusted; the reason is for a warning.
    Corrupt(String),
}

#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.file_name())
    }

    pub fn lookup(&self, key: &CacheKey) -> Lookup {
        let path = self.path_for(key);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Lookup::Miss,
            Err(e) => return Lookup::Corrupt(format!("{}: {e}", path.display())),
        };
        match RepTable::from_json(&text) {
            Ok(table) if CacheKey::of(&table) == *key => Lookup::Hit(table),
            Ok(_) => Lookup::Corrupt(format!("{}: entry does not match its key", path.display())),
            Err(e) => Lookup::Corrupt(format!("{}: {e}", path.display())),
        }
    }

    /// Writes to a temporary file in the cache directory, then renames it into place.
    pub fn store(&self, table: &RepTable) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path_for(&CacheKey::of(table));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        tmp.write_all(table.to_json().as_bytes())
            .map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intset::IntegerSet;
    use crate::repcount::count_ordered_le;

    #[test]
    fn round_trip_and_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path().join("nested"));
        let table = count_ordered_le(&IntegerSet::finite(vec![0, 1, 3]), 2, 6).unwrap();
        let key = CacheKey::of(&table);
        assert!(matches!(cache.lookup(&key), Lookup::Miss));
        cache.store(&table).unwrap();
        match cache.lookup(&key) {
            Lookup::Hit(t) => assert_eq!(t, table),
            other => panic!("{other:?}"),
        }
        let other_limit = CacheKey { limit: 7, ..key.clone() };
        assert!(matches!(cache.lookup(&other_limit), Lookup::Miss));
        let other_set = CacheKey { set_digest: "x".into(), ..key.clone() };
        assert!(matches!(cache.lookup(&other_set), Lookup::Miss));

        std::fs::write(cache.path_for(&key), "{\"counts\": [").unwrap();
        assert!(matches!(cache.lookup(&key), Lookup::Corrupt(_)));
        // A valid table stored under the wrong name is not trusted either.
        let wrong = count_ordered_le(&IntegerSet::finite(vec![0, 2]), 2, 6).unwrap();
        std::fs::write(cache.path_for(&key), wrong.to_json()).unwrap();
        assert!(matches!(cache.lookup(&key), Lookup::Corrupt(_)));
    }
}

//! On-disk cache of calibration records, one JSON file per
//! `(n_x, n_y, alpha, reps, seed)`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{
    calibrate_from_stats, simulate_null_stats_with, supported_alpha, CalibrationRecord,
    SUPPORTED_ALPHAS,
};
use crate::engine::CrossingTable;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Key {
    n_x: usize,
    n_y: usize,
    alpha_pct: u32,
    reps: usize,
    seed: u64,
}

impl Key {
    fn new(n_x: usize, n_y: usize, alpha: f64, reps: usize, seed: u64) -> Self {
        Key {
            n_x,
            n_y,
            alpha_pct: (alpha * 100.0).round() as u32,
            reps,
            seed,
        }
    }

    fn file_name(&self) -> String {
        format!(
            "calib-nx{}-ny{}-a{:02}-b{}-s{}.json",
            self.n_x, self.n_y, self.alpha_pct, self.reps, self.seed
        )
    }

    fn matches(&self, r: &CalibrationRecord) -> bool {
        *self == Key::new(r.n_x, r.n_y, r.alpha, r.reps, r.seed)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    schema_version: u32,
    #[serde(flatten)]
    record: CalibrationRecord,
}

/// Calibration records kept in memory and, when a directory is given, on
/// disk. Unreadable or out-of-date files are rebuilt, never fatal.
pub struct CalibrationCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<Key, CalibrationRecord>>,
    simulations: AtomicUsize,
}

impl CalibrationCache {
    pub fn in_memory() -> Self {
        CalibrationCache {
            dir: None,
            memory: Mutex::new(HashMap::new()),
            simulations: AtomicUsize::new(0),
        }
    }

    pub fn new(dir: Option<PathBuf>) -> Self {
        CalibrationCache {
            dir,
            ..Self::in_memory()
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Number of null simulations this cache has run.
    pub fn simulations_run(&self) -> usize {
        self.simulations.load(Ordering::Relaxed)
    }

    fn find(&self, key: Key) -> Option<CalibrationRecord> {
        if let Some(r) = self.memory.lock().expect("cache poisoned").get(&key) {
            return Some(r.clone());
        }
        let dir = self.dir.as_ref()?;
        let rec = read_record(&dir.join(key.file_name()), key)?;
        self.memory
            .lock()
            .expect("cache poisoned")
            .insert(key, rec.clone());
        Some(rec)
    }

    fn store(&self, key: Key, rec: &CalibrationRecord) -> Result<()> {
        self.memory
            .lock()
            .expect("cache poisoned")
            .insert(key, rec.clone());
        if let Some(dir) = &self.dir {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            write_atomic(&dir.join(key.file_name()), rec)?;
        }
        Ok(())
    }

    /// Records for all supported levels, in [`SUPPORTED_ALPHAS`] order.
    /// Missing levels trigger one shared simulation.
    pub fn levels(
        &self,
        table: &CrossingTable,
        reps: usize,
        seed: u64,
    ) -> Result<Vec<CalibrationRecord>> {
        let keys: Vec<Key> = SUPPORTED_ALPHAS
            .iter()
            .map(|&a| Key::new(table.n_x(), table.n_y(), a, reps, seed))
            .collect();
        let found: Vec<Option<CalibrationRecord>> = keys.iter().map(|&k| self.find(k)).collect();
        if found.iter().all(Option::is_some) {
            return Ok(found.into_iter().flatten().collect());
        }
        let stats = self.simulate(table, reps, seed);
        SUPPORTED_ALPHAS
            .iter()
            .zip(keys)
            .map(|(&a, key)| {
                let rec =
                    calibrate_from_stats(table.n_x(), table.n_y(), a, (reps, seed), stats.clone())?;
                self.store(key, &rec)?;
                Ok(rec)
            })
            .collect()
    }

    pub fn lookup_or_build(
        &self,
        table: &CrossingTable,
        alpha: f64,
        reps: usize,
        seed: u64,
    ) -> Result<CalibrationRecord> {
        let alpha = supported_alpha(alpha)?;
        let key = Key::new(table.n_x(), table.n_y(), alpha, reps, seed);
        if let Some(rec) = self.find(key) {
            return Ok(rec);
        }
        let stats = self.simulate(table, reps, seed);
        let rec = calibrate_from_stats(table.n_x(), table.n_y(), alpha, (reps, seed), stats)?;
        self.store(key, &rec)?;
        Ok(rec)
    }

    fn simulate(&self, table: &CrossingTable, reps: usize, seed: u64) -> Vec<f64> {
        self.simulations.fetch_add(1, Ordering::Relaxed);
        simulate_null_stats_with(table, reps, seed)
    }
}

/// One-shot lookup; `cache_dir = None` keeps everything in memory.
pub fn cache_lookup_or_build(
    n_x: usize,
    n_y: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
    cache_dir: Option<&Path>,
) -> Result<CalibrationRecord> {
    let cache = CalibrationCache::new(cache_dir.map(Path::to_path_buf));
    cache.lookup_or_build(&CrossingTable::new(n_x, n_y), alpha, reps, seed)
}

fn read_record(path: &Path, key: Key) -> Option<CalibrationRecord> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
        Err(e) => {
            log::warn!(
                "cannot read calibration cache {}: {e}; rebuilding",
                path.display()
            );
            return None;
        }
    };
    let value: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            log::warn!(
                "corrupt calibration cache {}: {e}; rebuilding",
                path.display()
            );
            return None;
        }
    };
    let version = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64);
    if version != Some(u64::from(SCHEMA_VERSION)) {
        log::warn!(
            "calibration cache {} has schema {:?}, expected {SCHEMA_VERSION}; rebuilding",
            path.display(),
            version
        );
        return None;
    }
    let file: CacheFile = match serde_json::from_value(value) {
        Ok(f) => f,
        Err(e) => {
            log::warn!(
                "corrupt calibration cache {}: {e}; rebuilding",
                path.display()
            );
            return None;
        }
    };
    let rec = file.record;
    let sane = key.matches(&rec)
        && rec.null_stats.len() == rec.reps
        && rec.null_stats.windows(2).all(|w| w[0] <= w[1]);
    if !sane {
        log::warn!(
            "calibration cache {} does not match its key; rebuilding",
            path.display()
        );
        return None;
    }
    Some(rec)
}

fn write_atomic(path: &Path, rec: &CalibrationRecord) -> Result<()> {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let body = serde_json::to_string(&CacheFile {
        schema_version: SCHEMA_VERSION,
        record: rec.clone(),
    })?;
    let tmp = path.with_extension(format!(
        "tmp-{}-{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_lookup_skips_simulation() {
        let dir = tempfile::tempdir().unwrap();
        let table = CrossingTable::new(4, 5);
        let cache = CalibrationCache::new(Some(dir.path().to_path_buf()));
        let a = cache.lookup_or_build(&table, 0.1, 500, 3).unwrap();
        assert_eq!(cache.simulations_run(), 1);
        let b = cache.lookup_or_build(&table, 0.1, 500, 3).unwrap();
        assert_eq!(cache.simulations_run(), 1);
        assert_eq!(a, b);

        // a fresh cache over the same directory reads the file
        let fresh = CalibrationCache::new(Some(dir.path().to_path_buf()));
        let c = fresh.lookup_or_build(&table, 0.1, 500, 3).unwrap();
        assert_eq!(fresh.simulations_run(), 0);
        assert_eq!(a, c);
    }

    #[test]
    fn changed_seed_or_reps_rebuilds() {
        let dir = tempfile::tempdir().unwrap();
        let table = CrossingTable::new(4, 5);
        let cache = CalibrationCache::new(Some(dir.path().to_path_buf()));
        cache.lookup_or_build(&table, 0.1, 500, 3).unwrap();
        cache.lookup_or_build(&table, 0.1, 500, 4).unwrap();
        assert_eq!(cache.simulations_run(), 2);
        cache.lookup_or_build(&table, 0.1, 600, 4).unwrap();
        assert_eq!(cache.simulations_run(), 3);
    }

    #[test]
    fn levels_share_one_simulation() {
        let table = CrossingTable::new(6, 6);
        let cache = CalibrationCache::in_memory();
        let recs = cache.levels(&table, 1000, 9).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(cache.simulations_run(), 1);
        assert_eq!(recs[0].null_stats, recs[2].null_stats);
        cache.levels(&table, 1000, 9).unwrap();
        assert_eq!(cache.simulations_run(), 1);
        // a single level is now a hit too
        cache.lookup_or_build(&table, 0.05, 1000, 9).unwrap();
        assert_eq!(cache.simulations_run(), 1);
    }

    #[test]
    fn corrupt_or_stale_files_are_rebuilt() {
        let dir = tempfile::tempdir().unwrap();
        let table = CrossingTable::new(3, 4);
        let key = Key::new(3, 4, 0.1, 300, 1);
        let path = dir.path().join(key.file_name());

        fs::write(&path, "{ not json").unwrap();
        let cache = CalibrationCache::new(Some(dir.path().to_path_buf()));
        let rec = cache.lookup_or_build(&table, 0.1, 300, 1).unwrap();
        assert_eq!(cache.simulations_run(), 1);

        // bump the version on disk
        let text = fs::read_to_string(&path).unwrap();
        let stale = text.replace("\"schema_version\":1", "\"schema_version\":0");
        assert_ne!(text, stale);
        fs::write(&path, stale).unwrap();
        let cache = CalibrationCache::new(Some(dir.path().to_path_buf()));
        let again = cache.lookup_or_build(&table, 0.1, 300, 1).unwrap();
        assert_eq!(cache.simulations_run(), 1);
        assert_eq!(rec, again);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"schema_version\":1"));
    }

    #[test]
    fn free_function_without_dir() {
        let rec = cache_lookup_or_build(3, 3, 0.1, 1000, 2, None).unwrap();
        assert_eq!(rec.null_stats.len(), 1000);
    }
}

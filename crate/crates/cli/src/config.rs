//! Flat `key = value` configuration files and option resolution.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

pub const KNOWN_KEYS: [&str; 12] = [
    "seed", "trials", "workers", "format", "out", "n", "pattern", "class", "method", "count",
    "suite", "bits",
];

pub const WORKERS_ENV: &str = "FORESTPERM_WORKERS";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(format!("config line {}: unknown key {key:?}", i + 1));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| format!("config key {key}: {e}")))
            .transpose()
    }
}

/// Command line, then config file, then `default`.
pub fn resolve<T: FromStr>(cli: Option<T>, file: &FileConfig, key: &str, default: T) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    Ok(resolve_opt(cli, file, key)?.unwrap_or(default))
}

pub fn resolve_opt<T: FromStr>(cli: Option<T>, file: &FileConfig, key: &str) -> Result<Option<T>, String>
where
    T::Err: std::fmt::Display,
{
    match cli {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

/// Worker count: command line, config file, `FORESTPERM_WORKERS`, then the
/// available parallelism.
pub fn resolve_workers(cli: Option<usize>, file: &FileConfig) -> Result<usize, String> {
    if let Some(w) = resolve_opt(cli, file, "workers")? {
        return Ok(w);
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return v
            .trim()
            .parse()
            .map_err(|e| format!("{WORKERS_ENV}={v:?}: {e}"));
    }
    Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

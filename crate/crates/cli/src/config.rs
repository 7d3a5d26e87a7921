//! Experiment settings: a `key = value` file merged with per-key flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

/// Keys every subcommand accepts on top of its own.
pub const COMMON_KEYS: &[&str] = &["seed", "workers", "out", "format"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Parses `key = value` lines. Blank lines and `#` comments are skipped;
    /// unknown or repeated keys are errors.
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config { line: i + 1, msg: format!("expected `key = value`, found {line:?}") });
            };
            let (key, value) = (key.trim(), value.trim());
            check_known(key, allowed)?;
            if value.is_empty() {
                return Err(CliError::key(key, format!("empty value on line {}", i + 1)));
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::key(key, format!("repeated on line {}", i + 1)));
            }
        }
        Ok(Settings { values })
    }

    pub fn load(path: &Path, allowed: &[&str]) -> Result<Self, CliError> {
        Self::parse(&read_file(path)?, allowed)
    }

    /// Flag values win over file entries.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key).map(|v| v.parse().map_err(|e| CliError::key(key, format!("{v:?}: {e}")))).transpose()
    }

    pub fn require<T>(&self, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(key)?.ok_or_else(|| CliError::key(key, "required but missing"))
    }

    pub fn or<T>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// A comma-separated list with at least one entry.
    pub fn require_list<T>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let raw = self.raw(key).ok_or_else(|| CliError::key(key, "required but missing"))?;
        raw.split(',')
            .map(str::trim)
            .map(|v| v.parse().map_err(|e| CliError::key(key, format!("{v:?}: {e}"))))
            .collect()
    }
}

fn check_known(key: &str, allowed: &[&str]) -> Result<(), CliError> {
    if allowed.contains(&key) || COMMON_KEYS.contains(&key) {
        return Ok(());
    }
    let mut known: Vec<&str> = allowed.iter().chain(COMMON_KEYS).copied().collect();
    known.sort_unstable();
    Err(CliError::key(key, format!("unknown key; expected one of {}", known.join(", "))))
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

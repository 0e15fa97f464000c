//! Flat `key = value` config file. Keys use the long flag names
//! (`top-k = 1,5`); a flag given on the command line wins.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};

use crate::UsageError;

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    source: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                UsageError(format!("{}:{}: expected key = value", path.display(), i + 1))
            })?;
            let key = key.trim().trim_start_matches("--").replace('_', "-");
            values.insert(key, value.trim().trim_matches('"').to_owned());
        }
        Ok(Self {
            values,
            source: Some(path.to_owned()),
        })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse<T: FromStr>(&self, key: &str, raw: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        raw.parse::<T>().map_err(|e| {
            let origin = self
                .source
                .as_deref()
                .map(|p| p.display().to_string())
                .unwrap_or_default();
            UsageError(format!("{origin}: invalid value {raw:?} for {key}: {e}")).into()
        })
    }

    /// Flag value, else config value, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match (flag, self.raw(key)) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(raw)) => self.parse(key, raw).map(Some),
            (None, None) => Ok(None),
        }
    }

    pub fn pick_or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    /// Repeatable flag; the config form is a comma-separated list.
    pub fn pick_list<T: FromStr>(&self, flag: Vec<T>, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        if !flag.is_empty() {
            return Ok(flag);
        }
        match self.raw(key) {
            Some(raw) => raw
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| self.parse(key, s))
                .collect(),
            None => Ok(Vec::new()),
        }
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.raw(key) {
            None => Ok(false),
            Some(raw) => match raw.to_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                _ => Err(anyhow!(UsageError(format!("invalid boolean {raw:?} for {key}")))),
            },
        }
    }
}

/// Fails with a usage error (exit 2) naming `path` when it does not exist.
pub fn existing(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(UsageError(format!("{what} not found: {}", path.display())).into())
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

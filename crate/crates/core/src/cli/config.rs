//! Config files, grid specifications and flag/file/default resolution.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Inclusive linear grid written `lo:hi:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.hi
                } else {
                    self.lo + step * i as f64
                }
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("grid {s:?} is not of the form lo:hi:count"));
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(bad());
        };
        let lo: f64 = lo.parse().map_err(|_| bad())?;
        let hi: f64 = hi.parse().map_err(|_| bad())?;
        let count: usize = count.parse().map_err(|_| bad())?;
        if !(lo.is_finite() && hi.is_finite()) || count == 0 || hi < lo || (count == 1 && hi != lo) {
            return Err(bad());
        }
        Ok(Grid { lo, hi, count })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.count)
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Reads a TOML or JSON config file into a flat key/value map. A JSON
/// document with a top-level `config` object (a run manifest) contributes
/// that object.
pub fn load_config_file(path: &Path) -> Result<Map<String, Value>> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path)?;
    let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    let value: Value = if is_json {
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?
    };
    let Value::Object(mut map) = value else {
        return Err(Error::InvalidParameter(format!(
            "{}: config must be a table of settings",
            path.display()
        )));
    };
    match map.remove("config") {
        Some(Value::Object(inner)) => Ok(inner),
        Some(_) => Err(Error::InvalidParameter(format!(
            "{}: `config` must be a table",
            path.display()
        ))),
        None => {
            map.remove("command");
            map.remove("files");
            Ok(map)
        }
    }
}

/// Defaults, then file values, then flag values; later layers win.
pub fn resolve<T>(defaults: Value, file: Option<&Map<String, Value>>, flags: Map<String, Value>) -> Result<(T, Value)>
where
    T: for<'de> Deserialize<'de> + Serialize,
{
    let Value::Object(mut merged) = defaults else {
        unreachable!("defaults are always a table")
    };
    if let Some(file) = file {
        merged.extend(file.iter().map(|(k, v)| (k.clone(), v.clone())));
    }
    merged.extend(flags);
    let config: T = serde_json::from_value(Value::Object(merged))
        .map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
    let resolved = serde_json::to_value(&config).map_err(std::io::Error::other)?;
    Ok((config, resolved))
}

/// Collects `Some` flag values under their config keys.
#[derive(Default)]
pub struct Overrides(Map<String, Value>);

impl Overrides {
    pub fn set<V: Serialize>(&mut self, key: &str, value: &Option<V>) -> &mut Self {
        if let Some(v) = value {
            self.0.insert(
                key.to_string(),
                serde_json::to_value(v).expect("flag values serialize"),
            );
        }
        self
    }

    pub fn into_map(self) -> Map<String, Value> {
        self.0
    }
}

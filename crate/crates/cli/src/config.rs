//! Layered option resolution: defaults, then the `--config` file, then explicit flags.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Options that double as command-line flags and config-file keys. Unset values are `None`.
pub trait Layered: Serialize + DeserializeOwned {
    fn defaults() -> Self;
}

fn to_object(v: &impl Serialize) -> Map<String, Value> {
    match serde_json::to_value(v) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    }
}

fn overlay(base: &mut Map<String, Value>, top: Map<String, Value>) {
    for (k, v) in top {
        if !v.is_null() {
            base.insert(k, v);
        }
    }
}

pub fn read_config_file(path: &Path) -> CliResult<Map<String, Value>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::usage(format!("config {} is not a JSON object", path.display()))),
        Err(e) => Err(CliError::usage(format!("config {}: {e}", path.display()))),
    }
}

/// Merges the three layers and rejects keys the options type does not know.
pub fn resolve<T: Layered>(config: Option<&Path>, flags: &T) -> CliResult<T> {
    let mut merged = to_object(&T::defaults());
    if let Some(path) = config {
        overlay(&mut merged, read_config_file(path)?);
    }
    overlay(&mut merged, to_object(flags));
    let known = to_object(&T::defaults());
    if let Some(key) = merged.keys().find(|k| !known.contains_key(*k)) {
        return Err(CliError::usage(format!("unknown config key `{key}`")));
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::usage(format!("invalid configuration: {e}")))
}

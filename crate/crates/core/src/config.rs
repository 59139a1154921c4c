//! Structured key-value configuration files with includes.
//!
//! Files use TOML syntax. A top-level `include` key (a string or an array of
//! strings, resolved relative to the including file) pulls other files in
//! first; keys in the including file then override included ones. Tables are
//! merged recursively, every other value is replaced wholesale.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("include cycle through {0}")]
    IncludeCycle(PathBuf),
    #[error("invalid field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.into(), message: message.into() }
    }
}

/// Loads a config file and everything it includes into one merged table.
pub fn load_tree(path: &Path) -> Result<Table, ConfigError> {
    let mut stack = Vec::new();
    load_recursive(path, &mut stack)
}

fn load_recursive(path: &Path, stack: &mut Vec<PathBuf>) -> Result<Table, ConfigError> {
    let canonical = path
        .canonicalize()
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    if stack.contains(&canonical) {
        return Err(ConfigError::IncludeCycle(canonical));
    }
    let text = std::fs::read_to_string(&canonical)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let mut table = parse_str(&text).map_err(|message| ConfigError::Parse { path: path.to_path_buf(), message })?;

    let includes = match table.remove("include") {
        None => Vec::new(),
        Some(Value::String(s)) => vec![s],
        Some(Value::Array(items)) => items
            .into_iter()
            .map(|v| match v {
                Value::String(s) => Ok(s),
                other => Err(ConfigError::invalid("include", format!("expected a path string, got {other}"))),
            })
            .collect::<Result<_, _>>()?,
        Some(other) => return Err(ConfigError::invalid("include", format!("expected a path or list, got {other}"))),
    };

    stack.push(canonical.clone());
    let dir = canonical.parent().unwrap_or(Path::new("."));
    let mut merged = Table::new();
    for inc in includes {
        let sub = load_recursive(&dir.join(inc), stack)?;
        merge(&mut merged, sub);
    }
    stack.pop();
    merge(&mut merged, table);
    Ok(merged)
}

pub fn parse_str(text: &str) -> Result<Table, String> {
    text.parse::<Table>().map_err(|e| e.to_string())
}

/// Recursively merges `over` into `base`; `over` wins on conflicts.
pub fn merge(base: &mut Table, over: Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Sets a dotted key such as `ppo.learning_rate`, creating tables as needed.
pub fn set_dotted(table: &mut Table, dotted: &str, value: Value) -> Result<(), ConfigError> {
    let mut parts: Vec<&str> = dotted.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| ConfigError::invalid(dotted, "empty key"))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(ConfigError::invalid(dotted, format!("`{p}` is not a table"))),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

pub fn from_table<T: DeserializeOwned>(table: Table) -> Result<T, ConfigError> {
    Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::invalid(field_of(&e.to_string()), e.to_string().trim().to_string()))
}

pub fn to_string<T: Serialize>(value: &T) -> Result<String, ConfigError> {
    toml::to_string_pretty(value).map_err(|e| ConfigError::invalid("<root>", e.to_string()))
}

// Best-effort extraction of the offending key from a serde message.
fn field_of(message: &str) -> String {
    message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "<root>".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn include_and_override() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("base.cfg"), "a = 1\n[t]\nx = 1\ny = 2\n").unwrap();
        std::fs::write(dir.path().join("top.cfg"), "include = \"base.cfg\"\nb = 3\n[t]\ny = 5\n").unwrap();
        let t = load_tree(&dir.path().join("top.cfg")).unwrap();
        assert_eq!(t["a"].as_integer(), Some(1));
        assert_eq!(t["b"].as_integer(), Some(3));
        assert_eq!(t["t"]["x"].as_integer(), Some(1));
        assert_eq!(t["t"]["y"].as_integer(), Some(5));
        assert!(t.get("include").is_none());
    }

    #[test]
    fn include_cycle_detected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.cfg"), "include = \"b.cfg\"\n").unwrap();
        std::fs::write(dir.path().join("b.cfg"), "include = [\"a.cfg\"]\n").unwrap();
        assert!(matches!(load_tree(&dir.path().join("a.cfg")), Err(ConfigError::IncludeCycle(_))));
    }

    #[test]
    fn dotted_set() {
        let mut t = Table::new();
        set_dotted(&mut t, "ppo.lr", Value::Float(0.1)).unwrap();
        assert_eq!(t["ppo"]["lr"].as_float(), Some(0.1));
        assert!(set_dotted(&mut t, "ppo.lr.x", Value::Float(0.1)).is_err());
    }

    #[test]
    fn missing_field_is_named() {
        #[derive(serde::Deserialize, Debug)]
        #[allow(dead_code)]
        struct S {
            mass: f64,
        }
        let err = from_table::<S>(Table::new()).unwrap_err();
        match err {
            ConfigError::Invalid { field, .. } => assert_eq!(field, "mass"),
            other => panic!("unexpected {other:?}"),
        }
    }
}

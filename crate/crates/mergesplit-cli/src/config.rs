//! Flat key=value run configuration.
//!
//! One assignment per line, `#` lines are comments, keys are
//! `[A-Za-z0-9_-]` words. Values are kept as trimmed strings until a typed
//! getter interprets them, so a config survives parse → format → parse
//! byte-for-byte and the canonical form is independent of input order.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based source line for parse errors; None for value errors.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn at_line(line: usize, message: String) -> ConfigError {
    ConfigError {
        line: Some(line),
        message,
    }
}

fn for_key(key: &str, message: String) -> ConfigError {
    ConfigError {
        line: None,
        message: format!("key {key}: {message}"),
    }
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn valid_value(value: &str) -> bool {
    !value.is_empty() && !value.chars().any(|c| c.is_control())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(at_line(line_no, format!("missing '=' in {line:?}")));
            };
            let key = key.trim();
            let value = value.trim();
            if !valid_key(key) {
                return Err(at_line(line_no, format!("bad key {key:?}")));
            }
            if !valid_value(value) {
                return Err(at_line(line_no, format!("bad value {value:?}")));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(at_line(line_no, format!("duplicate key {key:?}")));
            }
        }
        Ok(Self { entries })
    }

    /// Canonical text form: sorted keys, one `key = value` per line.
    pub fn format(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !valid_key(key) {
            return Err(for_key(key, "invalid key name".into()));
        }
        if !valid_value(value.trim()) {
            return Err(for_key(key, format!("invalid value {value:?}")));
        }
        self.entries
            .insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Keys present here but absent from `known`, for strict validation.
    pub fn unknown_keys(&self, known: &[&str]) -> Vec<String> {
        self.entries
            .keys()
            .filter(|k| !known.contains(&k.as_str()))
            .cloned()
            .collect()
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => {
                let x: f64 = v
                    .parse()
                    .map_err(|_| for_key(key, format!("not a number: {v:?}")))?;
                if !x.is_finite() {
                    return Err(for_key(key, format!("not finite: {v:?}")));
                }
                Ok(Some(x))
            }
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| for_key(key, format!("not a nonnegative integer: {v:?}"))),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| for_key(key, format!("not a nonnegative integer: {v:?}"))),
        }
    }
}

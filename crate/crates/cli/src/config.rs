//! Experiment parameters gathered from a key=value file and command flags.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::CliError;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 1729;

/// Parameters for one command, keyed by canonical (underscore) names.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    values: BTreeMap<String, String>,
}

pub fn canonical_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are
/// ignored.
pub fn parse_config(text: &str) -> Result<Params, CliError> {
    let mut params = Params::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Validation(format!("config line {}: expected key = value", i + 1)));
        };
        let key = canonical_key(k);
        if key.is_empty() {
            return Err(CliError::Validation(format!("config line {}: empty key", i + 1)));
        }
        params.values.insert(key, v.trim().to_string());
    }
    Ok(params)
}

impl Params {
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(canonical_key(key), value.into());
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    /// Later values win.
    pub fn merge(&mut self, other: Params) {
        self.values.extend(other.values);
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Validation(format!("invalid value for {key}: {v:?}"))),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.opt(key)?.ok_or_else(|| CliError::Validation(format!("missing parameter {key}")))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key) {
            None => Ok(false),
            Some("true" | "1" | "yes" | "") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(CliError::Validation(format!("invalid value for {key}: {v:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_and_merges() {
        let mut p = parse_config("# comment\nn = 5\nc-max=100 # trailing\n\nr = 0.3\n").unwrap();
        assert_eq!(p.get::<u64>("n").unwrap(), 5);
        assert_eq!(p.get::<u64>("c_max").unwrap(), 100);
        let mut flags = Params::default();
        flags.set("r", "0.8");
        p.merge(flags);
        assert_eq!(p.get::<f64>("r").unwrap(), 0.8);
        assert!(p.get::<u64>("m").is_err());
        assert!(parse_config("oops").is_err());
        assert!(p.opt::<u64>("r").is_err());
    }

    #[test]
    fn flags_parse() {
        let mut p = Params::default();
        assert!(!p.flag("complete_sum").unwrap());
        p.set("complete-sum", "true");
        assert!(p.flag("complete_sum").unwrap());
        p.set("complete_sum", "maybe");
        assert!(p.flag("complete_sum").is_err());
    }
}

//! Flat `key = value` configuration files.

use std::collections::BTreeMap;

/// Every key a configuration file may set.
pub const KEYS: &[&str] = &[
    "young",
    "p",
    "q",
    "coeffs",
    "exponents",
    "kernel",
    "s",
    "beta",
    "grid",
    "reach",
    "seed",
    "tol",
    "max_iter",
    "mu",
    "mu_grid",
    "restarts",
    "input",
    "output",
    "halfspace",
    "domain",
    "trace_csv",
    "criteria",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Overrides a value; used for command-line flags.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }
}

/// Parses config text. Blank lines and `#` comments are skipped; dashes in
/// keys are read as underscores. All problems are reported together.
pub fn parse_config(text: &str) -> Result<ConfigMap, Vec<String>> {
    let mut map = ConfigMap::default();
    let mut errors = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!(
                "line {}: expected `key = value`, got `{line}`",
                n + 1
            ));
            continue;
        };
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        if !KEYS.contains(&key.as_str()) {
            errors.push(format!("line {}: unknown key `{key}`", n + 1));
        } else if value.is_empty() {
            errors.push(format!("line {}: `{key}` has no value", n + 1));
        } else if map.contains(&key) {
            errors.push(format!("line {}: `{key}` set twice", n + 1));
        } else {
            map.set(&key, value);
        }
    }
    if errors.is_empty() {
        Ok(map)
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_collects_errors() {
        let m = parse_config(
            "# setup\nyoung = power-sum\nkernel=fractional\n\ns = 0.5 # trailing\nmax-iter = 10\n",
        )
        .unwrap();
        assert_eq!(m.get("young"), Some("power-sum"));
        assert_eq!(m.get("s"), Some("0.5"));
        assert_eq!(m.get("max_iter"), Some("10"));
        let errs = parse_config("colour = red\ns\np =\ns = 1\ns = 2\n").unwrap_err();
        assert_eq!(errs.len(), 4, "{errs:?}");
    }
}

//! Flat `key = value` config files. Flags override file values; the
//! `THINZETA_CACHE` environment variable supplies `cache_dir` when neither does.

use std::collections::BTreeMap;
use std::path::Path;

pub const KEYS: &[&str] = &[
    "sieve_limit",
    "cache_dir",
    "format",
    "seeds",
    "X",
    "J",
    "em_m",
    "em_terms",
    "kind",
    "k",
    "b",
    "kappa",
    "lambda",
    "precision_bits",
    "seed",
    "sign",
    "primes",
    "delta",
];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
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
            if !KEYS.contains(&key) {
                return Err(format!("config line {}: unknown key {key:?}", i + 1));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
        ConfigFile::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// `flag`, else the file value parsed with `parse`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, String> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self
                .get(key)
                .map(|s| parse(s).map_err(|e| format!("config key {key}: {e}")))
                .transpose(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = ConfigFile::parse("# run\nX = 1e6\nkind=index  # trailing\n\nk = 2\n").unwrap();
        assert_eq!(c.get("X"), Some("1e6"));
        assert_eq!(c.get("kind"), Some("index"));
        assert!(ConfigFile::parse("nonsense").is_err());
        assert!(ConfigFile::parse("colour = blue").is_err());
        let k = c.pick(None, "k", |s| s.parse::<u64>().map_err(|e| e.to_string())).unwrap();
        assert_eq!(k, Some(2));
        let k = c.pick(Some(7), "k", |s| s.parse::<u64>().map_err(|e| e.to_string())).unwrap();
        assert_eq!(k, Some(7));
    }
}

//! Flat `key = value` run manifests.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

const KNOWN: &[&str] = &[
    "t", "h", "n", "n-paths", "dt", "seed", "mode", "tol", "threads", "out", "format", "u", "bins",
    "ks-min", "ks-max", "tv-endpoint", "from", "to", "points",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Blank lines and `#` comments are skipped; keys accept `_` for `-`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
            let key = k.trim().replace('_', "-");
            if !KNOWN.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("config line {}: unknown key {key:?}", i + 1)));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    /// Sets `slot` from the file unless the command line already did.
    pub fn fill<T: FromStr>(&self, slot: &mut Option<T>, key: &str) -> Result<(), CliError> {
        if slot.is_some() {
            return Ok(());
        }
        if let Some(raw) = self.values.get(key) {
            let v = raw
                .parse()
                .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {raw:?}")))?;
            *slot = Some(v);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let cfg = ConfigFile::parse("t = 50\n# comment\nn_paths=2000  # inline\n").unwrap();
        let mut t = Some(10.0);
        let mut n: Option<usize> = None;
        cfg.fill(&mut t, "t").unwrap();
        cfg.fill(&mut n, "n-paths").unwrap();
        assert_eq!(t, Some(10.0));
        assert_eq!(n, Some(2000));
    }

    #[test]
    fn rejects_garbage() {
        assert!(ConfigFile::parse("t 50").is_err());
        assert!(ConfigFile::parse("colour = red").is_err());
        let cfg = ConfigFile::parse("t = abc").unwrap();
        let mut t: Option<f64> = None;
        assert!(cfg.fill(&mut t, "t").is_err());
    }
}

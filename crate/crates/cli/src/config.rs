//! `key = value` config files. Keys are long flag names without the leading
//! dashes; `#` starts a comment. Flags given on the command line win.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    "graph",
    "names",
    "compound",
    "tables",
    "dataset",
    "backend",
    "model",
    "max-edit",
    "bind-k",
    "queue-threshold",
    "candidate-k",
    "sample-k",
    "temperature",
    "parallelism",
    "seed",
    "shots",
    "out",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    /// `shots` may repeat, so it is kept separately.
    shots: Vec<String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(format!("line {}: expected key = value", i + 1));
            };
            let key = k.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key {key:?}", i + 1));
            }
            let value = v.trim().to_owned();
            if key == "shots" {
                cfg.shots.push(value);
            } else {
                cfg.values.insert(key, value);
            }
        }
        Ok(cfg)
    }

    pub fn shots(&self) -> &[String] {
        &self.shots
    }

    /// Fill `slot` from the file unless the flag already set it.
    pub fn fill<T: FromStr>(&self, key: &str, slot: &mut Option<T>) -> Result<(), CliError>
    where
        T::Err: std::fmt::Display,
    {
        if slot.is_some() {
            return Ok(());
        }
        if let Some(v) = self.values.get(key) {
            *slot = Some(
                v.parse()
                    .map_err(|e| CliError::Usage(format!("config key {key}: {e}")))?,
            );
        }
        Ok(())
    }
}

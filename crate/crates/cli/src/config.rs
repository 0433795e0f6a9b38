//! Key=value run configuration. Flags override file values, which override
//! built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Keys accepted in a configuration file.
pub const KNOWN_KEYS: &[&str] = &[
    "mode",
    "curve",
    "profile",
    "password",
    "password_file",
    "password_id",
    "peer_password",
    "peer_password_file",
    "ssid",
    "identifier",
    "mac",
    "peer_mac",
    "mac_strategy",
    "sessions",
    "repetitions",
    "flip_probability",
    "usable_threshold",
    "channels",
    "seed",
    "format",
    "output",
    "threads",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    origin: String,
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Lines of `key = value`; `#` starts a comment line. Values may be
    /// wrapped in double quotes.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| CliError::Usage(format!("{origin}:{}: {msg}", i + 1));
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err("expected key = value"))?;
            let key = k.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(err(&format!("unknown key `{key}`")));
            }
            let v = v.trim();
            let v = v
                .strip_prefix('"')
                .and_then(|s| s.strip_suffix('"'))
                .unwrap_or(v);
            if values.insert(key.clone(), v.to_string()).is_some() {
                return Err(err(&format!("duplicate key `{key}`")));
            }
        }
        Ok(ConfigFile {
            origin: origin.to_string(),
            values,
        })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse().map_err(|e| {
                    CliError::Usage(format!("{}: invalid value for `{key}`: {e}", self.origin))
                })
            })
            .transpose()
    }

    /// The flag when given, else the file value.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

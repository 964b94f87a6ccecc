//! `key = value` configuration and the precedence rules.
//!
//! Flags beat the config file, which beats the `VANET_HOPCALC_SEED`
//! environment variable (seed only), which beats built-in defaults. Every
//! resolved value is recorded so it can be echoed in the output header; an
//! output file's header is itself a valid config file.

use crate::error::CliError;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const SEED_ENV: &str = "VANET_HOPCALC_SEED";
pub const DEFAULT_SEED: u64 = 1;
/// First line of every file this tool writes.
pub const HEADER_TAG: &str = "# vanet-hopcalc";

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

fn key_value(line: &str) -> Option<(String, String)> {
    let (k, v) = line.split_once('=')?;
    let k = k.trim();
    if k.is_empty() || !k.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-') {
        return None;
    }
    Some((normalize(k), v.trim().to_string()))
}

/// Parsed config entries.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    /// Plain files: one `key = value` per line, `#` comments. Files written by
    /// this tool: the `# key = value` lines of the leading comment block.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        if first.trim_start().starts_with(HEADER_TAG) {
            for line in text.lines().take_while(|l| l.trim_start().starts_with('#')) {
                if let Some((k, v)) = key_value(line.trim_start().trim_start_matches('#')) {
                    entries.insert(k, v);
                }
            }
            return Ok(Self { entries });
        }
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) =
                key_value(t).ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", i + 1)))?;
            if entries.insert(k.clone(), v).is_some() {
                return Err(CliError::Config(format!("config line {}: `{k}` given twice", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Resolves each parameter once and remembers what was used.
pub struct Resolver {
    file: BTreeMap<String, String>,
    consumed: BTreeSet<String>,
    used: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(command: &str, file: ConfigFile) -> Result<Self, CliError> {
        let mut file = file.entries;
        if let Some(c) = file.remove("command") {
            if c != command {
                return Err(CliError::Config(format!("config is for `{c}`, not `{command}`")));
            }
        }
        Ok(Self { file, consumed: BTreeSet::new(), used: BTreeMap::new() })
    }

    fn from_file<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.consumed.insert(key.to_string());
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::Config(format!("config `{key} = {raw}`: {e}"))),
        }
    }

    fn record<T: Display>(&mut self, key: &str, v: &T) {
        self.used.insert(key.to_string(), v.to_string());
    }

    /// Flag, then config file.
    pub fn opt<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => {
                self.consumed.insert(key.to_string());
                Some(v)
            }
            None => self.from_file(key)?,
        };
        if let Some(v) = &v {
            self.record(key, v);
        }
        Ok(v)
    }

    /// Flag, then config file, then `default`.
    pub fn get<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = self.opt(key, flag)?.unwrap_or(default);
        self.record(key, &v);
        Ok(v)
    }

    pub fn require<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.opt(key, flag)?.ok_or_else(|| CliError::Config(format!("missing required `{}`", key.replace('_', "-"))))
    }

    /// Flag, config file, environment, default.
    pub fn seed(&mut self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(v) = self.opt("seed", flag)? {
            return Ok(v);
        }
        let v = match std::env::var(SEED_ENV) {
            Ok(raw) => raw.trim().parse().map_err(|_| CliError::Config(format!("{SEED_ENV}={raw} is not a seed")))?,
            Err(_) => DEFAULT_SEED,
        };
        self.record("seed", &v);
        Ok(v)
    }

    /// Checks that every config entry was meaningful for this command and
    /// returns the resolved parameters.
    pub fn finish(self) -> Result<BTreeMap<String, String>, CliError> {
        if let Some(k) = self.file.keys().find(|k| !self.consumed.contains(*k)) {
            return Err(CliError::Config(format!("config key `{k}` does not apply to this command")));
        }
        Ok(self.used)
    }
}

/// Real values given as `start:stop:step` (inclusive) or a comma list.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    text: String,
    pub values: Vec<f64>,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let num = |t: &str| t.parse::<f64>().map_err(|_| format!("bad number `{t}` in grid"));
        let values = if text.contains(':') {
            let parts: Vec<&str> = text.split(':').collect();
            let [a, b, step] = parts[..] else {
                return Err("grid range must be start:stop:step".into());
            };
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err("grid range needs stop ≥ start and step > 0".into());
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| a + i as f64 * step).collect()
        } else {
            text.split(',').filter(|t| !t.is_empty()).map(num).collect::<Result<Vec<_>, _>>()?
        };
        if values.is_empty() {
            return Err("empty grid".into());
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err("grid values must be finite".into());
        }
        Ok(Self { text, values })
    }
}

impl Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

/// `|`-separated list of strings (model names, specs or paths).
#[derive(Debug, Clone, PartialEq)]
pub struct List(pub Vec<String>);

impl FromStr for List {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let items: Vec<String> = s.split('|').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect();
        if items.is_empty() {
            return Err("empty list".into());
        }
        Ok(Self(items))
    }
}

impl Display for List {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0.join(" | "))
    }
}

/// A path that prints as given.
#[derive(Debug, Clone, PartialEq)]
pub struct PathArg(pub PathBuf);

impl FromStr for PathArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().is_empty() {
            return Err("empty path".into());
        }
        Ok(Self(PathBuf::from(s.trim())))
    }
}

impl Display for PathArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0.display())
    }
}

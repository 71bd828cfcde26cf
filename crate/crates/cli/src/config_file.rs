//! `key=value` parameter files.
//!
//! ```text
//! # ten parties, three packets each
//! n=10
//! t_pk=3
//! m_x=6
//! seed=7
//! ```
//!
//! Recognised keys: `n`, `m`, `t_pk`, `m_x`, `seed`, `batch_size`,
//! `protocol` (`drss` or `single-mask`), `trials`, `colluders` (a count).
//! Blank lines and `#` comments are ignored. A missing `m_x` defaults to
//! `2 * t_pk` and a missing `m` to the smallest feasible value.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use drss_core::config::{ConfigTemplate, DEFAULT_PACKETS_PER_PARTY, DEFAULT_PARTIES};
use drss_core::simkernel::DEFAULT_BATCH_SIZE;
use drss_core::{ConfigError, ProtocolConfig};

use crate::error::CliError;

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 0;

const KEYS: [&str; 9] = [
    "n",
    "m",
    "t_pk",
    "m_x",
    "seed",
    "batch_size",
    "protocol",
    "trials",
    "colluders",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Protocol {
    #[default]
    Drss,
    SingleMask,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Drss => "drss",
            Protocol::SingleMask => "single-mask",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "drss" => Ok(Protocol::Drss),
            "single-mask" => Ok(Protocol::SingleMask),
            other => Err(format!("unknown protocol {other:?} (expected drss or single-mask)")),
        }
    }
}

/// Parsed parameter file before the protocol configuration is resolved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigFile {
    pub n: usize,
    pub t_pk: Option<usize>,
    pub m: Option<usize>,
    pub m_x: Option<usize>,
    pub seed: u64,
    pub batch_size: usize,
    pub protocol: Protocol,
    pub trials: u64,
    pub colluders: Option<usize>,
    /// 1-based line of each key, for error messages.
    lines: HashMap<&'static str, usize>,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            n: DEFAULT_PARTIES,
            t_pk: None,
            m: None,
            m_x: None,
            seed: DEFAULT_SEED,
            batch_size: DEFAULT_BATCH_SIZE,
            protocol: Protocol::Drss,
            trials: DEFAULT_TRIALS,
            colluders: None,
            lines: HashMap::new(),
        }
    }
}

/// A parameter file together with its resolved protocol configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Settings {
    pub file: ConfigFile,
    pub config: ProtocolConfig,
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    raw.parse()
        .map_err(|e| CliError::Config(format!("line {line}: invalid value {raw:?} for {key}: {e}")))
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = ConfigFile::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, val) = content
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {line}: expected key=value, got {content:?}")))?;
            let (key, val) = (key.trim(), val.trim());
            let key = *KEYS
                .iter()
                .find(|&&k| k == key)
                .ok_or_else(|| CliError::Config(format!("line {line}: unknown key {key:?}")))?;
            if cfg.lines.insert(key, line).is_some() {
                return Err(CliError::Config(format!("line {line}: duplicate key {key:?}")));
            }
            match key {
                "n" => cfg.n = value(line, key, val)?,
                "m" => cfg.m = Some(value(line, key, val)?),
                "t_pk" => cfg.t_pk = Some(value(line, key, val)?),
                "m_x" => cfg.m_x = Some(value(line, key, val)?),
                "seed" => cfg.seed = value(line, key, val)?,
                "batch_size" => cfg.batch_size = value(line, key, val)?,
                "protocol" => cfg.protocol = value(line, key, val)?,
                "trials" => cfg.trials = value(line, key, val)?,
                "colluders" => cfg.colluders = Some(value(line, key, val)?),
                _ => unreachable!(),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    fn at(&self, key: &str) -> String {
        match self.lines.get(key) {
            Some(line) => format!("line {line}: "),
            None => String::new(),
        }
    }

    /// The protocol configuration template described by this file.
    pub fn template(&self) -> Result<ConfigTemplate, CliError> {
        let t_pk = match (self.protocol, self.t_pk) {
            (Protocol::Drss, t) => t.unwrap_or(DEFAULT_PACKETS_PER_PARTY),
            (Protocol::SingleMask, None | Some(1)) => 1,
            (Protocol::SingleMask, Some(t)) => {
                return Err(CliError::Config(format!(
                    "{}single-mask uses one packet pair, t_pk={t}",
                    self.at("t_pk")
                )))
            }
        };
        Ok(ConfigTemplate {
            n: self.n,
            t_pk,
            m: self.m,
            m_x: self.m_x,
            seed: self.seed,
            relaxed: self.protocol == Protocol::SingleMask,
        })
    }

    /// Resolves defaults and validates, naming the offending line.
    pub fn resolve(self) -> Result<Settings, CliError> {
        if self.batch_size == 0 {
            return Err(CliError::Config(format!(
                "{}batch_size must be positive",
                self.at("batch_size")
            )));
        }
        if self.trials == 0 {
            return Err(CliError::Config(format!(
                "{}trials must be positive",
                self.at("trials")
            )));
        }
        let template = self.template()?;
        if self.protocol == Protocol::SingleMask && self.n < 2 {
            return Err(CliError::Config(format!(
                "{}n={}: minimum number of parties are 2",
                self.at("n"),
                self.n
            )));
        }
        let config = template.resolve().map_err(|e| {
            let key = match &e {
                ConfigError::TooFewParties { .. } => "n",
                ConfigError::TooFewPackets { .. } => "t_pk",
                ConfigError::Zero { name } => name,
                ConfigError::TooFewAnonymizers { .. }
                | ConfigError::NotEnoughForDistinct { .. }
                | ConfigError::InsufficientCapacity { .. } => {
                    if self.lines.contains_key("m") {
                        "m"
                    } else {
                        "m_x"
                    }
                }
                ConfigError::Invalid(_) => "",
            };
            let prefix = self.at(key);
            match CliError::from(e) {
                CliError::Config(msg) => CliError::Config(format!("{prefix}{msg}")),
                CliError::Infeasible(msg) => CliError::Infeasible(format!("{prefix}{msg}")),
                other => other,
            }
        })?;
        if let Some(l) = self.colluders {
            if l > config.m() {
                return Err(CliError::Config(format!(
                    "{}colluders={l} exceeds the number of anonymizers m={}",
                    self.at("colluders"),
                    config.m()
                )));
            }
        }
        Ok(Settings { file: self, config })
    }
}

/// Parses and resolves parameter text.
pub fn parse_config(text: &str) -> Result<Settings, CliError> {
    ConfigFile::parse(text)?.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_two_keys() {
        let s = parse_config("n=10\nt_pk=3").unwrap();
        let c = &s.config;
        assert_eq!((c.n(), c.t_pk(), c.m_x(), c.m()), (10, 3, 6, 10));
        assert_eq!(s.file.batch_size, 500);
        assert_eq!(s.file.protocol, Protocol::Drss);
    }

    #[test]
    fn empty_file_gives_table_defaults() {
        let c = parse_config("# nothing\n\n").unwrap().config;
        assert_eq!((c.n(), c.t_pk(), c.m()), (10, 3, 10));
    }

    #[test]
    fn minimums_rejected_with_line() {
        let e = parse_config("n=1").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("minimum number of parties are 2"), "{e}");
        assert!(e.to_string().contains("line 1"), "{e}");
        let e = parse_config("# x\nt_pk=2").unwrap_err();
        assert!(e.to_string().contains("minimum 3"), "{e}");
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn malformed_and_unknown() {
        let e = parse_config("n=3\nbogus").unwrap_err();
        assert!(e.to_string().starts_with("line 2: expected key=value"), "{e}");
        let e = parse_config("n=3\ncolour=blue").unwrap_err();
        assert!(e.to_string().contains("line 2: unknown key \"colour\""), "{e}");
        let e = parse_config("n=three").unwrap_err();
        assert!(e.to_string().contains("line 1: invalid value"), "{e}");
        let e = parse_config("n=3\nn=4").unwrap_err();
        assert!(e.to_string().contains("duplicate"), "{e}");
    }

    #[test]
    fn infeasible_is_exit_3() {
        let e = parse_config("n=10\nt_pk=3\nm=6\nm_x=6").unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn comments_and_whitespace() {
        let s = parse_config("  n = 4 # parties\nseed=99\nprotocol = drss\ncolluders=3\ntrials=7").unwrap();
        assert_eq!(s.config.n(), 4);
        assert_eq!(s.config.seed(), 99);
        assert_eq!(s.file.colluders, Some(3));
        assert_eq!(s.file.trials, 7);
    }

    #[test]
    fn single_mask_protocol() {
        let s = parse_config("protocol=single-mask\nn=4\nm=4\nm_x=2").unwrap();
        assert_eq!(s.config.t_pk(), 1);
        assert!(parse_config("protocol=single-mask\nt_pk=3").is_err());
        assert!(parse_config("protocol=onion").is_err());
    }

    #[test]
    fn colluders_bounded_by_m() {
        assert!(parse_config("n=2\ncolluders=7").is_err());
    }
}

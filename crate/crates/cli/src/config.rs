//! Experiment configuration: a `key = value` file overlaid by command-line
//! flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hcschema::attacks::GuessMode;
use hcschema::game::DEFAULT_MAX_PAIRS;
use hcschema::SchemaKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Keys accepted in a config file, matching the long flag names.
pub const KEYS: &[&str] = &[
    "schema",
    "length",
    "alphabet-size",
    "attacker",
    "rounds",
    "seed",
    "guess-mode",
    "node-budget",
    "set-budget",
    "max-pairs",
    "max-aborts",
    "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackerKind {
    Oracle,
    Ds3,
    StmlDfs,
    StmlEnum,
    /// Test double that knows the key.
    Cheat,
}

impl AttackerKind {
    pub fn default_for(schema: SchemaKind) -> Self {
        match schema {
            SchemaKind::Ds3 => AttackerKind::Ds3,
            SchemaKind::Stml => AttackerKind::StmlEnum,
        }
    }

    /// Whether the attacker can play against `schema` at all.
    pub fn supports(self, schema: SchemaKind) -> bool {
        match self {
            AttackerKind::Oracle | AttackerKind::Cheat => true,
            AttackerKind::Ds3 => schema == SchemaKind::Ds3,
            AttackerKind::StmlDfs | AttackerKind::StmlEnum => schema == SchemaKind::Stml,
        }
    }
}

impl fmt::Display for AttackerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackerKind::Oracle => "oracle",
            AttackerKind::Ds3 => "ds3",
            AttackerKind::StmlDfs => "stml-dfs",
            AttackerKind::StmlEnum => "stml-enum",
            AttackerKind::Cheat => "cheat",
        })
    }
}

impl FromStr for AttackerKind {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(AttackerKind::Oracle),
            "ds3" => Ok(AttackerKind::Ds3),
            "stml-dfs" => Ok(AttackerKind::StmlDfs),
            "stml-enum" => Ok(AttackerKind::StmlEnum),
            "cheat" => Ok(AttackerKind::Cheat),
            other => Err(CliError::Config(format!("unknown attacker '{other}'"))),
        }
    }
}

/// Everything that determines a `qestimate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: SchemaKind,
    pub length: usize,
    pub alphabet_size: usize,
    pub attacker: AttackerKind,
    pub rounds: u64,
    pub seed: u64,
    pub guess_mode: GuessMode,
    pub node_budget: u64,
    pub set_budget: u64,
    pub max_pairs: u32,
    /// Exit with status 3 when more rounds than this abort on a budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_aborts: Option<u64>,
    /// Output location; not part of the config hash.
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub const DEFAULT_LENGTH: usize = 10;
pub const DEFAULT_ALPHABET: usize = 26;
pub const DEFAULT_ROUNDS: u64 = 100;
pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;
pub const DEFAULT_SET_BUDGET: u64 = 80_000_000;

/// Raw key/value settings before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig(pub BTreeMap<String, String>);

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim().to_string();
            if !KEYS.contains(&k.as_str()) {
                return Err(CliError::Config(format!("line {}: unknown key '{k}'", n + 1)));
            }
            map.insert(k, v.trim().to_string());
        }
        Ok(RawConfig(map))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        RawConfig::parse(&text)
    }

    /// Sets `key` when `value` is present; flags call this after the file is
    /// loaded, so they win.
    pub fn set<T: ToString>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.0.insert(key.to_string(), v.to_string());
        }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        self.0
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Config(format!("{key}: {e}"))))
            .transpose()
    }

    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let schema: SchemaKind =
            self.get("schema")?.ok_or_else(|| CliError::Config("schema is required".into()))?;
        let seed: u64 = self.get("seed")?.ok_or_else(|| CliError::Config("seed is required".into()))?;
        let attacker = self.get("attacker")?.unwrap_or(AttackerKind::default_for(schema));
        if !attacker.supports(schema) {
            return Err(CliError::Config(format!("attacker {attacker} does not play {schema}")));
        }
        let config = ExperimentConfig {
            schema,
            length: self.get("length")?.unwrap_or(DEFAULT_LENGTH),
            alphabet_size: self.get("alphabet-size")?.unwrap_or(DEFAULT_ALPHABET),
            attacker,
            rounds: self.get("rounds")?.unwrap_or(DEFAULT_ROUNDS),
            seed,
            guess_mode: self.get("guess-mode")?.unwrap_or_default(),
            node_budget: self.get("node-budget")?.unwrap_or(DEFAULT_NODE_BUDGET),
            set_budget: self.get("set-budget")?.unwrap_or(DEFAULT_SET_BUDGET),
            max_pairs: self.get("max-pairs")?.unwrap_or(DEFAULT_MAX_PAIRS),
            max_aborts: self.get("max-aborts")?,
            out: self.get("out")?,
        };
        config.validate()?;
        Ok(config)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.length == 0 {
            return Err(CliError::Config("length must be at least 1".into()));
        }
        if !(1..=26).contains(&self.alphabet_size) {
            return Err(CliError::Config("alphabet-size must be between 1 and 26".into()));
        }
        if self.rounds == 0 {
            return Err(CliError::Config("rounds must be at least 1".into()));
        }
        if self.max_pairs == 0 {
            return Err(CliError::Config("max-pairs must be at least 1".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

//! Adversaries for the response-guessing game.
//!
//! Every adversary observes challenge-response pairs and, given a fresh
//! challenge, proposes at most [`MAX_GUESSES`] distinct responses.
//!
//! * [`OracleAdversary`]: exact enumeration of the whole key space (small
//!   alphabets only).
//! * [`Ds3Attacker`]: per-permutation constraint solving for DS3.
//! * [`StmlDfsAttacker`]: depth-first search over which positions of each
//!   STML challenge produced output, with constraint propagation.
//! * [`StmlEnumAttacker`]: enumeration of partial letter maps for STML.

mod ds3;
mod oracle;
mod stml;
mod stml_dfs;
mod stml_enum;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{Response, SchemaError};

pub use ds3::{ds3_derive_constraints, Ds3Attacker, Ds3Config};
pub use oracle::{OracleAdversary, DEFAULT_ORACLE_BOUND};
pub use stml::{stml_constraints_for_subset, stml_subsets, SubsetChoice};
pub use stml_dfs::{DfsConfig, StmlDfsAttacker};
pub use stml_enum::{EnumConfig, StmlEnumAttacker};

use crate::schema::Challenge;

/// Guesses allowed per challenge.
pub const MAX_GUESSES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttackError {
    #[error("key space of {key_space} exceeds the brute-force bound {bound}; use a bounded attacker")]
    RefuseToRun { key_space: u128, bound: u128 },
    #[error("{what} budget of {limit} exhausted")]
    BudgetExhausted { what: &'static str, limit: u64 },
    #[error("invalid pair: {0}")]
    InvalidPair(String),
    #[error("invalid choice: {0}")]
    InvalidChoice(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

/// How candidate responses are ordered into guesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuessMode {
    /// Most frequent response among consistent keys first, ties broken by
    /// lexicographic order.
    #[default]
    Frequency,
    /// Responses in the order the attacker's search meets consistent keys.
    FirstConsistent,
    /// A single guess: the response of one consistent key drawn at random.
    SingleSolution,
}

impl fmt::Display for GuessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GuessMode::Frequency => "frequency",
            GuessMode::FirstConsistent => "first-consistent",
            GuessMode::SingleSolution => "single-solution",
        })
    }
}

impl FromStr for GuessMode {
    type Err = AttackError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "frequency" => Ok(GuessMode::Frequency),
            "first-consistent" => Ok(GuessMode::FirstConsistent),
            "single-solution" => Ok(GuessMode::SingleSolution),
            other => Err(AttackError::InvalidParameter(format!("unknown guess mode '{other}'"))),
        }
    }
}

/// Controls how an attacker turns its consistent set into guesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessConfig {
    pub mode: GuessMode,
    /// Enumerate completions exactly while their count stays at or below this.
    pub exact_limit: u64,
    /// Number of sampled keys otherwise.
    pub samples: u64,
}

impl Default for GuessConfig {
    fn default() -> Self {
        GuessConfig { mode: GuessMode::Frequency, exact_limit: 100_000, samples: 10_000 }
    }
}

/// Per-adversary counters reported with each round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub pairs_observed: u32,
    pub guess_calls: u32,
    /// Search-tree nodes created (DFS attacker) or candidate extensions
    /// examined (enumerating attackers).
    pub nodes_expanded: u64,
    /// `prune_depths[d]` counts branches eliminated after assuming `d` pairs.
    pub prune_depths: Vec<u64>,
    /// Largest consistent-candidate set held at any point.
    pub peak_candidates: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl Telemetry {
    pub fn record_prune(&mut self, depth: usize) {
        if self.prune_depths.len() <= depth {
            self.prune_depths.resize(depth + 1, 0);
        }
        self.prune_depths[depth] += 1;
    }

    pub fn merge(&mut self, other: &Telemetry) {
        self.pairs_observed += other.pairs_observed;
        self.guess_calls += other.guess_calls;
        self.nodes_expanded += other.nodes_expanded;
        self.peak_candidates = self.peak_candidates.max(other.peak_candidates);
        self.wall_time += other.wall_time;
        for (d, &n) in other.prune_depths.iter().enumerate() {
            if n > 0 {
                self.record_prune(d);
                self.prune_depths[d] += n - 1;
            }
        }
    }

    /// Fraction of prune events at depth `>= depth`; `None` without events.
    pub fn prune_fraction_at_least(&self, depth: usize) -> Option<f64> {
        let total: u64 = self.prune_depths.iter().sum();
        if total == 0 {
            return None;
        }
        let deep: u64 = self.prune_depths.iter().skip(depth).sum();
        Some(deep as f64 / total as f64)
    }
}

/// The adversary side of the guessing game.
pub trait Adversary: Send {
    fn name(&self) -> &'static str;

    /// Learn a revealed challenge-response pair.
    fn observe(&mut self, challenge: &Challenge, response: &Response) -> Result<(), AttackError>;

    /// At most [`MAX_GUESSES`] distinct responses for `challenge`.
    fn guess(&mut self, challenge: &Challenge) -> Result<Vec<Response>, AttackError>;

    fn telemetry(&self) -> Telemetry;
}

/// Orders responses by descending multiplicity, then lexicographically, and
/// keeps the first ten.
pub fn guess_ranking<I>(counts: I) -> Vec<Response>
where
    I: IntoIterator<Item = (Response, u64)>,
{
    let mut all: Vec<(Response, u64)> = counts.into_iter().filter(|(_, n)| *n > 0).collect();
    all.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all.dedup_by(|a, b| a.0 == b.0);
    all.into_iter().take(MAX_GUESSES).map(|(r, _)| r).collect()
}

/// Accumulates candidate responses under either guess mode.
pub(crate) struct GuessCollector {
    mode: GuessMode,
    counts: HashMap<Vec<u8>, u64>,
    order: Vec<Vec<u8>>,
}

impl GuessCollector {
    pub(crate) fn new(mode: GuessMode) -> Self {
        GuessCollector { mode, counts: HashMap::new(), order: Vec::new() }
    }

    pub(crate) fn add(&mut self, digits: &[u8], weight: u64) {
        match self.mode {
            GuessMode::Frequency => {
                if let Some(n) = self.counts.get_mut(digits) {
                    *n += weight;
                } else {
                    self.counts.insert(digits.to_vec(), weight);
                }
            }
            GuessMode::FirstConsistent | GuessMode::SingleSolution => {
                if !self.is_full() && !self.order.iter().any(|r| r == digits) {
                    self.order.push(digits.to_vec());
                }
            }
        }
    }

    /// Ordered collection stops once its quota of responses is known.
    pub(crate) fn is_full(&self) -> bool {
        match self.mode {
            GuessMode::Frequency => false,
            GuessMode::FirstConsistent => self.order.len() >= MAX_GUESSES,
            GuessMode::SingleSolution => !self.order.is_empty(),
        }
    }

    pub(crate) fn finish(self) -> Vec<Response> {
        match self.mode {
            GuessMode::Frequency => guess_ranking(
                self.counts.into_iter().map(|(d, n)| (Response::new(d).expect("digits"), n)),
            ),
            GuessMode::FirstConsistent | GuessMode::SingleSolution => {
                self.order.into_iter().map(|d| Response::new(d).expect("digits")).collect()
            }
        }
    }
}

/// A test double that knows the secret and always answers correctly.
pub struct CheatingAdversary {
    key: crate::schema::SecretKey,
    telemetry: Telemetry,
}

impl CheatingAdversary {
    pub fn new(key: crate::schema::SecretKey) -> Self {
        CheatingAdversary { key, telemetry: Telemetry::default() }
    }
}

impl Adversary for CheatingAdversary {
    fn name(&self) -> &'static str {
        "cheat"
    }

    fn observe(&mut self, _: &Challenge, _: &Response) -> Result<(), AttackError> {
        self.telemetry.pairs_observed += 1;
        Ok(())
    }

    fn guess(&mut self, challenge: &Challenge) -> Result<Vec<Response>, AttackError> {
        self.telemetry.guess_calls += 1;
        Ok(vec![self.key.respond(challenge)?])
    }

    fn telemetry(&self) -> Telemetry {
        self.telemetry.clone()
    }
}

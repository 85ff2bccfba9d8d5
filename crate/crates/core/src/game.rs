//! The judge and the response-guessing game.
//!
//! A round samples a fresh key, then repeatedly draws a uniform challenge and
//! asks the adversary for up to ten guesses. A correct guess ends the round;
//! otherwise the pair is revealed and play continues. `pairs_seen` counts
//! every challenge issued, including the one guessed correctly.

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{Adversary, AttackError, Telemetry, MAX_GUESSES};
use crate::schema::{SchemaId, SecretKey};

/// Rounds that reach this many pairs are aborted by default.
pub const DEFAULT_MAX_PAIRS: u32 = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundResult {
    pub round: u64,
    pub seed: u64,
    pub pairs_seen: u32,
    pub won: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
    /// The abort came from an attacker running out of budget.
    #[serde(default)]
    pub budget_exhausted: bool,
    pub telemetry: Telemetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QEstimate {
    /// Mean `pairs_seen` over won rounds; absent when every round aborted.
    pub mean: Option<f64>,
    pub std_err: Option<f64>,
    pub rounds: u64,
    pub aborts: u64,
    /// Aborts caused by an exhausted attacker budget.
    #[serde(default)]
    pub budget_aborts: u64,
    pub max_pairs: u32,
}

impl QEstimate {
    /// Folds round results; aborted rounds are counted but not averaged.
    pub fn from_rounds(results: &[RoundResult]) -> QEstimate {
        let won: Vec<f64> = results.iter().filter(|r| r.won).map(|r| r.pairs_seen as f64).collect();
        let n = won.len() as f64;
        let (mean, std_err) = if won.is_empty() {
            (None, None)
        } else {
            let mean = won.iter().sum::<f64>() / n;
            let se = if won.len() < 2 {
                0.0
            } else {
                let var = won.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            };
            (Some(mean), Some(se))
        };
        QEstimate {
            mean,
            std_err,
            rounds: results.len() as u64,
            aborts: results.iter().filter(|r| !r.won).count() as u64,
            max_pairs: results.iter().filter(|r| r.won).map(|r| r.pairs_seen).max().unwrap_or(0),
            budget_aborts: results.iter().filter(|r| r.budget_exhausted).count() as u64,
        }
    }
}

/// Builds a fresh adversary for one round from the schema, the round's key
/// (used only by test doubles), and a seed.
pub type AdversaryFactory =
    dyn Fn(&SchemaId, &SecretKey, u64) -> Result<Box<dyn Adversary>, AttackError> + Sync;

/// Plays one round against a fresh adversary.
pub fn play_round(
    schema: &SchemaId,
    key: &SecretKey,
    adversary: &mut dyn Adversary,
    rng: &mut dyn RngCore,
    max_pairs: u32,
) -> RoundResult {
    let start = Instant::now();
    let mut pairs_seen = 0;
    let mut abort_reason = None;
    let mut budget_exhausted = false;
    let mut won = false;
    while pairs_seen < max_pairs {
        let challenge = schema.sample_challenge(rng);
        let truth = key.respond(&challenge).expect("challenge drawn from the key's alphabet");
        pairs_seen += 1;
        let guesses = match adversary.guess(&challenge) {
            Ok(g) => g,
            Err(e) => {
                budget_exhausted = matches!(e, AttackError::BudgetExhausted { .. });
                abort_reason = Some(e.to_string());
                break;
            }
        };
        debug_assert!(guesses.len() <= MAX_GUESSES);
        if guesses.iter().take(MAX_GUESSES).any(|g| *g == truth) {
            won = true;
            break;
        }
        if let Err(e) = adversary.observe(&challenge, &truth) {
            budget_exhausted = matches!(e, AttackError::BudgetExhausted { .. });
            abort_reason = Some(e.to_string());
            break;
        }
    }
    if !won && abort_reason.is_none() {
        abort_reason = Some(format!("no win within {max_pairs} pairs"));
    }
    let mut telemetry = adversary.telemetry();
    telemetry.wall_time = start.elapsed();
    RoundResult { round: 0, seed: 0, pairs_seen, won, abort_reason, budget_exhausted, telemetry }
}

/// Seed of round `round` under `master`.
pub fn round_seed(master: u64, round: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(round);
    rng.next_u64()
}

/// Plays round `round`: the key and challenges come from the round seed, the
/// adversary gets an independent stream.
pub fn run_round(
    schema: &SchemaId,
    factory: &AdversaryFactory,
    master: u64,
    round: u64,
    max_pairs: u32,
) -> Result<RoundResult, AttackError> {
    let seed = round_seed(master, round);
    let mut judge = ChaCha8Rng::seed_from_u64(seed);
    let key = schema.sample_key(&mut judge);
    let mut side = ChaCha8Rng::seed_from_u64(seed);
    side.set_stream(1);
    let mut adversary = factory(schema, &key, side.next_u64())?;
    let mut result = play_round(schema, &key, adversary.as_mut(), &mut judge, max_pairs);
    result.round = round;
    result.seed = seed;
    Ok(result)
}

/// Runs `rounds` independent rounds in parallel and aggregates them. Results
/// are in round order and do not depend on the worker count.
pub fn estimate_q(
    schema: &SchemaId,
    factory: &AdversaryFactory,
    rounds: u64,
    master: u64,
    max_pairs: u32,
) -> Result<(QEstimate, Vec<RoundResult>), AttackError> {
    if rounds == 0 {
        return Err(AttackError::InvalidParameter("rounds must be at least 1".into()));
    }
    let results: Vec<RoundResult> = (0..rounds)
        .into_par_iter()
        .map(|r| run_round(schema, factory, master, r, max_pairs))
        .collect::<Result<_, _>>()?;
    Ok((QEstimate::from_rounds(&results), results))
}

//! The commands behind each subcommand, returning text rather than printing.

use std::fmt::Write as _;
use std::time::Instant;

use hcschema::analysis::{
    cost_of_profile, ds3_challenge_profile, ds3_letter_profile, expansion_csv, expansion_factor_exact,
    k_upper_bound, second_pass_min_cost, stml_challenge_profile, stml_letter_profile, two_pass_budget, OpCosts,
    CHALLENGE_BUDGET_SECONDS, LETTER_BUDGET_SECONDS,
};
use hcschema::attacks::{
    Adversary, AttackError, CheatingAdversary, DfsConfig, Ds3Attacker, Ds3Config, EnumConfig, GuessConfig,
    GuessMode, OracleAdversary, StmlDfsAttacker, StmlEnumAttacker, DEFAULT_ORACLE_BOUND,
};
use hcschema::game::{estimate_q, AdversaryFactory, QEstimate, RoundResult, DEFAULT_MAX_PAIRS};
use hcschema::{Alphabet, Challenge, Ds3Key, SchemaId, SchemaKind, SecretKey, StmlKey};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{AttackerKind, ExperimentConfig, DEFAULT_NODE_BUDGET, DEFAULT_SET_BUDGET};
use crate::record::ResultRecord;
use crate::CliError;

pub fn schema_of(config: &ExperimentConfig) -> Result<SchemaId, CliError> {
    Ok(SchemaId::new(config.schema, Alphabet::new(config.alphabet_size)?, config.length)?)
}

/// A factory building a fresh attacker of the configured kind per round.
pub fn factory(config: &ExperimentConfig) -> Box<AdversaryFactory> {
    let guess = GuessConfig { mode: config.guess_mode, ..GuessConfig::default() };
    let (attacker, node_budget, set_budget) = (config.attacker, config.node_budget, config.set_budget);
    Box::new(move |schema: &SchemaId, key: &SecretKey, seed: u64| -> Result<Box<dyn Adversary>, AttackError> {
        Ok(match attacker {
            AttackerKind::Oracle => {
                Box::new(OracleAdversary::new(*schema, DEFAULT_ORACLE_BOUND, guess.mode)?.with_seed(seed))
            }
            AttackerKind::Ds3 => Box::new(Ds3Attacker::new(schema.alphabet, Ds3Config { guess, ..Ds3Config::default() }, seed)),
            AttackerKind::StmlDfs => Box::new(StmlDfsAttacker::new(
                schema.alphabet,
                DfsConfig { guess, node_budget, ..DfsConfig::default() },
                seed,
            )),
            AttackerKind::StmlEnum => {
                Box::new(StmlEnumAttacker::new(schema.alphabet, EnumConfig { guess, set_budget }, seed))
            }
            AttackerKind::Cheat => Box::new(CheatingAdversary::new(key.clone())),
        })
    })
}

/// Runs the game and folds the rounds into a record. Wall-clock time is
/// recorded only when `timing` is set.
pub fn qestimate(config: &ExperimentConfig, timing: bool) -> Result<(ResultRecord, Vec<RoundResult>), CliError> {
    let schema = schema_of(config)?;
    let start = Instant::now();
    let (_, rounds) = estimate_q(&schema, factory(config).as_ref(), config.rounds, config.seed, config.max_pairs)?;
    let wall = timing.then(|| start.elapsed().as_secs_f64());
    Ok((ResultRecord::new(config, &rounds, wall), rounds))
}

/// Fails with exit status 3 when too many rounds ran out of budget.
pub fn check_aborts(config: &ExperimentConfig, estimate: &QEstimate) -> Result<(), CliError> {
    match config.max_aborts {
        Some(limit) if estimate.budget_aborts > limit => {
            Err(CliError::TooManyAborts { aborts: estimate.budget_aborts, limit })
        }
        _ => Ok(()),
    }
}

/// Where the key for `respond` comes from.
#[derive(Debug, Clone)]
pub enum KeySource {
    /// `f` digits, one per letter, and for DS3 the ten digits of `g`.
    Digits { f: String, g: Option<String> },
    /// A key sampled from a seed.
    Seed(u64),
    /// A file with `f = ...` and optionally `g = ...` lines.
    File(String),
}

fn parse_digits(what: &str, s: &str) -> Result<Vec<u8>, CliError> {
    s.trim()
        .chars()
        .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(|| CliError::Config(format!("{what}: '{c}' is not a digit"))))
        .collect()
}

pub fn load_key(kind: SchemaKind, alphabet: Alphabet, source: &KeySource) -> Result<SecretKey, CliError> {
    let (f, g) = match source {
        KeySource::Seed(seed) => {
            let schema = SchemaId::new(kind, alphabet, 1)?;
            return Ok(schema.sample_key(&mut ChaCha8Rng::seed_from_u64(*seed)));
        }
        KeySource::Digits { f, g } => (f.clone(), g.clone()),
        KeySource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("key file {path}: {e}")))?;
            let mut f = None;
            let mut g = None;
            for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
                match line.split_once('=').map(|(k, v)| (k.trim(), v.trim().to_string())) {
                    Some(("f", v)) => f = Some(v),
                    Some(("g", v)) => g = Some(v),
                    _ => return Err(CliError::Config(format!("key file {path}: unexpected line '{line}'"))),
                }
            }
            (f.ok_or_else(|| CliError::Config(format!("key file {path}: no f line")))?, g)
        }
    };
    let f = parse_digits("f", &f)?;
    if f.len() != alphabet.size() {
        return Err(CliError::Config(format!("f has {} digits, alphabet has {} letters", f.len(), alphabet.size())));
    }
    Ok(match kind {
        SchemaKind::Stml => SecretKey::Stml(StmlKey::new(f)?),
        SchemaKind::Ds3 => {
            let g = parse_digits("g", g.as_deref().ok_or_else(|| CliError::Config("DS3 needs g".into()))?)?;
            let g: [u8; 10] = g.try_into().map_err(|_| CliError::Config("g must have ten digits".into()))?;
            SecretKey::Ds3(Ds3Key::new(f, g)?)
        }
    })
}

pub fn respond(kind: SchemaKind, alphabet: Alphabet, source: &KeySource, challenge: &str) -> Result<String, CliError> {
    let key = load_key(kind, alphabet, source)?;
    let c = Challenge::parse(&alphabet, challenge)?;
    Ok(key.respond(&c)?.to_string())
}

/// Settings for reproducing the schema-quality table.
#[derive(Debug, Clone)]
pub struct Table51Options {
    pub rounds: u64,
    /// Rounds for the `L = 10` row; zero leaves it out.
    pub long_rounds: u64,
    pub seed: u64,
    pub attacker: AttackerKind,
    pub long_attacker: AttackerKind,
    pub guess_mode: GuessMode,
    pub node_budget: u64,
    pub set_budget: u64,
}

impl Default for Table51Options {
    fn default() -> Self {
        Table51Options {
            rounds: 200,
            long_rounds: 0,
            seed: 1,
            attacker: AttackerKind::StmlEnum,
            long_attacker: AttackerKind::StmlDfs,
            guess_mode: GuessMode::SingleSolution,
            node_budget: DEFAULT_NODE_BUDGET,
            set_budget: DEFAULT_SET_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table51Row {
    pub length: usize,
    pub expansion: f64,
    pub ceil_k: u64,
    /// `None` for rows that were not run.
    pub estimate: Option<QEstimate>,
}

pub const TABLE51_LENGTHS: [usize; 5] = [3, 4, 5, 10, 20];

pub fn table51(opts: &Table51Options) -> Result<Vec<Table51Row>, CliError> {
    let mut rows = Vec::new();
    for l in TABLE51_LENGTHS {
        let (rounds, attacker) = match l {
            3..=5 => (opts.rounds, opts.attacker),
            10 => (opts.long_rounds, opts.long_attacker),
            _ => (0, opts.attacker),
        };
        let estimate = if rounds == 0 {
            None
        } else {
            let config = ExperimentConfig {
                schema: SchemaKind::Stml,
                length: l,
                alphabet_size: 26,
                attacker,
                rounds,
                seed: opts.seed,
                guess_mode: opts.guess_mode,
                node_budget: opts.node_budget,
                set_budget: opts.set_budget,
                max_pairs: DEFAULT_MAX_PAIRS,
                max_aborts: None,
                out: None,
            };
            Some(qestimate(&config, false)?.0.estimate)
        };
        rows.push(Table51Row {
            length: l,
            expansion: expansion_factor_exact(l).value,
            ceil_k: k_upper_bound(26, l).1,
            estimate,
        });
    }
    Ok(rows)
}

/// `F_L` with at most two decimals, trailing zeros dropped.
pub fn short_decimal(x: f64) -> String {
    let s = format!("{x:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn q_cell(row: &Table51Row) -> String {
    match (&row.estimate, row.length) {
        (Some(e), _) => e.mean.map_or_else(|| "all aborted".into(), |m| format!("{m:.2}")),
        (None, 20) => "(?)".into(),
        (None, _) => "not run".into(),
    }
}

pub fn table51_text(rows: &[Table51Row]) -> String {
    let mut s = format!("{:<4}{:>12}{:>14}{:>8}{:>11}{:>8}{:>8}\n", "L", "F_L", "Q", "ceil k", "max pairs", "rounds", "aborts");
    for r in rows {
        let (pm, maxp, rounds, aborts) = match &r.estimate {
            Some(e) => (
                e.std_err.map_or(String::new(), |se| format!(" ± {se:.2}")),
                e.max_pairs.to_string(),
                e.rounds.to_string(),
                e.aborts.to_string(),
            ),
            None => (String::new(), "-".into(), "-".into(), "-".into()),
        };
        let _ = writeln!(
            s,
            "{:<4}{:>12}{:>14}{:>8}{:>11}{:>8}{:>8}",
            r.length,
            short_decimal(r.expansion),
            format!("{}{pm}", q_cell(r)),
            r.ceil_k,
            maxp,
            rounds,
            aborts
        );
    }
    s
}

pub fn table51_csv(rows: &[Table51Row]) -> String {
    let mut s = String::from("L,F_L,Q,std_err,ceil_k,max_pairs,rounds,aborts\n");
    for r in rows {
        let e = r.estimate.as_ref();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.length,
            r.expansion,
            match e.and_then(|e| e.mean) {
                Some(m) => m.to_string(),
                None => q_cell(r),
            },
            e.and_then(|e| e.std_err).map_or(String::new(), |x| x.to_string()),
            r.ceil_k,
            e.map_or(String::new(), |e| e.max_pairs.to_string()),
            e.map_or(String::new(), |e| e.rounds.to_string()),
            e.map_or(String::new(), |e| e.aborts.to_string()),
        );
    }
    s
}

pub fn expansion(from: usize, to: usize) -> Result<String, CliError> {
    if from > to {
        return Err(CliError::Config(format!("empty range {from}..={to}")));
    }
    Ok(expansion_csv(from..=to))
}

/// Per-letter and per-challenge human time for a schema, with the two-pass
/// budget arithmetic for the same length.
pub fn cost_report(kind: SchemaKind, length: usize) -> String {
    let costs = OpCosts::default();
    let (letter, challenge) = match kind {
        SchemaKind::Ds3 => (ds3_letter_profile(), ds3_challenge_profile(length)),
        SchemaKind::Stml => (stml_letter_profile(), stml_challenge_profile(length)),
    };
    let per_letter = cost_of_profile(&letter, &costs);
    let total = cost_of_profile(&challenge, &costs);
    let flag = |over: bool| if over { "OVER" } else { "ok" };
    let mut s = String::new();
    let _ = writeln!(s, "schema {kind}, L = {length}");
    for (op, n) in &letter.ops {
        let _ = writeln!(s, "  {op:<18}x{n:<6} {:.3} s", n * costs.cost(*op));
    }
    let _ = writeln!(
        s,
        "per letter     {per_letter:.3} s  (bound {LETTER_BUDGET_SECONDS} s: {})",
        flag(per_letter > LETTER_BUDGET_SECONDS)
    );
    let _ = writeln!(
        s,
        "per challenge  {total:.3} s  (bound {CHALLENGE_BUDGET_SECONDS} s: {})",
        flag(total > CHALLENGE_BUDGET_SECONDS)
    );
    let half = second_pass_min_cost(length, length / 2);
    let _ = writeln!(s, "second pass with n = L/2 outputs: at least {:.3} s", half.total);
    let l = length as f64;
    for (n, extra) in [(l / 2.0, false), (l / 10.0, true)] {
        let b = two_pass_budget(length, n, 0.0, extra);
        let _ = writeln!(
            s,
            "two-pass first pass with n = {n}{}: at most {:.3} letters",
            if extra { " and an extra classify" } else { "" },
            b.slack
        );
    }
    s
}

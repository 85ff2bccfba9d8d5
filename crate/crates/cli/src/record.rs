//! Result records and their line-delimited file format.
//!
//! A results file holds one `summary` line followed by one `round` line per
//! round, each a JSON object tagged by `kind`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use hcschema::attacks::Telemetry;
use hcschema::game::{QEstimate, RoundResult};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const TOOL: &str = "hcschema";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Telemetry folded over every round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySummary {
    pub pairs_observed: u64,
    pub guess_calls: u64,
    pub nodes_expanded: u64,
    pub peak_candidates: u64,
    pub prune_depths: Vec<u64>,
    /// Share of prune events at depth 4 or more.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune_fraction_depth4: Option<f64>,
}

impl TelemetrySummary {
    pub fn from_rounds(rounds: &[RoundResult]) -> Self {
        let mut merged = Telemetry::default();
        let mut pairs = 0u64;
        let mut calls = 0u64;
        for r in rounds {
            pairs += r.telemetry.pairs_observed as u64;
            calls += r.telemetry.guess_calls as u64;
            merged.merge(&r.telemetry);
        }
        TelemetrySummary {
            pairs_observed: pairs,
            guess_calls: calls,
            nodes_expanded: merged.nodes_expanded,
            peak_candidates: merged.peak_candidates,
            prune_fraction_depth4: merged.prune_fraction_at_least(4),
            prune_depths: merged.prune_depths,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub estimate: QEstimate,
    pub telemetry: TelemetrySummary,
    /// Present only when timing was requested, so default output stays
    /// byte-identical across runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl ResultRecord {
    pub fn new(config: &ExperimentConfig, rounds: &[RoundResult], wall_clock_seconds: Option<f64>) -> Self {
        ResultRecord {
            tool: TOOL.into(),
            version: VERSION.into(),
            config_hash: config.hash(),
            config: config.clone(),
            estimate: QEstimate::from_rounds(rounds),
            telemetry: TelemetrySummary::from_rounds(rounds),
            wall_clock_seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Line {
    Summary(ResultRecord),
    Round(RoundResult),
}

pub fn write_results<W: Write>(out: &mut W, record: &ResultRecord, rounds: &[RoundResult]) -> Result<(), CliError> {
    let mut put = |line: &Line| -> Result<(), CliError> {
        serde_json::to_writer(&mut *out, line).map_err(|e| CliError::Io(e.to_string()))?;
        out.write_all(b"\n").map_err(|e| CliError::Io(e.to_string()))
    };
    put(&Line::Summary(record.clone()))?;
    for r in rounds {
        put(&Line::Round(r.clone()))?;
    }
    Ok(())
}

/// Reads a results file back; the summary is rebuilt from the round lines and
/// must agree with the stored one.
pub fn read_results<R: BufRead>(input: R) -> Result<(ResultRecord, Vec<RoundResult>), CliError> {
    let mut summary = None;
    let mut rounds = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| CliError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Line>(&line).map_err(|e| CliError::Io(format!("line {}: {e}", n + 1)))? {
            Line::Summary(s) if summary.is_none() => summary = Some(s),
            Line::Summary(_) => return Err(CliError::Io(format!("line {}: second summary", n + 1))),
            Line::Round(r) => rounds.push(r),
        }
    }
    let summary = summary.ok_or_else(|| CliError::Io("no summary line".into()))?;
    let rebuilt = ResultRecord::new(&summary.config, &rounds, summary.wall_clock_seconds);
    if rebuilt.estimate != summary.estimate || rebuilt.config_hash != summary.config_hash {
        return Err(CliError::Io("summary does not match its rounds".into()));
    }
    Ok((summary, rounds))
}

fn fmt_opt(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

/// Human-readable table for one record.
pub fn render_table(r: &ResultRecord) -> String {
    let c = &r.config;
    let e = &r.estimate;
    let mut s = String::new();
    let rows: Vec<(&str, String)> = vec![
        ("schema", c.schema.to_string()),
        ("length", c.length.to_string()),
        ("alphabet", c.alphabet_size.to_string()),
        ("attacker", format!("{} ({})", c.attacker, c.guess_mode)),
        ("seed", c.seed.to_string()),
        ("rounds", e.rounds.to_string()),
        ("aborts", format!("{} ({} on budget)", e.aborts, e.budget_aborts)),
        ("Q", format!("{} ± {}", fmt_opt(e.mean, 3), fmt_opt(e.std_err, 3))),
        ("max pairs", e.max_pairs.to_string()),
        ("peak candidates", r.telemetry.peak_candidates.to_string()),
        ("prunes at depth >= 4", fmt_opt(r.telemetry.prune_fraction_depth4, 3)),
        ("config", r.config_hash[..16].to_string()),
        ("version", format!("{} {}", r.tool, r.version)),
    ];
    for (k, v) in rows {
        let _ = writeln!(s, "{k:<22}{v}");
    }
    if let Some(t) = r.wall_clock_seconds {
        let _ = writeln!(s, "{:<22}{t:.2}", "wall clock (s)");
    }
    s
}

//! Human time-cost model: timed mental operations and the two-pass budget
//! arithmetic.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Seconds a user may spend per challenge letter.
pub const LETTER_BUDGET_SECONDS: f64 = 1.0;
/// Seconds a user may spend per challenge.
pub const CHALLENGE_BUDGET_SECONDS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpKind {
    Perform,
    Apply,
    Iterate,
    OutputGenerated,
    OutputKnown,
    Classify,
    Search,
    IncrementInMemory,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            OpKind::Perform => "perform",
            OpKind::Apply => "apply",
            OpKind::Iterate => "iterate",
            OpKind::OutputGenerated => "output-generated",
            OpKind::OutputKnown => "output-known",
            OpKind::Classify => "classify",
            OpKind::Search => "search",
            OpKind::IncrementInMemory => "increment",
        })
    }
}

/// Seconds per operation. `search` is a lower bound and may be raised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpCosts {
    pub perform: f64,
    pub apply: f64,
    pub iterate: f64,
    pub output_generated: f64,
    pub output_known: f64,
    pub classify: f64,
    pub search: f64,
    pub increment: f64,
}

impl Default for OpCosts {
    fn default() -> Self {
        OpCosts {
            perform: 0.35,
            apply: 0.3,
            iterate: 0.25,
            output_generated: 0.25,
            output_known: 0.15,
            classify: 0.1,
            search: 0.2,
            increment: 0.1,
        }
    }
}

impl OpCosts {
    pub fn cost(&self, op: OpKind) -> f64 {
        match op {
            OpKind::Perform => self.perform,
            OpKind::Apply => self.apply,
            OpKind::Iterate => self.iterate,
            OpKind::OutputGenerated => self.output_generated,
            OpKind::OutputKnown => self.output_known,
            OpKind::Classify => self.classify,
            OpKind::Search => self.search,
            OpKind::IncrementInMemory => self.increment,
        }
    }
}

/// A multiset of operations; counts may be fractional expectations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostProfile {
    pub ops: Vec<(OpKind, f64)>,
}

impl CostProfile {
    pub fn new() -> Self {
        CostProfile::default()
    }

    pub fn with(mut self, op: OpKind, count: f64) -> Self {
        self.ops.push((op, count));
        self
    }

    pub fn concat(mut self, other: &CostProfile) -> Self {
        self.ops.extend_from_slice(&other.ops);
        self
    }

    pub fn repeat(&self, times: f64) -> Self {
        CostProfile { ops: self.ops.iter().map(|&(op, n)| (op, n * times)).collect() }
    }
}

pub fn cost_of_profile(profile: &CostProfile, costs: &OpCosts) -> f64 {
    profile.ops.iter().map(|&(op, n)| n * costs.cost(op)).sum()
}

/// One DS3 letter after the first: read it, look up `f`, add, look up `g`,
/// write the digit.
pub fn ds3_letter_profile() -> CostProfile {
    CostProfile::new()
        .with(OpKind::Iterate, 1.0)
        .with(OpKind::Apply, 1.0)
        .with(OpKind::Perform, 1.0)
        .with(OpKind::Apply, 1.0)
        .with(OpKind::OutputGenerated, 1.0)
}

/// A whole DS3 challenge: `L` letters plus the extra lookup of `f(A_L)`.
pub fn ds3_challenge_profile(length: usize) -> CostProfile {
    ds3_letter_profile().repeat(length as f64).with(OpKind::Apply, 1.0)
}

/// One STML letter: read, look up, add, compare with 5, and write the digit
/// half the time.
pub fn stml_letter_profile() -> CostProfile {
    CostProfile::new()
        .with(OpKind::Iterate, 1.0)
        .with(OpKind::Apply, 1.0)
        .with(OpKind::Perform, 1.0)
        .with(OpKind::Classify, 1.0)
        .with(OpKind::OutputGenerated, 0.5)
}

pub fn stml_challenge_profile(length: usize) -> CostProfile {
    stml_letter_profile().repeat(length as f64)
}

/// Least time of a second pass over `L` letters emitting `n` digits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondPassCost {
    /// `(t_i + t_a) * L`
    pub iterate_apply: f64,
    /// `min((t_i + t_p) / 2, t_p) * L`
    pub combine: f64,
    /// `0.25 * n`
    pub output: f64,
    /// `0.85 L + 0.25 n`
    pub total: f64,
}

/// `0.85 L + 0.25 n` with its per-letter breakdown.
pub fn second_pass_min_cost(length: usize, outputs: usize) -> SecondPassCost {
    let c = OpCosts::default();
    let l = length as f64;
    let n = outputs as f64;
    SecondPassCost {
        iterate_apply: (c.iterate + c.apply) * l,
        combine: ((c.iterate + c.perform) / 2.0).min(c.perform) * l,
        output: 0.25 * n,
        total: 0.85 * l + 0.25 * n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetReport {
    /// `0.15 L`, or `0.1 L` when outputs are filtered by an extra classify.
    pub bound: f64,
    /// `0.25 n + mfp`
    pub spent: f64,
    pub slack: f64,
    pub feasible: bool,
}

/// Whether a first pass over `mfp` letters fits next to a minimal second
/// pass within one second per letter.
pub fn two_pass_budget(length: usize, outputs: f64, first_pass_letters: f64, extra_classify: bool) -> BudgetReport {
    let l = length as f64;
    let bound = if extra_classify { 0.1 * l } else { 0.15 * l };
    let spent = 0.25 * outputs + first_pass_letters;
    let slack = bound - spent;
    BudgetReport { bound, spent, slack, feasible: slack >= -1e-9 }
}

/// `max(N^3, N M)` and whether it stays within `10^9`.
pub fn lemma1_combo_count(n: u64, m: u64) -> (u128, bool) {
    let n = n as u128;
    let count = (n * n * n).max(n * m as u128);
    (count, count <= 1_000_000_000)
}

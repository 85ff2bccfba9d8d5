//! Depth-first search over the constraint tree of STML.
//!
//! Level `d` of the tree assumes one [`SubsetChoice`] for the `d`-th observed
//! pair. A node is pruned once propagation, or a failed solve, shows that no
//! key satisfies the assumed constraint sets. Guesses come from the first
//! consistent leaves in lexicographic order; the search resumes at the first
//! leaf of the previous guess, since every earlier subtree is already refuted.

use std::collections::HashMap;
use std::ops::ControlFlow;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::modcsp::{ConstraintSystem, FuncVar, Status};
use crate::schema::{stml_digits, Alphabet, Challenge, Response, StmlKey};

use super::stml::check_stml_pair;
use super::{
    stml_constraints_for_subset, stml_subsets, Adversary, AttackError, GuessCollector, GuessConfig, GuessMode,
    SubsetChoice, Telemetry,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DfsConfig {
    pub guess: GuessConfig,
    /// Tree nodes the attacker may create over its lifetime.
    pub node_budget: u64,
    /// Run a solver at every node instead of relying on propagation alone.
    pub solve_at_nodes: bool,
    /// Consistent leaves gathered per frequency-ranked guess.
    pub max_leaves: usize,
}

impl Default for DfsConfig {
    fn default() -> Self {
        DfsConfig { guess: GuessConfig::default(), node_budget: 50_000_000, solve_at_nodes: true, max_leaves: 64 }
    }
}

struct Pair {
    challenge: Challenge,
    response: Response,
    choices: Vec<SubsetChoice>,
}

struct Leaf {
    sys: ConstraintSystem,
    path: Vec<usize>,
}

pub struct StmlDfsAttacker {
    alphabet: Alphabet,
    config: DfsConfig,
    pairs: Vec<Pair>,
    /// Path of the first consistent leaf found by the last search.
    cursor: Vec<usize>,
    rng: ChaCha8Rng,
    telemetry: Telemetry,
}

struct Search<'a> {
    pairs: &'a [Pair],
    f: FuncVar,
    rng: &'a mut ChaCha8Rng,
    telemetry: &'a mut Telemetry,
    budget: u64,
    solve_at_nodes: bool,
}

impl Search<'_> {
    fn run(
        &mut self,
        sys: &ConstraintSystem,
        witness: Option<&[u8]>,
        path: &mut Vec<usize>,
        bound: Option<&[usize]>,
        sink: &mut dyn FnMut(Leaf) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, AttackError> {
        let depth = path.len();
        if depth == self.pairs.len() {
            return Ok(sink(Leaf { sys: sys.clone(), path: path.clone() }));
        }
        let pair = &self.pairs[depth];
        let start = bound.and_then(|b| b.first().copied()).unwrap_or(0);
        for idx in start..pair.choices.len() {
            if self.telemetry.nodes_expanded >= self.budget {
                return Err(AttackError::BudgetExhausted { what: "node", limit: self.budget });
            }
            self.telemetry.nodes_expanded += 1;
            let choice = &pair.choices[idx];
            let mut child = sys.clone();
            let cs = stml_constraints_for_subset(&self.f, &pair.challenge, &pair.response, choice)?;
            let status = child.add_all(cs).map_err(|e| AttackError::InvalidParameter(e.to_string()))?;
            if status == Status::Contradiction {
                self.telemetry.record_prune(depth + 1);
                continue;
            }
            let reused = witness.filter(|w| SubsetChoice::of_key(w, &pair.challenge) == *choice);
            let solved;
            let child_witness = match reused {
                Some(w) => Some(w),
                None if self.solve_at_nodes => match child.solve_one(self.rng) {
                    Some(a) => {
                        solved = a.func_values(&self.f);
                        Some(solved.as_slice())
                    }
                    None => {
                        self.telemetry.record_prune(depth + 1);
                        continue;
                    }
                },
                None => None,
            };
            let child_bound = bound.filter(|b| b.len() > 1 && idx == start).map(|b| &b[1..]);
            path.push(idx);
            let flow = self.run(&child, child_witness, path, child_bound, sink)?;
            path.pop();
            if flow.is_break() {
                return Ok(flow);
            }
        }
        Ok(ControlFlow::Continue(()))
    }
}

impl StmlDfsAttacker {
    pub fn new(alphabet: Alphabet, config: DfsConfig, seed: u64) -> Self {
        StmlDfsAttacker {
            alphabet,
            config,
            pairs: Vec::new(),
            cursor: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            telemetry: Telemetry::default(),
        }
    }

    fn root(&self) -> (ConstraintSystem, FuncVar) {
        let mut sys = ConstraintSystem::new();
        let f = sys.declare_func("f", self.alphabet.size());
        (sys, f)
    }

    fn search(
        &mut self,
        bound: Option<Vec<usize>>,
        sink: &mut dyn FnMut(Leaf) -> ControlFlow<()>,
    ) -> Result<(), AttackError> {
        let (root, f) = self.root();
        let mut search = Search {
            pairs: &self.pairs,
            f,
            rng: &mut self.rng,
            telemetry: &mut self.telemetry,
            budget: self.config.node_budget,
            solve_at_nodes: self.config.solve_at_nodes,
        };
        let _ = search.run(&root, None, &mut Vec::new(), bound.as_deref(), sink)?;
        Ok(())
    }

    /// Paths (choice indices per pair) of every consistent leaf.
    pub fn consistent_paths(&mut self) -> Result<Vec<Vec<SubsetChoice>>, AttackError> {
        let mut paths = Vec::new();
        self.search(None, &mut |leaf| {
            paths.push(leaf.path);
            ControlFlow::Continue(())
        })?;
        Ok(paths
            .into_iter()
            .map(|p| p.iter().enumerate().map(|(d, &i)| self.pairs[d].choices[i].clone()).collect())
            .collect())
    }

    /// Union of the solution sets of all consistent leaves, sorted by `f`.
    pub fn surviving_keys(&mut self) -> Result<Vec<StmlKey>, AttackError> {
        let m = self.alphabet.size();
        let total = 10u128.pow(m as u32);
        if total > 10_000_000 {
            return Err(AttackError::RefuseToRun { key_space: total, bound: 10_000_000 });
        }
        let mut leaves = Vec::new();
        self.search(None, &mut |leaf| {
            leaves.push(leaf);
            ControlFlow::Continue(())
        })?;
        let (_, f) = self.root();
        let vars: Vec<_> = f.entries().collect();
        let mut keys = Vec::new();
        for leaf in &leaves {
            leaf.sys.for_each_projected(&vars, |v| {
                keys.push(v.to_vec());
                ControlFlow::Continue(())
            });
        }
        keys.sort();
        keys.into_iter().map(|k| StmlKey::new(k).map_err(AttackError::from)).collect()
    }

    /// Whether `key` is consistent: its own emission positions reproduce every
    /// response and the resulting constraint sets hold under propagation.
    pub fn is_key_consistent(&self, key: &StmlKey) -> Result<bool, AttackError> {
        let (mut sys, f) = self.root();
        for pair in &self.pairs {
            let choice = SubsetChoice::of_key(key.f(), &pair.challenge);
            if choice.len() != pair.response.len() {
                return Ok(false);
            }
            let cs = stml_constraints_for_subset(&f, &pair.challenge, &pair.response, &choice)?;
            if !cs.iter().all(|c| c.holds(key.f())) {
                return Ok(false);
            }
            if sys.add_all(cs).map_err(|e| AttackError::InvalidParameter(e.to_string()))? == Status::Contradiction {
                return Ok(false);
            }
        }
        Ok(f.entries().zip(key.f()).all(|(v, &x)| sys.candidates(v).contains(x)))
    }
}

impl Adversary for StmlDfsAttacker {
    fn name(&self) -> &'static str {
        "stml-dfs"
    }

    fn observe(&mut self, challenge: &Challenge, response: &Response) -> Result<(), AttackError> {
        if challenge.letters().iter().any(|&l| !self.alphabet.contains(l)) {
            return Err(AttackError::InvalidPair("challenge outside the alphabet".into()));
        }
        check_stml_pair(challenge, response)?;
        let choices = stml_subsets(challenge.len(), response.len())?.collect();
        self.pairs.push(Pair { challenge: challenge.clone(), response: response.clone(), choices });
        self.telemetry.pairs_observed += 1;
        Ok(())
    }

    fn guess(&mut self, challenge: &Challenge) -> Result<Vec<Response>, AttackError> {
        self.telemetry.guess_calls += 1;
        if challenge.letters().iter().any(|&l| !self.alphabet.contains(l)) {
            return Err(AttackError::InvalidPair("challenge outside the alphabet".into()));
        }
        let cfg = self.config.guess;
        let (_, f) = self.root();
        let letters = challenge.letters().to_vec();
        let distinct = challenge.distinct_letters();
        let vars: Vec<_> = distinct.iter().map(|&l| f.at(l as usize)).collect();
        let mut collector = GuessCollector::new(cfg.mode);
        let mut first_path: Option<Vec<usize>> = None;
        let mut leaves = 0usize;
        let mut counts: HashMap<Vec<u8>, u64> = HashMap::new();
        let max_leaves = self.config.max_leaves.max(1);
        let mut fvals = vec![0u8; self.alphabet.size()];
        let bound = Some(self.cursor.clone());
        if cfg.mode == GuessMode::SingleSolution {
            let mut first: Option<Leaf> = None;
            self.search(bound, &mut |leaf| {
                first = Some(leaf);
                ControlFlow::Break(())
            })?;
            if let Some(leaf) = first {
                if let Some(a) = leaf.sys.solve_one(&mut self.rng) {
                    collector.add(&stml_digits(&a.func_values(&f), &letters), 1);
                }
                self.telemetry.peak_candidates = self.telemetry.peak_candidates.max(1);
                self.cursor = leaf.path;
            }
            return Ok(collector.finish());
        }
        self.search(bound, &mut |leaf| {
            if first_path.is_none() {
                first_path = Some(leaf.path.clone());
            }
            leaves += 1;
            let mut visited = 0u64;
            leaf.sys.for_each_projected(&vars, |v| {
                for (&l, &x) in distinct.iter().zip(v) {
                    fvals[l as usize] = x;
                }
                let r = stml_digits(&fvals, &letters);
                visited += 1;
                match cfg.mode {
                    GuessMode::Frequency => *counts.entry(r).or_default() += 1,
                    _ => collector.add(&r, 1),
                }
                if collector.is_full() || visited >= cfg.exact_limit {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
            if collector.is_full() || (cfg.mode == GuessMode::Frequency && leaves >= max_leaves) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })?;
        for (r, n) in counts {
            collector.add(&r, n);
        }
        self.telemetry.peak_candidates = self.telemetry.peak_candidates.max(leaves as u64);
        if let Some(p) = first_path {
            self.cursor = p;
        }
        Ok(collector.finish())
    }

    fn telemetry(&self) -> Telemetry {
        self.telemetry.clone()
    }
}

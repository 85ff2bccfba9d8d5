//! Constraint attacker for DS3.
//!
//! Once `g` is fixed, a DS3 pair determines `f` on every letter of the
//! challenge: `f(A_i) = g⁻¹(b_i) - b_{i-1}` for `i >= 2` and
//! `f(A_1) = g⁻¹(b_1) - f(A_L)`. The attacker therefore walks the
//! permutations, but only as far as the responses force it to: a candidate
//! records `g⁻¹` on the digits seen in responses so far, and each new digit
//! branches over the still-unused preimages. Every candidate stands for the
//! same number of full permutations, so candidates are equally likely.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::modcsp::{Constraint, FuncVar, LinExpr, PermVar};
use crate::schema::{Alphabet, Challenge, Ds3Key, Response};

use super::{Adversary, AttackError, GuessCollector, GuessConfig, Telemetry};

const UNKNOWN: u8 = u8::MAX;

/// The `L` constraints of a DS3 pair, with `g` symbolic:
/// `g(f(A_1) + f(A_L)) = b_1` and `g(f(A_i) + b_{i-1}) = b_i`.
pub fn ds3_derive_constraints(
    f: &FuncVar,
    g: &PermVar,
    challenge: &Challenge,
    response: &Response,
) -> Result<Vec<Constraint>, AttackError> {
    check_pair(challenge, response)?;
    if let Some(&a) = challenge.letters().iter().find(|&&a| a as usize >= f.size()) {
        return Err(AttackError::InvalidPair(format!("letter #{a} is outside the function's domain")));
    }
    let letters = challenge.letters();
    let b = response.digits();
    let last = *letters.last().expect("nonempty");
    let mut out = Vec::with_capacity(letters.len());
    out.push(Constraint::perm_eq(
        *g,
        LinExpr::sum([f.at(letters[0] as usize), f.at(last as usize)]),
        b[0],
    ));
    for i in 1..letters.len() {
        out.push(Constraint::perm_eq(*g, LinExpr::var(f.at(letters[i] as usize)).plus_const(b[i - 1]), b[i]));
    }
    Ok(out)
}

fn check_pair(challenge: &Challenge, response: &Response) -> Result<(), AttackError> {
    if challenge.len() != response.len() {
        return Err(AttackError::InvalidPair(format!(
            "DS3 response has length {} but the challenge has length {}",
            response.len(),
            challenge.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ds3Config {
    pub guess: GuessConfig,
    /// Largest candidate list the attacker may hold.
    pub candidate_budget: u64,
}

impl Default for Ds3Config {
    fn default() -> Self {
        Ds3Config { guess: GuessConfig::default(), candidate_budget: 4_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Candidate {
    /// `inv[b] = g⁻¹(b)` for digits seen in responses.
    inv: [u8; 10],
    f: [u8; 26],
}

pub struct Ds3Attacker {
    alphabet: Alphabet,
    config: Ds3Config,
    candidates: Vec<Candidate>,
    /// Digits that occurred in some response.
    known_digits: Vec<u8>,
    seen_letters: u32,
    rng: ChaCha8Rng,
    telemetry: Telemetry,
}

impl Ds3Attacker {
    pub fn new(alphabet: Alphabet, config: Ds3Config, seed: u64) -> Self {
        Ds3Attacker {
            alphabet,
            config,
            candidates: vec![Candidate { inv: [UNKNOWN; 10], f: [UNKNOWN; 26] }],
            known_digits: Vec::new(),
            seen_letters: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            telemetry: Telemetry { peak_candidates: 1, ..Telemetry::default() },
        }
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    fn unknown_digit_count(&self) -> usize {
        10 - self.known_digits.len()
    }

    /// Number of full keys `(f, g)` over the whole alphabet still consistent.
    pub fn consistent_key_count(&self) -> u128 {
        let completions: u128 = (1..=self.unknown_digit_count() as u128).product();
        let unseen = self.alphabet.size() as u32 - self.seen_letters.count_ones();
        self.candidates.len() as u128 * completions * 10u128.pow(unseen)
    }

    /// Whether `key` agrees with some candidate on everything observed.
    pub fn is_consistent_with(&self, key: &Ds3Key) -> bool {
        let inv = key.g_inverse();
        self.candidates.iter().any(|c| {
            self.known_digits.iter().all(|&b| c.inv[b as usize] == inv[b as usize])
                && (0..self.alphabet.size()).all(|l| c.f[l] == UNKNOWN || c.f[l] == key.f()[l])
        })
    }

    fn extend(&self, cand: &Candidate, fresh: &[u8], letters: &[u8], digits: &[u8], out: &mut Vec<Candidate>) {
        if let Some((&b, rest)) = fresh.split_first() {
            let mut used = [false; 10];
            for &x in cand.inv.iter().filter(|&&x| x != UNKNOWN) {
                used[x as usize] = true;
            }
            for x in 0..10u8 {
                if !used[x as usize] {
                    let mut next = *cand;
                    next.inv[b as usize] = x;
                    self.extend(&next, rest, letters, digits, out);
                }
            }
            return;
        }
        derive_f(cand, letters, digits, out);
    }

    /// Forward map `g(x)` where known.
    fn forward(cand: &Candidate) -> [u8; 10] {
        let mut fwd = [UNKNOWN; 10];
        for (b, &x) in cand.inv.iter().enumerate() {
            if x != UNKNOWN {
                fwd[x as usize] = b as u8;
            }
        }
        fwd
    }

    /// Response of one completion: `fill` supplies `f` for unseen letters,
    /// `free_out` the images of unmapped inputs, in increasing input order.
    fn respond_completed(
        cand: &Candidate,
        fwd: &[u8; 10],
        letters: &[u8],
        unseen: &[u8],
        fill: &[u8],
        free_out: &[u8],
        buf: &mut Vec<u8>,
    ) {
        let mut f = cand.f;
        for (&l, &v) in unseen.iter().zip(fill) {
            f[l as usize] = v;
        }
        let mut g = *fwd;
        let mut k = 0;
        for slot in g.iter_mut() {
            if *slot == UNKNOWN {
                *slot = free_out[k];
                k += 1;
            }
        }
        buf.clear();
        let last = *letters.last().expect("nonempty");
        let mut prev = g[((f[letters[0] as usize] + f[last as usize]) % 10) as usize];
        buf.push(prev);
        for &a in &letters[1..] {
            prev = g[((f[a as usize] + prev) % 10) as usize];
            buf.push(prev);
        }
    }
}

fn assign(f: &mut [u8; 26], letter: u8, value: u8) -> bool {
    let slot = &mut f[letter as usize];
    if *slot == UNKNOWN {
        *slot = value;
        true
    } else {
        *slot == value
    }
}

/// Pushes every extension of `cand.f` that satisfies the pair under the
/// candidate's (now complete on the pair's digits) `g⁻¹`.
fn derive_f(cand: &Candidate, letters: &[u8], digits: &[u8], out: &mut Vec<Candidate>) {
    let mut next = *cand;
    for i in 1..letters.len() {
        let x = (next.inv[digits[i] as usize] + 10 - digits[i - 1]) % 10;
        if !assign(&mut next.f, letters[i], x) {
            return;
        }
    }
    let t = next.inv[digits[0] as usize];
    let first = letters[0];
    let last = *letters.last().expect("nonempty");
    if first == last && next.f[first as usize] == UNKNOWN {
        // single-letter challenge: 2 f(A) = t has zero or two roots
        for v in 0..10u8 {
            if (2 * v) % 10 == t {
                let mut c = next;
                c.f[first as usize] = v;
                out.push(c);
            }
        }
        return;
    }
    let v = (t + 10 - next.f[last as usize]) % 10;
    if assign(&mut next.f, first, v) {
        out.push(next);
    }
}

fn letter_mask(letters: &[u8]) -> u32 {
    letters.iter().fold(0u32, |m, &l| m | (1 << l))
}

impl Adversary for Ds3Attacker {
    fn name(&self) -> &'static str {
        "ds3"
    }

    fn observe(&mut self, challenge: &Challenge, response: &Response) -> Result<(), AttackError> {
        check_pair(challenge, response)?;
        if challenge.letters().iter().any(|&l| !self.alphabet.contains(l)) {
            return Err(AttackError::InvalidPair("challenge outside the alphabet".into()));
        }
        let letters = challenge.letters();
        let digits = response.digits();
        let mut fresh: Vec<u8> = Vec::new();
        for &d in digits {
            if !self.known_digits.contains(&d) && !fresh.contains(&d) {
                fresh.push(d);
            }
        }
        let budget = self.config.candidate_budget;
        let mut next = Vec::new();
        for cand in &self.candidates {
            self.extend(cand, &fresh, letters, digits, &mut next);
            if next.len() as u64 > budget {
                return Err(AttackError::BudgetExhausted { what: "candidate", limit: budget });
            }
        }
        self.telemetry.nodes_expanded += self.candidates.len() as u64;
        self.telemetry.pairs_observed += 1;
        self.telemetry.peak_candidates = self.telemetry.peak_candidates.max(next.len() as u64);
        self.candidates = next;
        self.known_digits.extend(fresh);
        self.seen_letters |= letter_mask(letters);
        Ok(())
    }

    fn guess(&mut self, challenge: &Challenge) -> Result<Vec<Response>, AttackError> {
        self.telemetry.guess_calls += 1;
        if challenge.letters().iter().any(|&l| !self.alphabet.contains(l)) {
            return Err(AttackError::InvalidPair("challenge outside the alphabet".into()));
        }
        let letters = challenge.letters();
        let unseen: Vec<u8> =
            challenge.distinct_letters().into_iter().filter(|&l| self.seen_letters & (1 << l) == 0).collect();
        let free_in: Vec<u8> = (0..10u8).filter(|d| !self.known_digits.contains(d)).collect();
        let free_count = free_in.len();
        let completions =
            10u128.pow(unseen.len() as u32) * (1..=free_count as u128).product::<u128>();
        let total = completions.saturating_mul(self.candidates.len() as u128);
        let cfg = self.config.guess;
        let mut collector = GuessCollector::new(cfg.mode);
        let mut buf = Vec::with_capacity(letters.len());

        if cfg.mode == super::GuessMode::Frequency && total <= cfg.exact_limit as u128 {
            let fills = all_fills(unseen.len());
            let perms = permutations(&free_in);
            let mut counts: HashMap<Vec<u8>, u64> = HashMap::new();
            for cand in &self.candidates {
                let fwd = Self::forward(cand);
                for perm in &perms {
                    for fill in &fills {
                        Self::respond_completed(cand, &fwd, letters, &unseen, fill, perm, &mut buf);
                        *counts.entry(buf.clone()).or_default() += 1;
                    }
                }
            }
            for (r, n) in counts {
                collector.add(&r, n);
            }
            return Ok(collector.finish());
        }

        let mut fill = vec![0u8; unseen.len()];
        let mut free_out = free_in.clone();
        let mut draw = |cand: &Candidate, rng: &mut ChaCha8Rng, buf: &mut Vec<u8>| {
            for v in fill.iter_mut() {
                *v = rng.gen_range(0..10);
            }
            free_out.shuffle(rng);
            Self::respond_completed(cand, &Self::forward(cand), letters, &unseen, &fill, &free_out, buf);
        };
        match cfg.mode {
            super::GuessMode::Frequency | super::GuessMode::SingleSolution => {
                for _ in 0..cfg.samples {
                    let cand = self.candidates[self.rng.gen_range(0..self.candidates.len())];
                    draw(&cand, &mut self.rng, &mut buf);
                    collector.add(&buf, 1);
                    if collector.is_full() {
                        break;
                    }
                }
            }
            super::GuessMode::FirstConsistent => {
                for cand in &self.candidates {
                    draw(cand, &mut self.rng, &mut buf);
                    collector.add(&buf, 1);
                    if collector.is_full() {
                        break;
                    }
                }
                let mut extra = 0;
                while !collector.is_full() && extra < cfg.samples {
                    let cand = self.candidates[self.rng.gen_range(0..self.candidates.len())];
                    draw(&cand, &mut self.rng, &mut buf);
                    collector.add(&buf, 1);
                    extra += 1;
                }
            }
        }
        Ok(collector.finish())
    }

    fn telemetry(&self) -> Telemetry {
        self.telemetry.clone()
    }
}

fn all_fills(n: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::with_capacity(n)];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..10u8).map(move |d| {
                    let mut q = p.clone();
                    q.push(d);
                    q
                })
            })
            .collect();
    }
    out
}

fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

//! Enumeration attacker for STML.
//!
//! Holds every partial map from the letters seen so far to digits that is
//! consistent with all observed pairs. Letters that never shared a challenge
//! are independent, so the set is stored as a product of components, one
//! table per group of linked letters. A new pair joins the components it
//! touches and extends them over its unseen letters by walking the challenge:
//! an unassigned letter may only move the running total into `0..=4` or onto
//! the next response digit, so each step branches at most six ways.

use std::collections::BTreeMap;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::schema::{stml_digits, Alphabet, Challenge, Response, StmlKey};

use super::stml::check_stml_pair;
use super::{Adversary, AttackError, GuessCollector, GuessConfig, GuessMode, Telemetry};

const UNKNOWN: u8 = u8::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumConfig {
    pub guess: GuessConfig,
    /// Largest number of rows any component may hold.
    pub set_budget: u64,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig { guess: GuessConfig::default(), set_budget: 20_000_000 }
    }
}

#[derive(Debug, Clone)]
struct Component {
    letters: Vec<u8>,
    /// Row-major, `letters.len()` digits per row.
    rows: Vec<u8>,
}

impl Component {
    fn len(&self) -> usize {
        self.rows.len() / self.letters.len()
    }

    fn row(&self, i: usize) -> &[u8] {
        let w = self.letters.len();
        &self.rows[i * w..(i + 1) * w]
    }

    fn col(&self, letter: u8) -> usize {
        self.letters.iter().position(|&l| l == letter).expect("letter in component")
    }

    /// Rows grouped by their values on `cols`, groups in ascending order.
    fn groups(&self, cols: &[usize]) -> Vec<(Vec<u8>, Vec<u32>)> {
        let mut map: BTreeMap<Vec<u8>, Vec<u32>> = BTreeMap::new();
        for i in 0..self.len() {
            let row = self.row(i);
            map.entry(cols.iter().map(|&c| row[c]).collect()).or_default().push(i as u32);
        }
        map.into_iter().collect()
    }

    /// Distinct values on `cols` in order of first occurrence, with counts.
    fn projections_in_order(&self, cols: &[usize]) -> Vec<(Vec<u8>, u64)> {
        let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
        let mut out: Vec<(Vec<u8>, u64)> = Vec::new();
        for i in 0..self.len() {
            let row = self.row(i);
            let key: Vec<u8> = cols.iter().map(|&c| row[c]).collect();
            match index.get(&key) {
                Some(&k) => out[k].1 += 1,
                None => {
                    index.insert(key.clone(), out.len());
                    out.push((key, 1));
                }
            }
        }
        out
    }
}

pub struct StmlEnumAttacker {
    alphabet: Alphabet,
    config: EnumConfig,
    comps: Vec<Component>,
    comp_of: [u8; 26],
    /// Set once an observation leaves no consistent key.
    empty: bool,
    rng: ChaCha8Rng,
    telemetry: Telemetry,
}

/// Which component (by position in the join) owns a challenge letter.
#[derive(Clone, Copy)]
enum Owner {
    Comp(usize),
    New,
}

struct Join<'a> {
    letters: &'a [u8],
    digits: &'a [u8],
    owner: Vec<Owner>,
    /// Per joined component: projected letters and row groups.
    proj: Vec<Vec<u8>>,
    groups: Vec<Vec<(Vec<u8>, Vec<u32>)>>,
    chosen: Vec<usize>,
    new_letters: Vec<u8>,
    f: [u8; 26],
    combos: Vec<(Vec<usize>, Vec<u8>)>,
    nodes: u64,
}

impl Join<'_> {
    fn step(&mut self, i: usize, s: u8, j: usize) {
        let len = self.digits.len();
        if i == self.letters.len() {
            if j == len {
                let values = self.new_letters.iter().map(|&l| self.f[l as usize]).collect();
                self.combos.push((self.chosen.clone(), values));
            }
            return;
        }
        self.nodes += 1;
        let a = self.letters[i] as usize;
        if self.f[a] != UNKNOWN {
            self.advance(i, s, j);
            return;
        }
        match self.owner[i] {
            Owner::Comp(k) => {
                for g in 0..self.groups[k].len() {
                    for (c, &l) in self.proj[k].iter().enumerate() {
                        self.f[l as usize] = self.groups[k][g].0[c];
                    }
                    self.chosen[k] = g;
                    self.advance(i, s, j);
                }
                for &l in &self.proj[k] {
                    self.f[l as usize] = UNKNOWN;
                }
                self.chosen[k] = usize::MAX;
            }
            Owner::New => {
                let rest = self.letters.len() - i - 1;
                for t in 0..5u8 {
                    if len - j <= rest {
                        self.f[a] = (t + 10 - s) % 10;
                        self.step(i + 1, t, j);
                    }
                }
                if j < len && len - j - 1 <= rest {
                    self.f[a] = (self.digits[j] + 10 - s) % 10;
                    self.step(i + 1, self.digits[j], j + 1);
                }
                self.f[a] = UNKNOWN;
            }
        }
    }

    /// Position `i` with its letter assigned.
    fn advance(&mut self, i: usize, s: u8, j: usize) {
        let len = self.digits.len();
        let rest = self.letters.len() - i - 1;
        let t = (s + self.f[self.letters[i] as usize]) % 10;
        let nj = if t >= 5 {
            if j < len && self.digits[j] == t {
                j + 1
            } else {
                return;
            }
        } else {
            j
        };
        if len - nj <= rest {
            self.step(i + 1, t, nj);
        }
    }
}

/// Visits every index tuple below `dims` in lexicographic order, last index
/// fastest, until `visit` returns false.
fn odometer(dims: &[usize], mut visit: impl FnMut(&[usize]) -> bool) {
    if dims.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; dims.len()];
    loop {
        if !visit(&idx) {
            return;
        }
        let mut k = dims.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

impl StmlEnumAttacker {
    pub fn new(alphabet: Alphabet, config: EnumConfig, seed: u64) -> Self {
        StmlEnumAttacker {
            alphabet,
            config,
            comps: Vec::new(),
            comp_of: [UNKNOWN; 26],
            empty: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
            telemetry: Telemetry { peak_candidates: 1, ..Telemetry::default() },
        }
    }

    /// Number of consistent maps on the seen letters.
    pub fn partial_count(&self) -> u128 {
        if self.empty {
            return 0;
        }
        self.comps.iter().map(|c| c.len() as u128).product()
    }

    /// Rows held across all components.
    pub fn stored_rows(&self) -> u64 {
        self.comps.iter().map(|c| c.len() as u64).sum()
    }

    pub fn component_count(&self) -> usize {
        self.comps.len()
    }

    pub fn seen_letters(&self) -> Vec<u8> {
        (0..26u8).filter(|&l| self.comp_of[l as usize] != UNKNOWN).collect()
    }

    /// Whether the restriction of `key` to the seen letters survives.
    pub fn contains_key(&self, key: &StmlKey) -> bool {
        !self.empty
            && self.comps.iter().all(|c| {
                let want: Vec<u8> = c.letters.iter().map(|&l| key.f()[l as usize]).collect();
                (0..c.len()).any(|i| c.row(i) == want.as_slice())
            })
    }

    /// All consistent keys over the whole alphabet, sorted by `f`.
    pub fn surviving_keys(&self) -> Result<Vec<StmlKey>, AttackError> {
        let m = self.alphabet.size();
        if self.empty {
            return Ok(Vec::new());
        }
        let free: Vec<u8> = (0..m as u8).filter(|&l| self.comp_of[l as usize] == UNKNOWN).collect();
        let total = self.partial_count() * 10u128.pow(free.len() as u32);
        if total > 10_000_000 {
            return Err(AttackError::RefuseToRun { key_space: total, bound: 10_000_000 });
        }
        let mut dims: Vec<usize> = self.comps.iter().map(|c| c.len()).collect();
        dims.extend(std::iter::repeat(10).take(free.len()));
        let mut out = Vec::with_capacity(total as usize);
        let mut f = vec![0u8; m];
        odometer(&dims, |idx| {
            for (c, &i) in self.comps.iter().zip(idx) {
                for (&l, &v) in c.letters.iter().zip(c.row(i)) {
                    f[l as usize] = v;
                }
            }
            for (&l, &v) in free.iter().zip(&idx[self.comps.len()..]) {
                f[l as usize] = v as u8;
            }
            out.push(f.clone());
            true
        });
        out.sort();
        out.into_iter().map(|f| StmlKey::new(f).map_err(AttackError::from)).collect()
    }

    fn check_letters(&self, challenge: &Challenge) -> Result<(), AttackError> {
        if challenge.letters().iter().any(|&l| !self.alphabet.contains(l)) {
            return Err(AttackError::InvalidPair("challenge outside the alphabet".into()));
        }
        Ok(())
    }

    /// Components touched by `challenge` (in order of first appearance) and
    /// the challenge letters each one owns; then the unseen letters.
    fn split(&self, challenge: &Challenge) -> (Vec<usize>, Vec<Vec<u8>>, Vec<u8>) {
        let mut touched: Vec<usize> = Vec::new();
        let mut proj: Vec<Vec<u8>> = Vec::new();
        let mut unseen = Vec::new();
        for l in challenge.distinct_letters() {
            match self.comp_of[l as usize] {
                UNKNOWN => unseen.push(l),
                c => match touched.iter().position(|&t| t == c as usize) {
                    Some(k) => proj[k].push(l),
                    None => {
                        touched.push(c as usize);
                        proj.push(vec![l]);
                    }
                },
            }
        }
        (touched, proj, unseen)
    }

    fn set_comps(&mut self, comps: Vec<Component>) {
        self.comp_of = [UNKNOWN; 26];
        for (i, c) in comps.iter().enumerate() {
            for &l in &c.letters {
                self.comp_of[l as usize] = i as u8;
            }
        }
        self.comps = comps;
    }
}

impl Adversary for StmlEnumAttacker {
    fn name(&self) -> &'static str {
        "stml-enum"
    }

    fn observe(&mut self, challenge: &Challenge, response: &Response) -> Result<(), AttackError> {
        self.check_letters(challenge)?;
        check_stml_pair(challenge, response)?;
        self.telemetry.pairs_observed += 1;
        if self.empty {
            return Ok(());
        }
        let (touched, proj, unseen) = self.split(challenge);
        let owner = challenge
            .letters()
            .iter()
            .map(|&l| match self.comp_of[l as usize] {
                UNKNOWN => Owner::New,
                c => Owner::Comp(touched.iter().position(|&t| t == c as usize).expect("touched")),
            })
            .collect();
        let groups: Vec<_> = touched
            .iter()
            .zip(&proj)
            .map(|(&t, p)| {
                let cols: Vec<usize> = p.iter().map(|&l| self.comps[t].col(l)).collect();
                self.comps[t].groups(&cols)
            })
            .collect();
        let mut join = Join {
            letters: challenge.letters(),
            digits: response.digits(),
            owner,
            proj,
            groups,
            chosen: vec![usize::MAX; touched.len()],
            new_letters: unseen.clone(),
            f: [UNKNOWN; 26],
            combos: Vec::new(),
            nodes: 0,
        };
        join.step(0, 0, 0);
        self.telemetry.nodes_expanded += join.nodes;

        let mut total: u64 = 0;
        for (chosen, _) in &join.combos {
            let n: u64 = chosen.iter().enumerate().map(|(k, &g)| join.groups[k][g].1.len() as u64).product();
            total = total.saturating_add(n);
        }
        let budget = self.config.set_budget;
        if total > budget {
            return Err(AttackError::BudgetExhausted { what: "partial-key set", limit: budget });
        }

        let mut letters: Vec<u8> = touched.iter().flat_map(|&t| self.comps[t].letters.iter().copied()).collect();
        letters.extend(&unseen);
        let mut rows = Vec::with_capacity(total as usize * letters.len());
        for (chosen, values) in &join.combos {
            let dims: Vec<usize> = chosen.iter().enumerate().map(|(k, &g)| join.groups[k][g].1.len()).collect();
            odometer(&dims, |idx| {
                for (k, &i) in idx.iter().enumerate() {
                    let row = join.groups[k][chosen[k]].1[i] as usize;
                    rows.extend_from_slice(self.comps[touched[k]].row(row));
                }
                rows.extend_from_slice(values);
                true
            });
        }
        if total == 0 {
            self.empty = true;
        }
        let merged = Component { letters, rows };
        let mut comps: Vec<Component> = self
            .comps
            .iter()
            .enumerate()
            .filter(|(i, _)| !touched.contains(i))
            .map(|(_, c)| c.clone())
            .collect();
        comps.push(merged);
        self.set_comps(comps);
        self.telemetry.peak_candidates = self.telemetry.peak_candidates.max(self.stored_rows());
        Ok(())
    }

    fn guess(&mut self, challenge: &Challenge) -> Result<Vec<Response>, AttackError> {
        self.telemetry.guess_calls += 1;
        self.check_letters(challenge)?;
        let cfg = self.config.guess;
        let mut collector = GuessCollector::new(cfg.mode);
        if self.empty {
            return Ok(collector.finish());
        }
        let letters = challenge.letters();
        let (touched, proj, unseen) = self.split(challenge);
        let cols: Vec<Vec<usize>> =
            touched.iter().zip(&proj).map(|(&t, p)| p.iter().map(|&l| self.comps[t].col(l)).collect()).collect();
        let mut f = [0u8; 26];

        // distinct projections per touched component, with multiplicities
        let projections: Vec<Vec<(Vec<u8>, u64)>> =
            touched.iter().zip(&cols).map(|(&t, c)| self.comps[t].projections_in_order(c)).collect();
        let mut dims: Vec<usize> = projections.iter().map(|p| p.len()).collect();
        dims.extend(std::iter::repeat(10).take(unseen.len()));
        let combos = dims.iter().fold(1u128, |acc, &d| acc.saturating_mul(d as u128));
        let k = touched.len();

        let load = |idx: &[usize], f: &mut [u8; 26]| -> u64 {
            let mut weight = 1u64;
            for (c, &i) in idx[..k].iter().enumerate() {
                let (values, n) = &projections[c][i];
                for (&l, &v) in proj[c].iter().zip(values) {
                    f[l as usize] = v;
                }
                weight = weight.saturating_mul(*n);
            }
            for (&l, &v) in unseen.iter().zip(&idx[k..]) {
                f[l as usize] = v as u8;
            }
            weight
        };

        match cfg.mode {
            GuessMode::Frequency if combos <= cfg.exact_limit as u128 => {
                let mut counts: HashMap<Vec<u8>, u64> = HashMap::new();
                odometer(&dims, |idx| {
                    let w = load(idx, &mut f);
                    *counts.entry(stml_digits(&f, letters)).or_default() += w;
                    true
                });
                for (r, n) in counts {
                    collector.add(&r, n);
                }
            }
            GuessMode::Frequency | GuessMode::SingleSolution => {
                for _ in 0..cfg.samples {
                    for (&t, c) in touched.iter().zip(&cols) {
                        let comp = &self.comps[t];
                        let row = comp.row(self.rng.gen_range(0..comp.len()));
                        for &col in c {
                            f[comp.letters[col] as usize] = row[col];
                        }
                    }
                    for &l in &unseen {
                        f[l as usize] = self.rng.gen_range(0..10);
                    }
                    collector.add(&stml_digits(&f, letters), 1);
                    if collector.is_full() {
                        break;
                    }
                }
            }
            GuessMode::FirstConsistent => {
                // canonical key order: stored rows, unseen letters counted upwards
                let mut visited = 0u64;
                odometer(&dims, |idx| {
                    load(idx, &mut f);
                    collector.add(&stml_digits(&f, letters), 1);
                    visited += 1;
                    !collector.is_full() && visited < cfg.exact_limit
                });
            }
        }
        Ok(collector.finish())
    }

    fn telemetry(&self) -> Telemetry {
        self.telemetry.clone()
    }
}

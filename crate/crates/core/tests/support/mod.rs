//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use hcschema::modcsp::{ConstraintSystem, DigitSet, FuncVar, LinExpr, PermVar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// STML written out from its definition: keep a running sum, emit it when it
/// reaches five or more.
pub fn stml_reference(f: &[u8], letters: &[u8]) -> Vec<u8> {
    let mut s = 0u32;
    let mut out = Vec::new();
    for &a in letters {
        s = (s + f[a as usize] as u32) % 10;
        if s >= 5 {
            out.push(s as u8);
        }
    }
    out
}

/// DS3 written out from its definition.
pub fn ds3_reference(f: &[u8], g: &[u8; 10], letters: &[u8]) -> Vec<u8> {
    let n = letters.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let prev = if i == 0 { f[letters[n - 1] as usize] } else { out[i - 1] };
        out.push(g[((f[letters[i] as usize] + prev) % 10) as usize]);
    }
    out
}

/// All maps from `m` letters to digits, as base-10 counters with letter 0 least
/// significant.
pub fn all_maps(m: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..10u64.pow(m as u32)).map(move |mut i| {
        (0..m)
            .map(|_| {
                let d = (i % 10) as u8;
                i /= 10;
                d
            })
            .collect()
    })
}

/// A constraint in a form evaluated without the engine.
#[derive(Debug, Clone)]
pub enum Rule {
    Eq { terms: Vec<(usize, u8)>, constant: u8, value: u8 },
    In { terms: Vec<(usize, u8)>, constant: u8, allowed: u16 },
    Perm { terms: Vec<(usize, u8)>, constant: u8, value: u8 },
    Any(Vec<Vec<Rule>>),
}

/// A small system over `n` function entries and optionally one permutation.
#[derive(Debug, Clone)]
pub struct RefSystem {
    pub func_domains: Vec<u16>,
    pub perm_domains: Option<([u16; 10], bool)>,
    pub rules: Vec<Rule>,
}

fn eval(terms: &[(usize, u8)], constant: u8, f: &[u8]) -> u8 {
    ((terms.iter().map(|&(v, c)| f[v] as u32 * c as u32).sum::<u32>() + constant as u32) % 10) as u8
}

impl Rule {
    fn holds(&self, f: &[u8], g: &[u8]) -> bool {
        match self {
            Rule::Eq { terms, constant, value } => eval(terms, *constant, f) == *value,
            Rule::In { terms, constant, allowed } => allowed >> eval(terms, *constant, f) & 1 == 1,
            Rule::Perm { terms, constant, value } => g[eval(terms, *constant, f) as usize] == *value,
            Rule::Any(alts) => alts.iter().any(|set| set.iter().all(|r| r.holds(f, g))),
        }
    }

    fn build(&self, f: &FuncVar, g: Option<&PermVar>) -> hcschema::modcsp::Constraint {
        use hcschema::modcsp::Constraint;
        let expr = |terms: &[(usize, u8)], constant: u8| {
            terms.iter().fold(LinExpr::constant(constant), |e, &(v, c)| e.plus_term(f.at(v), c))
        };
        match self {
            Rule::Eq { terms, constant, value } => Constraint::mod_eq(expr(terms, *constant), *value),
            Rule::In { terms, constant, allowed } => {
                Constraint::member(expr(terms, *constant), DigitSet::from_bits(*allowed))
            }
            Rule::Perm { terms, constant, value } => {
                Constraint::perm_eq(*g.expect("permutation declared"), expr(terms, *constant), *value)
            }
            Rule::Any(alts) => Constraint::Or(
                alts.iter().map(|set| set.iter().map(|r| r.build(f, g)).collect()).collect(),
            ),
        }
    }
}

impl RefSystem {
    pub fn assignment_count(&self) -> u128 {
        let f: u128 = self.func_domains.iter().map(|d| d.count_ones() as u128).product();
        let g: u128 = self
            .perm_domains
            .map_or(1, |(d, _)| d.iter().map(|x| x.count_ones() as u128).product());
        f * g
    }

    /// Every satisfying assignment, function entries first then `g(0..10)`.
    pub fn brute_force(&self) -> Vec<Vec<u8>> {
        let mut domains: Vec<Vec<u8>> = self.func_domains.iter().map(|&d| digits_of(d)).collect();
        let n = domains.len();
        let bijective = self.perm_domains.map_or(false, |(_, b)| b);
        if let Some((d, _)) = self.perm_domains {
            domains.extend(d.iter().map(|&x| digits_of(x)));
        }
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(domains.len());
        product(&domains, &mut cur, &mut |a| {
            let (f, g) = a.split_at(n);
            if bijective && !distinct(g) {
                return;
            }
            if self.rules.iter().all(|r| r.holds(f, g)) {
                out.push(a.to_vec());
            }
        });
        out.sort();
        out
    }

    pub fn build(&self) -> ConstraintSystem {
        let mut sys = ConstraintSystem::new();
        let f = sys.declare_func_with("f", self.func_domains.iter().map(|&d| DigitSet::from_bits(d)).collect());
        let g = self.perm_domains.map(|(d, bij)| sys.declare_perm_with("g", d.map(DigitSet::from_bits), bij));
        for r in &self.rules {
            sys.add_constraint(r.build(&f, g.as_ref())).expect("well-formed");
        }
        sys
    }
}

fn digits_of(bits: u16) -> Vec<u8> {
    (0..10u8).filter(|d| bits >> d & 1 == 1).collect()
}

fn distinct(xs: &[u8]) -> bool {
    let mut seen = 0u16;
    xs.iter().all(|&x| {
        let fresh = seen >> x & 1 == 0;
        seen |= 1 << x;
        fresh
    })
}

fn product(domains: &[Vec<u8>], cur: &mut Vec<u8>, visit: &mut dyn FnMut(&[u8])) {
    if cur.len() == domains.len() {
        visit(cur);
        return;
    }
    for &d in &domains[cur.len()] {
        cur.push(d);
        product(domains, cur, visit);
        cur.pop();
    }
}

pub const MAX_ASSIGNMENTS: u128 = 100_000;

fn random_terms(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, u8)> {
    (0..rng.gen_range(1..=3)).map(|_| (rng.gen_range(0..n), rng.gen_range(1..10))).collect()
}

pub fn random_rule(rng: &mut ChaCha8Rng, n: usize, perm: bool, depth: u32) -> Rule {
    let terms = random_terms(rng, n);
    let constant = rng.gen_range(0..10);
    match rng.gen_range(0..if depth == 0 { 4 } else { 3 }) {
        0 => Rule::Eq { terms, constant, value: rng.gen_range(0..10) },
        1 => Rule::In { terms, constant, allowed: rng.gen_range(1..1024) },
        2 if perm => Rule::Perm { terms, constant, value: rng.gen_range(0..10) },
        2 => Rule::In { terms, constant, allowed: rng.gen_range(1..1024) },
        _ => Rule::Any(
            (0..rng.gen_range(1..=3))
                .map(|_| (0..rng.gen_range(1..=2)).map(|_| random_rule(rng, n, perm, depth + 1)).collect())
                .collect(),
        ),
    }
}

fn random_domain(rng: &mut ChaCha8Rng, max_size: u32) -> u16 {
    loop {
        let bits: u16 = rng.gen_range(1..1024);
        if bits.count_ones() <= max_size {
            return bits;
        }
    }
}

pub fn random_system(seed: u64) -> RefSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.gen_range(1..=5);
        let func_domains: Vec<u16> = (0..n).map(|_| random_domain(&mut rng, 10)).collect();
        let perm_domains = rng.gen_bool(0.4).then(|| {
            let mut d = [0u16; 10];
            for x in d.iter_mut() {
                *x = if rng.gen_bool(0.7) { 1 << rng.gen_range(0..10) } else { random_domain(&mut rng, 3) };
            }
            (d, rng.gen_bool(0.5))
        });
        let perm = perm_domains.is_some();
        let rules = (0..rng.gen_range(0..=5)).map(|_| random_rule(&mut rng, n, perm, 0)).collect();
        let sys = RefSystem { func_domains, perm_domains, rules };
        if sys.assignment_count() <= MAX_ASSIGNMENTS {
            return sys;
        }
    }
}

//! Exact adversary: holds every key still consistent with the observed pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::schema::{
    ds3_digits, stml_digits, Challenge, Ds3Key, Response, SchemaId, SchemaKind, SecretKey, StmlKey,
};

use super::{Adversary, AttackError, GuessCollector, GuessMode, Telemetry};

/// Largest key space the oracle accepts by default.
pub const DEFAULT_ORACLE_BOUND: u128 = 10_000_000;

const PERMS: u64 = 3_628_800;

pub struct OracleAdversary {
    schema: SchemaId,
    key_space: u64,
    /// `None` until the first observation: every key survives.
    survivors: Option<Vec<u64>>,
    mode: GuessMode,
    rng: ChaCha8Rng,
    telemetry: Telemetry,
}

impl OracleAdversary {
    pub fn new(schema: SchemaId, bound: u128, mode: GuessMode) -> Result<Self, AttackError> {
        let key_space = schema.key_space_size();
        if key_space > bound || key_space > u64::MAX as u128 {
            return Err(AttackError::RefuseToRun { key_space, bound });
        }
        Ok(OracleAdversary {
            schema,
            key_space: key_space as u64,
            survivors: None,
            mode,
            rng: ChaCha8Rng::seed_from_u64(0),
            telemetry: Telemetry { peak_candidates: key_space as u64, ..Telemetry::default() },
        })
    }

    /// Reseeds the draw used by single-solution guessing.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self
    }

    pub fn survivor_count(&self) -> u64 {
        self.survivors.as_ref().map_or(self.key_space, |s| s.len() as u64)
    }

    pub fn surviving_keys(&self) -> Vec<SecretKey> {
        let mut scratch = KeyScratch::new(&self.schema);
        self.indices().map(|i| scratch.key(i)).collect()
    }

    fn indices(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match &self.survivors {
            Some(v) => Box::new(v.iter().copied()),
            None => Box::new(0..self.key_space),
        }
    }
}

/// Decodes key indices: the letter map is the base-10 number whose `i`-th
/// digit is `f(letter i)`; DS3 appends the lexicographic rank of `g`.
struct KeyScratch {
    kind: SchemaKind,
    m: usize,
    f: Vec<u8>,
    g: [u8; 10],
}

impl KeyScratch {
    fn new(schema: &SchemaId) -> Self {
        KeyScratch { kind: schema.kind, m: schema.alphabet.size(), f: vec![0; schema.alphabet.size()], g: [0; 10] }
    }

    fn load(&mut self, index: u64) {
        let mut rest = match self.kind {
            SchemaKind::Ds3 => {
                decode_perm(index % PERMS, &mut self.g);
                index / PERMS
            }
            SchemaKind::Stml => index,
        };
        for i in 0..self.m {
            self.f[i] = (rest % 10) as u8;
            rest /= 10;
        }
    }

    fn respond(&mut self, index: u64, letters: &[u8]) -> Vec<u8> {
        self.load(index);
        match self.kind {
            SchemaKind::Ds3 => ds3_digits(&self.f, &self.g, letters),
            SchemaKind::Stml => stml_digits(&self.f, letters),
        }
    }

    fn key(&mut self, index: u64) -> SecretKey {
        self.load(index);
        match self.kind {
            SchemaKind::Ds3 => SecretKey::Ds3(Ds3Key::new(self.f.clone(), self.g).expect("valid")),
            SchemaKind::Stml => SecretKey::Stml(StmlKey::new(self.f.clone()).expect("valid")),
        }
    }
}

fn decode_perm(mut rank: u64, out: &mut [u8; 10]) {
    let mut pool: Vec<u8> = (0..10).collect();
    let mut fact = PERMS;
    for (i, slot) in out.iter_mut().enumerate() {
        fact /= (10 - i) as u64;
        let pick = (rank / fact) as usize;
        rank %= fact;
        *slot = pool.remove(pick);
    }
}

impl Adversary for OracleAdversary {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn observe(&mut self, challenge: &Challenge, response: &Response) -> Result<(), AttackError> {
        if challenge.letters().iter().any(|&l| !self.schema.alphabet.contains(l)) {
            return Err(AttackError::InvalidPair("challenge outside the alphabet".into()));
        }
        let mut scratch = KeyScratch::new(&self.schema);
        let letters = challenge.letters();
        let want = response.digits();
        let kept: Vec<u64> = self.indices().filter(|&i| scratch.respond(i, letters) == want).collect();
        self.telemetry.nodes_expanded += self.survivor_count();
        self.telemetry.pairs_observed += 1;
        self.survivors = Some(kept);
        Ok(())
    }

    fn guess(&mut self, challenge: &Challenge) -> Result<Vec<Response>, AttackError> {
        self.telemetry.guess_calls += 1;
        let mut scratch = KeyScratch::new(&self.schema);
        let mut collector = GuessCollector::new(self.mode);
        if self.mode == GuessMode::SingleSolution {
            let n = self.survivor_count();
            if n > 0 {
                let pick = self.rng.gen_range(0..n);
                let i = self.survivors.as_ref().map_or(pick, |s| s[pick as usize]);
                collector.add(&scratch.respond(i, challenge.letters()), 1);
            }
            return Ok(collector.finish());
        }
        for i in self.indices() {
            collector.add(&scratch.respond(i, challenge.letters()), 1);
            if collector.is_full() {
                break;
            }
        }
        Ok(collector.finish())
    }

    fn telemetry(&self) -> Telemetry {
        self.telemetry.clone()
    }
}

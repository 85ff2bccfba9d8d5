//! Alphabets, challenges, responses, secret keys and the two schema
//! evaluation procedures (DS3 and Skip-To-My-Lou).
//!
//! Letters are stored as indices into the alphabet (`0` is `A`). All digit
//! arithmetic is modulo 10.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported alphabet: the Latin capitals.
pub const MAX_ALPHABET: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// The first `size` uppercase Latin letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Alphabet {
    size: u8,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self, SchemaError> {
        if size == 0 || size > MAX_ALPHABET {
            return Err(SchemaError::InvalidParameter(format!(
                "alphabet size must be in 1..=26, got {size}"
            )));
        }
        Ok(Alphabet { size: size as u8 })
    }

    pub fn latin() -> Self {
        Alphabet { size: MAX_ALPHABET as u8 }
    }

    pub fn size(&self) -> usize {
        self.size as usize
    }

    pub fn contains(&self, letter: u8) -> bool {
        letter < self.size
    }

    pub fn letters(&self) -> impl Iterator<Item = char> {
        (0..self.size).map(letter_char)
    }
}

impl TryFrom<usize> for Alphabet {
    type Error = SchemaError;
    fn try_from(size: usize) -> Result<Self, Self::Error> {
        Alphabet::new(size)
    }
}

impl From<Alphabet> for usize {
    fn from(a: Alphabet) -> usize {
        a.size()
    }
}

pub fn letter_char(letter: u8) -> char {
    (b'A' + letter) as char
}

/// A nonempty string of letters from an alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Challenge {
    letters: Vec<u8>,
}

impl Challenge {
    pub fn new(alphabet: &Alphabet, letters: Vec<u8>) -> Result<Self, SchemaError> {
        if letters.is_empty() {
            return Err(SchemaError::InvalidParameter("challenge length must be at least 1".into()));
        }
        if let Some(&bad) = letters.iter().find(|&&l| !alphabet.contains(l)) {
            return Err(SchemaError::InvalidInput(format!(
                "letter index {bad} outside alphabet of size {}",
                alphabet.size()
            )));
        }
        Ok(Challenge { letters })
    }

    pub fn parse(alphabet: &Alphabet, text: &str) -> Result<Self, SchemaError> {
        let mut letters = Vec::with_capacity(text.len());
        for c in text.chars() {
            let u = c.to_ascii_uppercase();
            if !u.is_ascii_uppercase() || !alphabet.contains(u as u8 - b'A') {
                return Err(SchemaError::InvalidInput(format!(
                    "'{c}' is not a letter of the {}-letter alphabet",
                    alphabet.size()
                )));
            }
            letters.push(u as u8 - b'A');
        }
        Challenge::new(alphabet, letters)
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Distinct letters in order of first appearance.
    pub fn distinct_letters(&self) -> Vec<u8> {
        let mut seen = 0u32;
        let mut out = Vec::new();
        for &l in &self.letters {
            if seen & (1 << l) == 0 {
                seen |= 1 << l;
                out.push(l);
            }
        }
        out
    }
}

impl fmt::Display for Challenge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.letters {
            write!(f, "{}", letter_char(l))?;
        }
        Ok(())
    }
}

/// A digit string. Ordering is lexicographic, matching the ordering of the
/// rendered text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Response(Vec<u8>);

impl Response {
    pub fn new(digits: Vec<u8>) -> Result<Self, SchemaError> {
        if let Some(&d) = digits.iter().find(|&&d| d > 9) {
            return Err(SchemaError::InvalidInput(format!("{d} is not a digit")));
        }
        Ok(Response(digits))
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for Response {
    type Err = SchemaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| SchemaError::InvalidInput(format!("'{c}' is not a digit")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Response(digits))
    }
}

impl TryFrom<String> for Response {
    type Error = SchemaError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Response> for String {
    fn from(r: Response) -> String {
        r.to_string()
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &d in &self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// DS3 secret: a letter-to-digit map `f` and a digit permutation `g`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ds3Key {
    f: Vec<u8>,
    g: [u8; 10],
}

impl Ds3Key {
    pub fn new(f: Vec<u8>, g: [u8; 10]) -> Result<Self, SchemaError> {
        check_map(&f)?;
        let mut seen = [false; 10];
        for &d in &g {
            if d > 9 || seen[d as usize] {
                return Err(SchemaError::InvalidParameter(format!("{g:?} is not a permutation of 0..9")));
            }
            seen[d as usize] = true;
        }
        Ok(Ds3Key { f, g })
    }

    pub fn f(&self) -> &[u8] {
        &self.f
    }

    pub fn g(&self) -> &[u8; 10] {
        &self.g
    }

    pub fn g_inverse(&self) -> [u8; 10] {
        let mut inv = [0u8; 10];
        for (x, &y) in self.g.iter().enumerate() {
            inv[y as usize] = x as u8;
        }
        inv
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet { size: self.f.len() as u8 }
    }
}

/// Skip-To-My-Lou secret: a letter-to-digit map `f`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StmlKey {
    f: Vec<u8>,
}

impl StmlKey {
    pub fn new(f: Vec<u8>) -> Result<Self, SchemaError> {
        check_map(&f)?;
        Ok(StmlKey { f })
    }

    pub fn f(&self) -> &[u8] {
        &self.f
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet { size: self.f.len() as u8 }
    }
}

fn check_map(f: &[u8]) -> Result<(), SchemaError> {
    if f.is_empty() || f.len() > MAX_ALPHABET {
        return Err(SchemaError::InvalidParameter(format!(
            "letter map must cover 1..=26 letters, got {}",
            f.len()
        )));
    }
    if let Some(&d) = f.iter().find(|&&d| d > 9) {
        return Err(SchemaError::InvalidParameter(format!("map value {d} is not a digit")));
    }
    Ok(())
}

fn check_letters(challenge: &Challenge, m: usize) -> Result<(), SchemaError> {
    match challenge.letters.iter().find(|&&l| l as usize >= m) {
        Some(&l) => Err(SchemaError::InvalidInput(format!(
            "letter {} outside the key's {m}-letter alphabet",
            letter_char(l)
        ))),
        None => Ok(()),
    }
}

pub fn sample_challenge<R: Rng + ?Sized>(
    rng: &mut R,
    alphabet: &Alphabet,
    length: usize,
) -> Result<Challenge, SchemaError> {
    if length < 1 {
        return Err(SchemaError::InvalidParameter("challenge length must be at least 1".into()));
    }
    let m = alphabet.size() as u8;
    let letters = (0..length).map(|_| rng.gen_range(0..m)).collect();
    Ok(Challenge { letters })
}

pub fn ds3_sample_key<R: Rng + ?Sized>(rng: &mut R, alphabet: &Alphabet) -> Ds3Key {
    let f = (0..alphabet.size()).map(|_| rng.gen_range(0..10u8)).collect();
    let mut g = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9];
    g.shuffle(rng);
    Ds3Key { f, g }
}

pub fn stml_sample_key<R: Rng + ?Sized>(rng: &mut R, alphabet: &Alphabet) -> StmlKey {
    let f = (0..alphabet.size()).map(|_| rng.gen_range(0..10u8)).collect();
    StmlKey { f }
}

/// `b_1 = g(f(A_1) + f(A_L))`, then `b_i = g(f(A_i) + b_{i-1})`.
pub fn ds3_respond(key: &Ds3Key, challenge: &Challenge) -> Result<Response, SchemaError> {
    check_letters(challenge, key.f.len())?;
    Ok(Response(ds3_digits(&key.f, &key.g, &challenge.letters)))
}

pub(crate) fn ds3_digits(f: &[u8], g: &[u8; 10], letters: &[u8]) -> Vec<u8> {
    let last = *letters.last().expect("nonempty challenge");
    let mut out = Vec::with_capacity(letters.len());
    let mut prev = g[((f[letters[0] as usize] + f[last as usize]) % 10) as usize];
    out.push(prev);
    for &a in &letters[1..] {
        prev = g[((f[a as usize] + prev) % 10) as usize];
        out.push(prev);
    }
    out
}

/// Running total of `f` modulo 10, emitting the total whenever it is at
/// least 5.
pub fn stml_respond(key: &StmlKey, challenge: &Challenge) -> Result<Response, SchemaError> {
    check_letters(challenge, key.f.len())?;
    Ok(Response(stml_digits(&key.f, &challenge.letters)))
}

pub(crate) fn stml_digits(f: &[u8], letters: &[u8]) -> Vec<u8> {
    let mut s = 0u8;
    let mut out = Vec::new();
    for &a in letters {
        s = (s + f[a as usize]) % 10;
        if s >= 5 {
            out.push(s);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaKind {
    Ds3,
    Stml,
}

impl fmt::Display for SchemaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemaKind::Ds3 => "ds3",
            SchemaKind::Stml => "stml",
        })
    }
}

impl FromStr for SchemaKind {
    type Err = SchemaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ds3" => Ok(SchemaKind::Ds3),
            "stml" => Ok(SchemaKind::Stml),
            other => Err(SchemaError::InvalidParameter(format!("unknown schema '{other}'"))),
        }
    }
}

/// A schema together with its alphabet and challenge length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemaId {
    pub kind: SchemaKind,
    pub alphabet: Alphabet,
    pub length: usize,
}

impl SchemaId {
    pub fn new(kind: SchemaKind, alphabet: Alphabet, length: usize) -> Result<Self, SchemaError> {
        if length < 1 {
            return Err(SchemaError::InvalidParameter("challenge length must be at least 1".into()));
        }
        Ok(SchemaId { kind, alphabet, length })
    }

    pub fn sample_key<R: Rng + ?Sized>(&self, rng: &mut R) -> SecretKey {
        match self.kind {
            SchemaKind::Ds3 => SecretKey::Ds3(ds3_sample_key(rng, &self.alphabet)),
            SchemaKind::Stml => SecretKey::Stml(stml_sample_key(rng, &self.alphabet)),
        }
    }

    pub fn sample_challenge<R: Rng + ?Sized>(&self, rng: &mut R) -> Challenge {
        sample_challenge(rng, &self.alphabet, self.length).expect("length validated at construction")
    }

    /// Number of distinct secret keys, saturating at `u128::MAX`.
    pub fn key_space_size(&self) -> u128 {
        let f = 10u128.saturating_pow(self.alphabet.size() as u32);
        match self.kind {
            SchemaKind::Ds3 => f.saturating_mul(3_628_800),
            SchemaKind::Stml => f,
        }
    }
}

/// Either schema's secret.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SecretKey {
    Ds3(Ds3Key),
    Stml(StmlKey),
}

impl SecretKey {
    pub fn respond(&self, challenge: &Challenge) -> Result<Response, SchemaError> {
        match self {
            SecretKey::Ds3(k) => ds3_respond(k, challenge),
            SecretKey::Stml(k) => stml_respond(k, challenge),
        }
    }

    pub fn kind(&self) -> SchemaKind {
        match self {
            SecretKey::Ds3(_) => SchemaKind::Ds3,
            SecretKey::Stml(_) => SchemaKind::Stml,
        }
    }

    pub fn f(&self) -> &[u8] {
        match self {
            SecretKey::Ds3(k) => k.f(),
            SecretKey::Stml(k) => k.f(),
        }
    }
}

/// Base-10 logarithm of the key space using the customary accounting: DS3
/// counts `10^m` letter maps times `9!` permutations (the figure usually
/// quoted for DS3, although `g` ranges over all `10!` permutations); STML
/// counts `10^m`.
pub fn key_space_log10(schema: &SchemaId) -> f64 {
    let m = schema.alphabet.size() as f64;
    match schema.kind {
        SchemaKind::Ds3 => m + (362_880f64).log10(),
        SchemaKind::Stml => m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn abc() -> Alphabet {
        Alphabet::new(3).unwrap()
    }

    #[test]
    fn alphabet_bounds() {
        assert!(Alphabet::new(0).is_err());
        assert!(Alphabet::new(27).is_err());
        let a = Alphabet::new(4).unwrap();
        assert_eq!(a.letters().collect::<String>(), "ABCD");
    }

    #[test]
    fn challenge_rejects_foreign_letters() {
        assert!(matches!(Challenge::parse(&abc(), "ABD"), Err(SchemaError::InvalidInput(_))));
        assert!(matches!(Challenge::parse(&abc(), "A1"), Err(SchemaError::InvalidInput(_))));
        assert!(Challenge::parse(&abc(), "").is_err());
        assert_eq!(Challenge::parse(&abc(), "cab").unwrap().to_string(), "CAB");
    }

    #[test]
    fn single_letter_alphabet_forces_string() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Alphabet::new(1).unwrap();
        assert_eq!(sample_challenge(&mut rng, &a, 4).unwrap().to_string(), "AAAA");
        assert!(matches!(
            sample_challenge(&mut rng, &a, 0),
            Err(SchemaError::InvalidParameter(_))
        ));
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = Alphabet::latin();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (
                sample_challenge(&mut rng, &a, 10).unwrap(),
                ds3_sample_key(&mut rng, &a),
                stml_sample_key(&mut rng, &a),
            )
        };
        assert_eq!(draw(42), draw(42));
        assert_eq!(draw(42).0.len(), 10);
    }

    #[test]
    fn ds3_hand_examples() {
        let id = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9];
        let zero = Ds3Key::new(vec![0; 3], id).unwrap();
        let c = Challenge::parse(&abc(), "ABCAB").unwrap();
        assert_eq!(ds3_respond(&zero, &c).unwrap().to_string(), "00000");

        let k = Ds3Key::new(vec![1, 2, 0], id).unwrap();
        let ab = Challenge::parse(&abc(), "AB").unwrap();
        assert_eq!(ds3_respond(&k, &ab).unwrap().to_string(), "35");

        let k = Ds3Key::new(vec![7, 8, 0], id).unwrap();
        assert_eq!(ds3_respond(&k, &ab).unwrap().to_string(), "53");
    }

    #[test]
    fn ds3_single_letter_doubles() {
        let id = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9];
        let k = Ds3Key::new(vec![7], id).unwrap();
        let c = Challenge::parse(&Alphabet::new(1).unwrap(), "A").unwrap();
        assert_eq!(ds3_respond(&k, &c).unwrap().to_string(), "4");
    }

    #[test]
    fn stml_hand_examples() {
        let c2 = Challenge::parse(&abc(), "AB").unwrap();
        assert!(stml_respond(&StmlKey::new(vec![0; 3]).unwrap(), &c2).unwrap().is_empty());
        assert_eq!(
            stml_respond(&StmlKey::new(vec![5; 3]).unwrap(), &c2).unwrap().to_string(),
            "5"
        );
        let k = StmlKey::new(vec![3, 4, 9]).unwrap();
        let c = Challenge::parse(&abc(), "ABC").unwrap();
        assert_eq!(stml_respond(&k, &c).unwrap().to_string(), "76");
    }

    #[test]
    fn foreign_letter_is_invalid_input() {
        let big = Alphabet::new(5).unwrap();
        let c = Challenge::parse(&big, "AE").unwrap();
        let k = StmlKey::new(vec![1; 3]).unwrap();
        assert!(matches!(stml_respond(&k, &c), Err(SchemaError::InvalidInput(_))));
        let k = Ds3Key::new(vec![1; 3], [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]).unwrap();
        assert!(matches!(ds3_respond(&k, &c), Err(SchemaError::InvalidInput(_))));
    }

    #[test]
    fn key_validation() {
        assert!(Ds3Key::new(vec![1], [0, 0, 2, 3, 4, 5, 6, 7, 8, 9]).is_err());
        assert!(StmlKey::new(vec![10]).is_err());
        assert!(StmlKey::new(vec![]).is_err());
    }

    #[test]
    fn key_space_accounting() {
        let ds3 = SchemaId::new(SchemaKind::Ds3, Alphabet::latin(), 10).unwrap();
        assert!((key_space_log10(&ds3) - 31.56).abs() < 0.01);
        let stml = SchemaId::new(SchemaKind::Stml, Alphabet::latin(), 10).unwrap();
        assert_eq!(key_space_log10(&stml), 26.0);
        let ds3_1 = SchemaId::new(SchemaKind::Ds3, Alphabet::new(1).unwrap(), 3).unwrap();
        assert!((key_space_log10(&ds3_1) - (1.0 + 362_880f64.log10())).abs() < 1e-12);
        assert!((key_space_log10(&ds3_1) - 6.56).abs() < 0.005);
        assert_eq!(ds3_1.key_space_size(), 36_288_000);
    }

    #[test]
    fn response_text_round_trip() {
        let r: Response = "0597".parse().unwrap();
        assert_eq!(r.digits(), &[0, 5, 9, 7]);
        assert_eq!(r.to_string(), "0597");
        assert!("5a".parse::<Response>().is_err());
        assert!(Response::new(vec![10]).is_err());
    }
}

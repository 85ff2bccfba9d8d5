use std::fmt;

const MASK: u16 = 0x3ff;

/// A subset of the digits `0..=9`, stored as a 10-bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DigitSet(u16);

impl DigitSet {
    pub const EMPTY: DigitSet = DigitSet(0);
    pub const ALL: DigitSet = DigitSet(MASK);

    pub fn from_bits(bits: u16) -> Self {
        DigitSet(bits & MASK)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn single(d: u8) -> Self {
        debug_assert!(d < 10);
        DigitSet(1 << d)
    }

    /// Digits `lo..=hi`.
    pub fn range(lo: u8, hi: u8) -> Self {
        (lo..=hi.min(9)).collect()
    }

    pub fn contains(self, d: u8) -> bool {
        d < 10 && self.0 & (1 << d) != 0
    }

    pub fn insert(&mut self, d: u8) {
        self.0 |= 1 << d;
    }

    pub fn remove(&mut self, d: u8) {
        self.0 &= !(1 << d);
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// The only member, if there is exactly one.
    pub fn value(self) -> Option<u8> {
        (self.0.count_ones() == 1).then(|| self.0.trailing_zeros() as u8)
    }

    pub fn min(self) -> Option<u8> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as u8)
    }

    pub fn iter(self) -> impl Iterator<Item = u8> {
        (0..10u8).filter(move |&d| self.0 & (1 << d) != 0)
    }

    pub fn union(self, other: DigitSet) -> DigitSet {
        DigitSet(self.0 | other.0)
    }

    pub fn intersect(self, other: DigitSet) -> DigitSet {
        DigitSet(self.0 & other.0)
    }

    /// `{ d + k mod 10 : d in self }`.
    pub fn shift(self, k: u8) -> DigitSet {
        let k = (k % 10) as u32;
        if k == 0 {
            return self;
        }
        let b = self.0 as u32;
        DigitSet((((b << k) | (b >> (10 - k))) as u16) & MASK)
    }

    /// `{ c * d mod 10 : d in self }`.
    pub fn scale(self, c: u8) -> DigitSet {
        match c % 10 {
            1 => self,
            c => self.iter().map(|d| (c * d) % 10).collect(),
        }
    }

    /// `{ -d mod 10 : d in self }`.
    pub fn negate(self) -> DigitSet {
        self.iter().map(|d| (10 - d) % 10).collect()
    }

    /// Minkowski sum modulo 10.
    pub fn add(self, other: DigitSet) -> DigitSet {
        if self.0 == MASK && other.0 != 0 {
            return self;
        }
        let mut out = DigitSet::EMPTY;
        for d in other.iter() {
            out.0 |= self.shift(d).0;
            if out.0 == MASK {
                break;
            }
        }
        out
    }
}

impl FromIterator<u8> for DigitSet {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        let mut s = DigitSet::EMPTY;
        for d in iter {
            s.insert(d % 10);
        }
        s
    }
}

impl fmt::Debug for DigitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for DigitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, d) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        f.write_str("}")
    }
}

//! Constraint sets hidden in an STML challenge-response pair.
//!
//! A response of length `k` to a challenge of length `L` says that exactly
//! `k` of the `L` running totals were at least 5, without saying which. Each
//! choice of output positions yields one candidate constraint set.

use crate::modcsp::{Constraint, DigitSet, FuncVar, LinExpr};
use crate::schema::{Challenge, Response};

use super::AttackError;

/// Output positions (0-based, strictly increasing) assumed for one pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetChoice {
    positions: Vec<usize>,
}

impl SubsetChoice {
    pub fn new(positions: Vec<usize>, length: usize) -> Result<Self, AttackError> {
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AttackError::InvalidChoice("positions must be strictly increasing".into()));
        }
        if positions.last().is_some_and(|&p| p >= length) {
            return Err(AttackError::InvalidChoice(format!("position outside a challenge of length {length}")));
        }
        Ok(SubsetChoice { positions })
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Output positions actually used by a key on a challenge.
    pub fn of_key(f: &[u8], challenge: &Challenge) -> SubsetChoice {
        let mut s = 0u8;
        let mut positions = Vec::new();
        for (i, &a) in challenge.letters().iter().enumerate() {
            s = (s + f[a as usize]) % 10;
            if s >= 5 {
                positions.push(i);
            }
        }
        SubsetChoice { positions }
    }
}

/// All `C(length, outputs)` choices of output positions, in lexicographic
/// order.
pub fn stml_subsets(length: usize, outputs: usize) -> Result<Subsets, AttackError> {
    if outputs > length {
        return Err(AttackError::InvalidParameter(format!(
            "cannot choose {outputs} output positions out of {length}"
        )));
    }
    Ok(Subsets { length, current: Some((0..outputs).collect()) })
}

pub struct Subsets {
    length: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for Subsets {
    type Item = SubsetChoice;

    fn next(&mut self) -> Option<SubsetChoice> {
        let cur = self.current.take()?;
        let k = cur.len();
        let mut next = cur.clone();
        // advance the rightmost position that still has room
        let mut i = k;
        while i > 0 {
            i -= 1;
            if next[i] < self.length - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(SubsetChoice { positions: cur })
    }
}

/// Checks that `response` could be an STML response to `challenge`.
pub(crate) fn check_stml_pair(challenge: &Challenge, response: &Response) -> Result<(), AttackError> {
    if response.len() > challenge.len() {
        return Err(AttackError::InvalidPair(format!(
            "response of length {} is longer than the challenge",
            response.len()
        )));
    }
    if response.digits().iter().any(|&d| d < 5) {
        return Err(AttackError::InvalidPair(format!("STML never outputs digits below 5: {response}")));
    }
    Ok(())
}

/// Constraints implied by assuming `choice` for the pair: at the `j`-th
/// chosen position the running total equals `b_j`; at every other position it
/// lies in `0..=4`.
pub fn stml_constraints_for_subset(
    f: &FuncVar,
    challenge: &Challenge,
    response: &Response,
    choice: &SubsetChoice,
) -> Result<Vec<Constraint>, AttackError> {
    check_stml_pair(challenge, response)?;
    if choice.len() != response.len() {
        return Err(AttackError::InvalidChoice(format!(
            "choice has {} positions but the response has {} digits",
            choice.len(),
            response.len()
        )));
    }
    if choice.positions.last().is_some_and(|&p| p >= challenge.len()) {
        return Err(AttackError::InvalidChoice("position outside the challenge".into()));
    }
    let mut out = Vec::with_capacity(challenge.len());
    let mut prefix = LinExpr::default();
    let mut next = 0;
    for (i, &a) in challenge.letters().iter().enumerate() {
        prefix = prefix.plus_var(f.at(a as usize));
        if choice.positions.get(next) == Some(&i) {
            out.push(Constraint::mod_eq(prefix.clone(), response.digits()[next]));
            next += 1;
        } else {
            out.push(Constraint::member(prefix.clone(), DigitSet::range(0, 4)));
        }
    }
    Ok(out)
}

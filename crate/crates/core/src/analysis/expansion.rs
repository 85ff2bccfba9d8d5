//! Expansion factor of STML and the k bound.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::schema::{sample_challenge, stml_respond, stml_sample_key, Alphabet};

/// `F_L` as an exact rational and as the nearest double.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionExact {
    pub length: usize,
    pub exact: BigRational,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionEstimate {
    pub length: usize,
    pub samples: u64,
    pub mean: f64,
    /// Half-width of the 95% normal confidence interval.
    pub half_width: f64,
}

impl ExpansionEstimate {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.half_width
    }
}

fn binomial(n: usize, k: usize) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `F_L = (1 / 2^L) * sum_i C(L, i)^2`.
pub fn expansion_factor_exact(length: usize) -> ExpansionExact {
    let mut sum = BigUint::zero();
    for i in 0..=length {
        let c = binomial(length, i);
        sum += &c * &c;
    }
    let exact = BigRational::new(sum.into(), (BigUint::one() << length).into());
    let value = exact.to_f64().unwrap_or(f64::INFINITY);
    ExpansionExact { length, exact, value }
}

/// `C(2L, L) / 2^L`, the closed form of the same sum.
pub fn central_binomial_form(length: usize) -> BigRational {
    BigRational::new(binomial(2 * length, length).into(), (BigUint::one() << length).into())
}

const SHARD: u64 = 10_000;

/// Average of `C(L, |response|)` over random STML keys and challenges on the
/// full alphabet. Shards of 10 000 samples run in parallel, each with its own
/// stream of the seeded generator.
pub fn expansion_factor_mc(length: usize, samples: u64, seed: u64) -> ExpansionEstimate {
    let alphabet = Alphabet::latin();
    let weights: Vec<f64> = (0..=length).map(|k| binomial(length, k).to_f64().unwrap_or(f64::MAX)).collect();
    let shards = samples.div_ceil(SHARD);
    let (sum, sum_sq) = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let n = SHARD.min(samples - s * SHARD);
            let mut acc = (0.0, 0.0);
            for _ in 0..n {
                let key = stml_sample_key(&mut rng, &alphabet);
                let c = sample_challenge(&mut rng, &alphabet, length).expect("length >= 1");
                let w = weights[stml_respond(&key, &c).expect("same alphabet").len()];
                acc.0 += w;
                acc.1 += w * w;
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 { (sum_sq - n * mean * mean).max(0.0) / (n - 1.0) } else { 0.0 };
    ExpansionEstimate { length, samples, mean, half_width: 1.96 * (var / n).sqrt() }
}

/// `k = 2 log2(10^m) / (L log2 5)` and its ceiling.
pub fn k_upper_bound(m: usize, length: usize) -> (f64, u64) {
    let k = 2.0 * (m as f64) * 10f64.log2() / (length as f64 * 5f64.log2());
    (k, k.ceil() as u64)
}

/// Two-column CSV of `F_L` for each length.
pub fn expansion_csv<I: IntoIterator<Item = usize>>(lengths: I) -> String {
    let mut out = String::from("L,F_L\n");
    for l in lengths {
        out.push_str(&format!("{},{}\n", l, expansion_factor_exact(l).value));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_values() {
        assert_eq!(expansion_factor_exact(0).value, 1.0);
        assert_eq!(expansion_factor_exact(3).value, 2.5);
        assert_eq!(expansion_factor_exact(4).value, 4.375);
        assert_eq!(expansion_factor_exact(5).value, 7.875);
        assert!((expansion_factor_exact(10).value - 180.43).abs() < 0.005);
        assert!((expansion_factor_exact(20).value - 131_460.7).abs() < 0.05);
    }

    #[test]
    fn summation_equals_central_binomial() {
        for l in 0..=64 {
            assert_eq!(expansion_factor_exact(l).exact, central_binomial_form(l), "L = {l}");
        }
    }

    #[test]
    fn strictly_increasing() {
        let v: Vec<BigRational> = (1..=40).map(|l| expansion_factor_exact(l).exact).collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn k_column() {
        let got: Vec<u64> = [3, 4, 5, 10, 20].iter().map(|&l| k_upper_bound(26, l).1).collect();
        assert_eq!(got, vec![25, 19, 15, 8, 4]);
    }

    #[test]
    fn k_monotone() {
        for l in 1..30 {
            assert!(k_upper_bound(26, l).0 > k_upper_bound(26, l + 1).0);
        }
        for m in 1..26 {
            assert!(k_upper_bound(m, 7).0 < k_upper_bound(m + 1, 7).0);
        }
    }

    #[test]
    fn single_letter_mc_is_exactly_one() {
        let e = expansion_factor_mc(1, 1000, 3);
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.half_width, 0.0);
    }

    #[test]
    fn csv_rows() {
        assert_eq!(expansion_csv(3..=5), "L,F_L\n3,2.5\n4,4.375\n5,7.875\n");
        assert_eq!(expansion_csv([0]), "L,F_L\n0,1\n");
    }
}

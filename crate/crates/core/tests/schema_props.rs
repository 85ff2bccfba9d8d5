#[path = "support/mod.rs"]
mod support;

use hcschema::schema::{ds3_respond, stml_respond};
use hcschema::{Alphabet, Challenge, Ds3Key, StmlKey};
use proptest::prelude::*;
use support::{ds3_reference, stml_reference};

fn perm() -> impl Strategy<Value = [u8; 10]> {
    Just((0..10u8).collect::<Vec<_>>()).prop_shuffle().prop_map(|v| v.try_into().unwrap())
}

fn instance(max_len: usize) -> impl Strategy<Value = (usize, Vec<u8>, Vec<u8>)> {
    (1usize..=26).prop_flat_map(move |m| {
        (
            Just(m),
            prop::collection::vec(0u8..10, m),
            prop::collection::vec(0..m as u8, 1..=max_len),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn ds3_matches_reference((m, f, letters) in instance(20), g in perm()) {
        let c = Challenge::new(&Alphabet::new(m).unwrap(), letters.clone()).unwrap();
        let key = Ds3Key::new(f.clone(), g).unwrap();
        let r = ds3_respond(&key, &c).unwrap();
        prop_assert_eq!(r.len(), letters.len());
        prop_assert_eq!(r.digits().to_vec(), ds3_reference(&f, &g, &letters));
        prop_assert_eq!(r, ds3_respond(&key, &c).unwrap());
    }

    #[test]
    fn stml_matches_reference((m, f, letters) in instance(20)) {
        let c = Challenge::new(&Alphabet::new(m).unwrap(), letters.clone()).unwrap();
        let key = StmlKey::new(f.clone()).unwrap();
        let r = stml_respond(&key, &c).unwrap();
        prop_assert!(r.len() <= letters.len());
        prop_assert!(r.digits().iter().all(|&d| (5..=9).contains(&d)));
        prop_assert_eq!(r.digits().to_vec(), stml_reference(&f, &letters));
        prop_assert_eq!(r, stml_respond(&key, &c).unwrap());
    }

    #[test]
    fn stml_outputs_are_prefix_sums((m, f, letters) in instance(20)) {
        let c = Challenge::new(&Alphabet::new(m).unwrap(), letters.clone()).unwrap();
        let r = stml_respond(&StmlKey::new(f.clone()).unwrap(), &c).unwrap();
        let mut out = r.digits().iter();
        for j in 0..letters.len() {
            let s = letters[..=j].iter().map(|&a| f[a as usize] as u32).sum::<u32>() % 10;
            if s >= 5 {
                prop_assert_eq!(out.next().copied(), Some(s as u8));
            }
        }
        prop_assert!(out.next().is_none());
    }

    #[test]
    fn ds3_recurrence_inverts((m, f, letters) in instance(20), g in perm()) {
        let c = Challenge::new(&Alphabet::new(m).unwrap(), letters.clone()).unwrap();
        let key = Ds3Key::new(f.clone(), g).unwrap();
        let b = ds3_respond(&key, &c).unwrap();
        let b = b.digits();
        let inv = key.g_inverse();
        for i in 1..letters.len() {
            let recovered = (inv[b[i] as usize] + 10 - b[i - 1]) % 10;
            prop_assert_eq!(recovered, f[letters[i] as usize]);
        }
    }
}

use chainpart::graph23::neighbors;
use chainpart::{
    chain_pow, lattice_decode, lattice_encode, sample_uniform, sigma, tree_decode, tree_encode,
    validate, w_amount, w_general, w_p2, Partition, PQSystem, RawMultiset,
};
use num_bigint::BigUint;
use proptest::prelude::*;

fn system() -> impl Strategy<Value = PQSystem> {
    prop_oneof![
        Just((2u64, 3u64)),
        Just((2, 5)),
        Just((2, 9)),
        Just((3, 4)),
        Just((3, 5)),
        Just((5, 7)),
    ]
    .prop_map(|(p, q)| PQSystem::new(p, q).unwrap())
}

fn p2_system() -> impl Strategy<Value = PQSystem> {
    prop_oneof![Just(3u64), Just(5), Just(7), Just(9), Just(11)].prop_map(|q| PQSystem::new(2, q).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sparse_engines_agree(sys in p2_system(), u in 0u128..1_000_000_000_000) {
        let g = w_general(u, &sys).unwrap();
        prop_assert_eq!(&g, &w_p2(u, &sys).unwrap());
        prop_assert_eq!(&g, &w_amount(u, &sys).unwrap());
    }

    #[test]
    fn general_matches_amount(sys in system(), u in 0u128..10_000_000_000) {
        prop_assert_eq!(w_general(u, &sys).unwrap(), w_amount(u, &sys).unwrap());
    }

    #[test]
    fn samples_are_valid_and_round_trip(sys in system(), u in 1u128..1_000_000_000, seed: u64) {
        if w_general(u, &sys).unwrap() == BigUint::from(0u32) {
            prop_assert!(sample_uniform(u, &sys, seed).is_err());
            return Ok(());
        }
        let pt = sample_uniform(u, &sys, seed).unwrap();
        prop_assert_eq!(pt.value_u128(&sys), Some(u));
        let raw = RawMultiset::from_u128s(pt.values(&sys).iter().map(|v| v.try_into().unwrap()));
        prop_assert_eq!(&validate(&raw, &sys).unwrap(), &pt);
        prop_assert_eq!(&lattice_decode(lattice_encode(&pt).unwrap().as_str()).unwrap(), &pt);
        if sys.p() == 2 {
            let w = tree_encode(&pt, &sys).unwrap();
            prop_assert_eq!(tree_decode(&w, &sys).unwrap(), (u, pt));
        }
    }

    #[test]
    fn sigma_witness_is_shortest_member(sys in system(), u in 2u128..1_000_000_000_000) {
        match sigma(u, &sys) {
            Ok(r) => {
                prop_assert_eq!(r.witness.len() as u32, r.sigma);
                prop_assert_eq!(r.witness.value_u128(&sys), Some(u));
            }
            Err(_) => prop_assert_eq!(w_general(u, &sys).unwrap(), BigUint::from(0u32)),
        }
    }

    #[test]
    fn chain_pow_matches_modpow(g in 2u64..1000, u in 1u128..1_000_000_000_000, m in 2u64..u64::MAX) {
        let sys = PQSystem::new(2, 3).unwrap();
        let (g, m) = (BigUint::from(g), BigUint::from(m));
        let r = chain_pow(&g, u, &m, &sys).unwrap();
        prop_assert_eq!(r.value, g.modpow(&BigUint::from(u), &m));
    }

    #[test]
    fn neighbors_are_symmetric(u in 2u128..100_000, seed: u64) {
        let sys = PQSystem::new(2, 3).unwrap();
        let pt = sample_uniform(u, &sys, seed).unwrap();
        for n in neighbors(&pt, &sys).unwrap() {
            prop_assert_eq!(n.value_u128(&sys), Some(u));
            prop_assert!(neighbors(&n, &sys).unwrap().contains(&pt));
        }
    }

    #[test]
    fn validate_rejects_non_chains(a in 0u32..10, b in 0u32..10, c in 0u32..10, d in 0u32..10) {
        let sys = PQSystem::new(2, 3).unwrap();
        let raw = RawMultiset::from_u128s([2u128.pow(a) * 3u128.pow(b), 2u128.pow(c) * 3u128.pow(d)]);
        let chained = (a, b) != (c, d) && ((a <= c && b <= d) || (c <= a && d <= b));
        prop_assert_eq!(validate(&raw, &sys).is_ok(), chained);
        if chained {
            let want = Partition::from_exponents(if a >= c && b >= d {
                [(a, b), (c, d)]
            } else {
                [(c, d), (a, b)]
            }).unwrap();
            prop_assert_eq!(validate(&raw, &sys).unwrap(), want);
        }
    }
}

use std::collections::BTreeSet;

use proptest::prelude::*;

use fip_core::format::parse_family;
use fip_core::gen::{self, clustered_family, marker_family};
use fip_core::oracle::{brute_force_maximal, brute_force_maximal_with, law_violations, oracle_holds, oracle_is_maximal};
use fip_core::par::Exec;
use fip_core::property::{check_property_on, is_maximal};
use fip_core::reductions::{hat_transform, sufficient_stages};
use fip_core::{Family, IntersectionProperty};

fn family(seed: u64, i: usize, u: u64, clustered: bool) -> Family {
    let mut rng = gen::rng(seed);
    let u = u.max(2 * i as u64);
    if clustered {
        clustered_family(&mut rng, i, u).unwrap()
    } else {
        marker_family(&mut rng, i, u, 0.35).unwrap()
    }
}

fn prop_strategy() -> impl Strategy<Value = IntersectionProperty> {
    prop_oneof![
        Just(IntersectionProperty::F),
        (2usize..=3).prop_map(IntersectionProperty::D),
        (2usize..=3).prop_map(IntersectionProperty::DBar),
    ]
}

fn subset(mask: u32, n: usize) -> BTreeSet<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn property_check_matches_exhaustive_search(
        seed in any::<u64>(), i in 1usize..=6, u in 4u64..=24, clustered in any::<bool>(),
        prop in prop_strategy(), mask in any::<u32>(),
    ) {
        let a = family(seed, i, u, clustered);
        let chosen = subset(mask, i);
        let fast = check_property_on(&a, &chosen, prop).unwrap().holds;
        prop_assert_eq!(fast, oracle_holds(&a, &chosen, prop).unwrap());
    }

    #[test]
    fn maximality_matches_exhaustive_search(
        seed in any::<u64>(), i in 1usize..=6, u in 4u64..=24, clustered in any::<bool>(),
        prop in prop_strategy(),
    ) {
        let a = family(seed, i, u, clustered);
        for sol in brute_force_maximal(&a, prop).unwrap() {
            prop_assert!(is_maximal(&a, &sol, prop).unwrap().maximal);
        }
        for mask in 0u32..(1 << i) {
            let chosen = subset(mask, i);
            if !oracle_holds(&a, &chosen, prop).unwrap() {
                continue;
            }
            let v = is_maximal(&a, &chosen, prop).unwrap();
            prop_assert_eq!(v.maximal, oracle_is_maximal(&a, &chosen, prop).unwrap());
        }
    }

    #[test]
    fn hat_transform_satisfies_the_intersection_law(
        seed in any::<u64>(), i in 1usize..=4, u in 4u64..=16, n in 2usize..=3,
    ) {
        let a = family(seed, i, u, seed % 2 == 0);
        let hat = hat_transform(&a, n, sufficient_stages(&a)).unwrap();
        prop_assert!(law_violations(&a, &hat.family, n).unwrap().is_empty());
    }
}

#[test]
fn sequential_and_parallel_oracles_agree() {
    for seed in 0..40 {
        let a = family(seed, 6, 20, seed % 3 == 0);
        for prop in [IntersectionProperty::F, IntersectionProperty::D(2), IntersectionProperty::DBar(3)] {
            let s = brute_force_maximal_with(&a, prop, Exec::Sequential).unwrap();
            let p = brute_force_maximal_with(&a, prop, Exec::Parallel).unwrap();
            assert_eq!(s, p);
        }
    }
}

#[test]
fn small_chain_has_two_maximal_f_solutions() {
    let a = parse_family("family v1 I=3 U=5\nset 0: 0 1\nset 1: 1 2\nset 2: 3 4\n").unwrap();
    let sols = brute_force_maximal(&a, IntersectionProperty::F).unwrap();
    assert_eq!(sols, vec![BTreeSet::from([0, 1]), BTreeSet::from([2])]);
}

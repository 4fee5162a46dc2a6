mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;

use profitlab::lp::{solve_lp, DirectMechanism};
use profitlab::mechanisms::{search_best, Kind};
use profitlab::model::{Family, Instance};
use profitlab::oracles::{brute_posted_price_opt, direct_benchmark_recompute, example_1_1, ip_opt_additive, pb_opt_additive};
use profitlab::rational::{frac, int};
use profitlab::Q;

/// PB optimum for the example: a bundle holder gets the free item, worth `Σ t / m` in
/// expectation, so the profit is `max_δ δ·Pr[Σ t ≥ m·δ]` over achievable sums.
fn example_pb_by_convolution(m: usize, k: u32) -> Q {
    let mut sums: BTreeMap<i64, Q> = BTreeMap::from([(0, int(1))]);
    let values: Vec<(i64, Q)> =
        (0..=k).map(|e| (1i64 << e, if e == k { frac(1, 1 << k) } else { frac(1, 1 << (e + 1)) })).collect();
    for _ in 0..m {
        let mut next = BTreeMap::new();
        for (s, p) in &sums {
            for (v, pv) in &values {
                *next.entry(s + v).or_insert_with(|| int(0)) += p * pv;
            }
        }
        sums = next;
    }
    sums.keys()
        .map(|&s| frac(s, m as i64) * sums.range(s..).map(|(_, p)| p.clone()).sum::<Q>())
        .max()
        .unwrap()
}

#[test]
fn three_quarters_every_simple_optimum() {
    let inst = three_quarters();
    for kind in [Kind::Ip, Kind::Pp, Kind::Pb] {
        assert_eq!(brute_posted_price_opt(&inst, kind).unwrap().value, q("3/4"), "{kind:?}");
    }
}

#[test]
fn worthless_instance_earns_nothing() {
    let inst = Instance::new(vec![vec![point(0)]], fixed_costs(&[0]), vec![Family::additive(1)]).unwrap();
    for kind in [Kind::Ip, Kind::Pp, Kind::Pb] {
        assert_eq!(brute_posted_price_opt(&inst, kind).unwrap().value, int(0));
    }
}

#[test]
fn equal_revenue_prices_all_earn_one() {
    let inst = example_1_1(4, 6).unwrap();
    let d = inst.dist(0, 0);
    assert_eq!(d.len(), 7);
    for p in d.support() {
        assert_eq!(p * d.prob_at_least(p), int(1));
    }
}

#[test]
fn full_revelation_earns_exactly_one() {
    for m in [2, 4, 8] {
        assert_eq!(ip_opt_additive(&example_1_1(m, 6).unwrap()).unwrap().value, int(1), "m = {m}");
    }
}

#[test]
fn bundling_permits_beats_revelation() {
    // Frozen from the convolution oracle above.
    let expected = [(2, "9/8"), (4, "161/128"), (8, "759/512")];
    for (m, value) in expected {
        assert_eq!(example_pb_by_convolution(m, 6), q(value));
        assert_eq!(pb_opt_additive(&example_1_1(m, 6).unwrap()).unwrap().value, q(value), "m = {m}");
    }
    let small = example_1_1(2, 4).unwrap();
    let brute = brute_posted_price_opt(&small, Kind::Pb).unwrap().value;
    assert_eq!(brute, q("9/8"));
    assert!(brute > int(1));
}

#[test]
fn example_rejects_degenerate_sizes() {
    assert!(example_1_1(1, 6).is_err());
    assert!(example_1_1(2, 0).is_err());
}

#[test]
fn zero_mechanism_recomputes_to_zero() {
    let inst = two_buyers_one_item();
    let terms = direct_benchmark_recompute(&inst, &DirectMechanism::zero(&inst)).unwrap();
    assert!(terms.iter().all(|t| t.value == int(0)));
}

#[test]
fn benchmark_recompute_is_consistent_under_item_relabeling() {
    let make = |a: &[i64], b: &[i64], ca: i64, cb: i64| {
        Instance::new(vec![vec![uniform(a), uniform(b)]], fixed_costs(&[ca, cb]), vec![Family::unit_demand(2)])
            .unwrap()
    };
    let inst = make(&[1, 2], &[3, 6], 0, 1);
    let swapped = make(&[3, 6], &[1, 2], 1, 0);
    let a = solve_lp(&inst).unwrap();
    let b = solve_lp(&swapped).unwrap();
    assert_eq!(a.objective, b.objective);
    let ta = direct_benchmark_recompute(&inst, &a.mechanism).unwrap();
    let tb = direct_benchmark_recompute(&swapped, &b.mechanism).unwrap();
    let total = |t: &[profitlab::oracles::OracleResult; 3]| t.iter().map(|r| r.value.clone()).sum::<Q>();
    assert!(total(&ta) >= a.objective && total(&tb) >= b.objective);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The decomposed search and the joint brute force agree on the optimum.
    #[test]
    fn search_matches_brute_force(inst in arb_instance(1..=1, 1..=2, 2, 2, Families::DownwardClosed)) {
        for kind in [Kind::Ip, Kind::Pp, Kind::Pb] {
            let brute = brute_posted_price_opt(&inst, kind).unwrap();
            let search = search_best(&inst, kind, None).unwrap();
            prop_assert_eq!(&search.profit, &brute.value, "{:?}", kind);
        }
    }

    /// For additive buyers the closed forms equal the brute-force optimum.
    #[test]
    fn closed_forms_match_brute_force(inst in arb_instance(1..=1, 1..=2, 2, 2, Families::Additive)) {
        prop_assert_eq!(ip_opt_additive(&inst).unwrap().value, brute_posted_price_opt(&inst, Kind::Ip).unwrap().value);
        prop_assert_eq!(pb_opt_additive(&inst).unwrap().value, brute_posted_price_opt(&inst, Kind::Pb).unwrap().value);
    }
}

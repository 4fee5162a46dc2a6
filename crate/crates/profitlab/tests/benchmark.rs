mod common;

use common::*;
use num_traits::Zero;
use proptest::prelude::*;

use profitlab::benchmark::{
    benchmark_terms, benchmark_thresholds, build_flow, bundle_price, concentration_checks, core_tail_check, core_term,
    ex_ante, regions, tail_prices, tail_term, tau, ExAnte,
};
use profitlab::lp::{solve_lp, DirectMechanism};
use profitlab::model::{bit, Family, Instance};
use profitlab::myerson::ironed_virtual_values;
use profitlab::oracles::direct_benchmark_recompute;
use profitlab::rational::{half, int};
use profitlab::valuation::{vbar, vbar_single, Thresholds, VbarTable};
use profitlab::Q;

/// One buyer who always receives every item, paying nothing.
fn always_allocate(inst: &Instance) -> DirectMechanism {
    let everything = (1u64 << inst.m()) - 1;
    let allocation = (0..inst.profile_count())
        .map(|_| vec![vec![(everything, int(1))]; inst.atoms().len()])
        .collect();
    DirectMechanism::from_parts(inst, allocation, vec![vec![int(0); inst.type_count(0)]])
}

fn single(values: &[i64], cost: i64) -> Instance {
    Instance::new(vec![vec![uniform(values)]], fixed_costs(&[cost]), vec![Family::additive(1)]).unwrap()
}

/// Two iid items, `t ~ U{1, 2}`, costs `U{(0,0), (1,1)}`: each `v̄_j ∈ {1/2, 3/2}` w.p. ½.
fn two_iid_items() -> Instance {
    Instance::new(
        vec![vec![uniform(&[1, 2]), uniform(&[1, 2])]],
        uniform_costs(&[&[0, 0], &[1, 1]]),
        vec![Family::additive(2)],
    )
    .unwrap()
}

fn zero_beta_terms(inst: &Instance) -> (Thresholds, VbarTable) {
    let beta = Thresholds::zero(inst);
    let table = VbarTable::new(inst, 0, Some(&beta));
    (beta, table)
}

#[test]
fn zero_mechanism_puts_thresholds_at_the_top() {
    let inst = two_buyers_one_item();
    let ex = ex_ante(&inst, &DirectMechanism::zero(&inst));
    for i in 0..2 {
        assert_eq!(ex.q[i][0][0], int(0));
        assert_eq!(ex.beta.get(i, 0, 0), &int(2));
        assert_eq!(ex.rationing[i][0][0], int(0));
    }
}

#[test]
fn full_allocation_halves_to_the_top_value() {
    let inst = single(&[1, 2], 0);
    let ex = ex_ante(&inst, &always_allocate(&inst));
    assert_eq!(ex.q[0][0][0], half());
    assert_eq!(ex.beta.get(0, 0, 0), &int(2));
    assert_eq!(ex.rationing[0][0][0], int(1));
}

#[test]
fn threshold_is_zero_when_the_cost_already_binds() {
    let inst = single(&[1, 2], 2);
    let ex = ex_ante(&inst, &always_allocate(&inst));
    assert_eq!(ex.beta.get(0, 0, 0), &int(0));
}

#[test]
fn single_item_flow_uses_ironed_values() {
    let inst = three_quarters();
    let flow = build_flow(&inst, &Thresholds::zero(&inst));
    let ironed = ironed_virtual_values(inst.dist(0, 0));
    for t in 0..inst.type_count(0) {
        assert_eq!(flow.labels[0][t], Some(0));
        assert_eq!(flow.virtual_values[0][t][0], ironed[t]);
    }
    flow.flow.check_conservation(&inst).unwrap();
}

#[test]
fn favorite_item_ties_go_to_the_first_index() {
    let inst = two_iid_items();
    let (beta, _) = zero_beta_terms(&inst);
    let labels = &regions(&inst, &beta)[0];
    let ts = inst.types(0);
    for t in 0..ts.len() {
        let [a, b] = [&ts.values[t][0], &ts.values[t][1]];
        let expected = if b > a { 1 } else { 0 };
        assert_eq!(labels[t], Some(expected));
    }
}

#[test]
fn iid_regions_are_symmetric_up_to_ties() {
    let inst = Instance::new(
        vec![vec![uniform(&[0, 1, 3]), uniform(&[0, 1, 3])]],
        fixed_costs(&[0, 0]),
        vec![Family::additive(2)],
    )
    .unwrap();
    let labels = &regions(&inst, &Thresholds::zero(&inst))[0];
    let ts = inst.types(0);
    for t in 0..ts.len() {
        let swapped = ts.index_of(&[ts.digits[t][1], ts.digits[t][0]]);
        if ts.values[t][0] != ts.values[t][1] {
            assert_eq!(labels[swapped].map(|j| 1 - j), labels[t]);
        } else {
            assert_eq!(labels[t], Some(0));
        }
    }
}

#[test]
fn zero_mechanism_has_zero_benchmark_with_many_buyers() {
    let inst = Instance::new(
        vec![vec![uniform(&[1, 2]), uniform(&[0, 3])], vec![uniform(&[1, 3]), point(2)]],
        fixed_costs(&[0, 1]),
        vec![Family::additive(2), Family::unit_demand(2)],
    )
    .unwrap();
    let zero = DirectMechanism::zero(&inst);
    let r = benchmark_terms(&inst, &zero, &ex_ante(&inst, &zero));
    assert_eq!((r.most_surplus, r.prophet, r.less_surplus), (int(0), int(0), int(0)));
}

#[test]
fn single_buyer_has_no_prophet_term() {
    let inst = two_iid_items();
    let sol = solve_lp(&inst).unwrap();
    let ex = ex_ante(&inst, &sol.mechanism);
    let beta = benchmark_thresholds(&inst, &ex);
    assert_eq!(beta, Thresholds::zero(&inst));
    assert_eq!(benchmark_terms(&inst, &sol.mechanism, &ex).prophet, int(0));
}

#[test]
fn three_quarters_benchmark_covers_the_optimum() {
    let inst = three_quarters();
    let sol = solve_lp(&inst).unwrap();
    let ex = ex_ante(&inst, &sol.mechanism);
    let r = benchmark_terms(&inst, &sol.mechanism, &ex);
    assert!(r.total() >= q("3/4"));
    let [ms, prophet, less] = direct_benchmark_recompute(&inst, &sol.mechanism).unwrap();
    assert_eq!((ms.value, prophet.value, less.value), (r.most_surplus, r.prophet, r.less_surplus));
}

#[test]
fn single_item_has_no_tail() {
    let inst = three_quarters();
    let (beta, table) = zero_beta_terms(&inst);
    let t = tau(&inst, 0, &table);
    assert_eq!(tail_term(&inst, 0, &beta, &t), int(0));
}

#[test]
fn worthless_items_have_no_core_or_tail() {
    let inst = Instance::new(
        vec![vec![uniform(&[0, 1]), point(1)]],
        fixed_costs(&[1, 2]),
        vec![Family::additive(2)],
    )
    .unwrap();
    let (beta, table) = zero_beta_terms(&inst);
    let t = tau(&inst, 0, &table);
    assert_eq!(t, int(0));
    assert_eq!(core_term(&inst, 0, &table, &t), int(0));
    assert_eq!(tail_term(&inst, 0, &beta, &t), int(0));
    assert!(tail_prices(&inst, 0, &beta, &t).iter().all(Option::is_none));
}

/// `E[v̄(t, C(t))]` by enumeration, with `C(t)` recomputed from single-item values.
fn core_by_enumeration(inst: &Instance, tau: &Q) -> Q {
    let ts = inst.types(0);
    (0..ts.len())
        .map(|t| {
            let core = (0..inst.m())
                .filter(|&j| vbar_single(inst, 0, j, &ts.values[t][j], None) <= *tau)
                .fold(0, |acc, j| acc | bit(j));
            vbar(inst, 0, &ts.values[t], core, None) * &ts.probs[t]
        })
        .sum()
}

#[test]
fn two_iid_items_core_tail() {
    let inst = two_iid_items();
    let (beta, table) = zero_beta_terms(&inst);
    let t = tau(&inst, 0, &table);
    assert_eq!(t, q("3/2"));
    assert_eq!(tail_term(&inst, 0, &beta, &t), int(0));
    assert_eq!(core_term(&inst, 0, &table, &t), core_by_enumeration(&inst, &t));
    assert_eq!(core_term(&inst, 0, &table, &t), int(2));
    let sol = solve_lp(&inst).unwrap();
    let r = benchmark_terms(&inst, &sol.mechanism, &ex_ante(&inst, &sol.mechanism));
    assert!(core_tail_check(&r).holds());
}

#[test]
fn tail_prices_only_consider_values_above_tau() {
    let inst = two_iid_items();
    let (beta, _) = zero_beta_terms(&inst);
    // At τ = 3/2 nothing lies strictly above, so no tail permit is priced.
    assert!(tail_prices(&inst, 0, &beta, &q("3/2")).iter().all(Option::is_none));
    // Below it, 3/2 is the only candidate: r = 3/2·½.
    let prices = tail_prices(&inst, 0, &beta, &half());
    assert_eq!(prices, vec![Some((q("3/2"), q("3/4"))); 2]);
}

#[test]
fn tail_price_ties_pick_the_smallest() {
    // v̄ ∈ {1/2, 1}: both candidates earn 1/2.
    let inst = Instance::new(
        vec![vec![profitlab::model::DiscreteDist::uniform(vec![q("3/2"), int(2)]).unwrap()]],
        fixed_costs(&[1]),
        vec![Family::additive(1)],
    )
    .unwrap();
    let (beta, _) = zero_beta_terms(&inst);
    assert_eq!(tail_prices(&inst, 0, &beta, &int(0)), vec![Some((half(), half()))]);
}

#[test]
fn bundle_price_is_half_the_lower_median() {
    let inst = three_quarters();
    let (_, table) = zero_beta_terms(&inst);
    // C = {1} needs τ ≥ 3/2; the core values are {1/2, 3/2} and the lower median is 1/2.
    assert_eq!(bundle_price(&inst, 0, &table, &q("3/2")), q("1/4"));
    // Nothing is core at τ = 0.
    assert_eq!(bundle_price(&inst, 0, &table, &int(0)), int(0));
}

#[test]
fn point_masses_concentrate() {
    let inst = Instance::new(vec![vec![point(3), point(1)]], fixed_costs(&[0, 0]), vec![Family::additive(2)]).unwrap();
    let sol = solve_lp(&inst).unwrap();
    let ex = ex_ante(&inst, &sol.mechanism);
    let r = benchmark_terms(&inst, &sol.mechanism, &ex);
    let beta = benchmark_thresholds(&inst, &ex);
    assert!(concentration_checks(&inst, &beta, &r).iter().all(|c| c.holds()));
}

fn ex_and_report(inst: &Instance) -> (DirectMechanism, ExAnte, profitlab::benchmark::BenchmarkReport) {
    let sol = solve_lp(inst).unwrap();
    let ex = ex_ante(inst, &sol.mechanism);
    let r = benchmark_terms(inst, &sol.mechanism, &ex);
    (sol.mechanism, ex, r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn benchmark_matches_literal_recompute(inst in arb_instance(1..=2, 1..=2, 2, 2, Families::Matroid)) {
        let (mech, _, r) = ex_and_report(&inst);
        let [ms, prophet, less] = direct_benchmark_recompute(&inst, &mech).unwrap();
        prop_assert_eq!(ms.value, r.most_surplus);
        prop_assert_eq!(prophet.value, r.prophet);
        prop_assert_eq!(less.value, r.less_surplus);
    }

    #[test]
    fn benchmark_bounds_hold(inst in arb_instance(1..=2, 1..=2, 3, 2, Families::Matroid)) {
        let sol = solve_lp(&inst).unwrap();
        let ex = ex_ante(&inst, &sol.mechanism);
        let r = benchmark_terms(&inst, &sol.mechanism, &ex);
        let beta = benchmark_thresholds(&inst, &ex);
        prop_assert!(sol.objective <= r.total());
        prop_assert!(core_tail_check(&r).holds());
        prop_assert!(profitlab::benchmark::tail_price_check(&inst, &beta, &r).holds());
        for c in concentration_checks(&inst, &beta, &r) {
            prop_assert!(c.holds(), "{:?}", c);
        }
        prop_assert!(ex.feasibility_checks(&inst).iter().all(|c| c.holds()));
        if inst.n() == 1 {
            prop_assert!(r.prophet.is_zero());
        }
    }

    /// The threshold rule: Pr[t > β] < q ≤ Pr[t ≥ β] with rationing making the sale probability exactly q.
    #[test]
    fn thresholds_sell_exactly_q(inst in arb_instance(1..=2, 1..=2, 3, 2, Families::Additive)) {
        let (_, ex, _) = ex_and_report(&inst);
        for i in 0..inst.n() {
            for j in 0..inst.m() {
                let d = inst.dist(i, j);
                for (c, atom) in inst.atoms().iter().enumerate() {
                    let cost = &atom.costs[j];
                    let target = &ex.q[i][j][c];
                    if d.prob_at_least(cost) <= *target {
                        prop_assert!(ex.beta.get(i, j, c).is_zero());
                        continue;
                    }
                    let b = ex.beta.get(i, j, c);
                    let at = d.prob_at_least(b) - d.prob_above(b);
                    prop_assert_eq!(d.prob_above(b) + &ex.rationing[i][j][c] * at, target.clone());
                }
            }
        }
    }
}

mod common;

use common::*;
use num_traits::{One, Zero};
use profitlab::benchmark::{benchmark_terms, bundle_price, ex_ante};
use profitlab::lp::solve_lp;
use profitlab::mechanisms::construct::profit_by_atom;
use profitlab::mechanisms::*;
use profitlab::model::{bit, Family, Instance};
use profitlab::rational::{frac, half, int};
use profitlab::valuation::VbarTable;
use profitlab::{Error, Q};

fn ip(inst: &Instance, prices: &[&[i64]]) -> MechanismSpec {
    let mut spec = MechanismSpec::blank(inst, Kind::Ip);
    for (j, row) in prices.iter().enumerate() {
        for (c, &p) in row.iter().enumerate() {
            spec.item_prices[0][j][c] = Some(int(p));
        }
    }
    spec
}

#[test]
fn item_pricing_at_two_earns_three_quarters() {
    let inst = three_quarters();
    let r = evaluate(&inst, &ip(&inst, &[&[2, 2]])).unwrap();
    assert_eq!(r.profit, q("3/4"));
    assert_eq!(r.item_revenue[0], int(1));
    assert_eq!(r.cost[0], q("1/4"));
}

#[test]
fn item_prices_above_values_earn_nothing() {
    let inst = three_quarters();
    assert!(evaluate(&inst, &ip(&inst, &[&[5, 5]]))
        .unwrap()
        .profit
        .is_zero());
}

#[test]
fn prices_below_cost_report_a_loss() {
    let inst = three_quarters();
    // Price 0 always sells; the cost-1 atom loses 1.
    assert_eq!(
        evaluate(&inst, &ip(&inst, &[&[0, 0]])).unwrap().profit,
        q("-1/2")
    );
}

#[test]
fn permit_price_three_halves_earns_three_quarters() {
    let inst = three_quarters();
    let mut spec = MechanismSpec::blank(&inst, Kind::Pp).items_at_cost(&inst);
    spec.permit_prices[0][0] = Some(q("3/2"));
    let r = evaluate(&inst, &spec).unwrap();
    assert_eq!(r.profit, q("3/4"));
    assert_eq!(r.diagnostics.permit_purchase[0][0], half());
}

#[test]
fn free_permits_at_cost_earn_nothing() {
    let inst = three_quarters();
    let mut spec = MechanismSpec::blank(&inst, Kind::Pp).items_at_cost(&inst);
    spec.permit_prices[0][0] = Some(Q::zero());
    let r = evaluate(&inst, &spec).unwrap();
    assert!(r.profit.is_zero());
    assert_eq!(r.diagnostics.permit_purchase[0][0], Q::one());
}

#[test]
fn permits_above_every_vbar_sell_nothing() {
    let inst = three_quarters();
    let mut spec = MechanismSpec::blank(&inst, Kind::Pp).items_at_cost(&inst);
    spec.permit_prices[0][0] = Some(int(2));
    assert!(evaluate(&inst, &spec).unwrap().profit.is_zero());
}

#[test]
fn bundle_price_three_halves_earns_three_quarters() {
    let inst = three_quarters();
    let mut spec = MechanismSpec::blank(&inst, Kind::Pb).items_at_cost(&inst);
    spec.bundle_prices[0] = Some(q("3/2"));
    let r = evaluate(&inst, &spec).unwrap();
    assert_eq!(r.profit, q("3/4"));
    assert_eq!(r.diagnostics.bundle_accept[0], half());
    spec.bundle_prices[0] = Some(Q::zero());
    assert!(evaluate(&inst, &spec).unwrap().profit.is_zero());
    spec.bundle_prices[0] = Some(int(2));
    assert!(evaluate(&inst, &spec).unwrap().profit.is_zero());
}

#[test]
fn restricted_permit_buyer_takes_the_best_net_singleton() {
    // Hidden half the time, so expected utilities are (1, 2); prices (1/2, 19/10) leave 1/2 vs 1/10.
    let inst = Instance::new(
        vec![vec![point(2), point(4)]],
        fixed_costs(&[0, 0]),
        vec![Family::additive(2)],
    )
    .unwrap();
    let mut spec = MechanismSpec::blank(&inst, Kind::Rspp).items_at_cost(&inst);
    spec.permit_prices[0] = vec![Some(q("1/2")), Some(q("19/10"))];
    let r = evaluate(&inst, &spec).unwrap();
    assert_eq!(r.decisions[0][0], vec![(bit(0), Q::one())]);
    assert_eq!(r.hide_probs.as_ref().unwrap()[0][0][0], half());
    assert_eq!(r.diagnostics.visibility[0][0][0], half());
    assert_eq!(r.profit, q("1/2"));
}

#[test]
fn hiding_outside_unit_interval_is_rejected() {
    let inst = three_quarters();
    let mut spec = MechanismSpec::blank(&inst, Kind::Rspp).items_at_cost(&inst);
    spec.hide_probs = Some(vec![vec![vec![int(2), int(0)]]]);
    assert!(matches!(
        evaluate(&inst, &spec),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn multi_buyer_kinds_reject_single_buyer_only_specs() {
    let inst = two_buyers_one_item();
    assert!(evaluate(&inst, &MechanismSpec::blank(&inst, Kind::Ip)).is_err());
    assert!(evaluate(&inst, &MechanismSpec::blank(&inst, Kind::Csip)).is_ok());
}

#[test]
fn sequential_pricing_serves_the_first_buyer_first() {
    let inst = two_buyers_one_item();
    let mut spec = MechanismSpec::blank(&inst, Kind::Csip);
    spec.item_prices = vec![vec![vec![Some(int(2))]], vec![vec![Some(int(2))]]];
    let r = evaluate(&inst, &spec).unwrap();
    // Sold unless both values are 1.
    assert_eq!(r.profit, q("3/2"));
    assert_eq!(r.item_revenue, vec![int(1), q("1/2")]);
    assert_eq!(r.diagnostics.availability[1][0][0], half());
    spec.order = vec![1, 0];
    assert_eq!(
        evaluate(&inst, &spec).unwrap().item_revenue,
        vec![q("1/2"), int(1)]
    );
}

#[test]
fn trace_enumeration_reproduces_exact_profit() {
    let inst = Instance::new(
        vec![
            vec![uniform(&[1, 3]), uniform(&[0, 2])],
            vec![uniform(&[2, 3]), uniform(&[1, 4])],
        ],
        uniform_costs(&[&[1, 0], &[0, 2]]),
        vec![Family::unit_demand(2), Family::additive(2)],
    )
    .unwrap();
    let mut rspp = MechanismSpec::blank(&inst, Kind::Rspp).items_at_cost(&inst);
    rspp.permit_prices = vec![
        vec![Some(q("1/2")), Some(int(1))],
        vec![Some(int(1)), Some(q("1/2"))],
    ];
    rspp.rationing[0][0][1] = q("1/3");
    let mut spb = MechanismSpec::blank(&inst, Kind::Spb).items_at_cost(&inst);
    spb.bundle_prices = vec![Some(int(1)), Some(q("3/2"))];
    let mut csip = MechanismSpec::blank(&inst, Kind::Csip);
    for i in 0..2 {
        for j in 0..2 {
            csip.item_prices[i][j] = vec![Some(int(2)), Some(int(3))];
        }
    }
    for spec in [rspp, spb, csip] {
        let r = evaluate(&inst, &spec).unwrap();
        let trace = enumerate_outcomes(&inst, &spec, &r).unwrap();
        let total: Q = trace.iter().map(|e| e.prob.clone()).sum();
        assert!(
            total.is_one(),
            "{:?}: path probabilities sum to {total}",
            spec.kind
        );
        assert_eq!(trace_profit(&trace), r.profit, "{:?}", spec.kind);
        assert!(incentive_gain(&inst, &spec, &r).is_zero());
    }
}

#[test]
fn copies_construction_single_item_prices_at_two() {
    let inst = Instance::new(
        vec![vec![uniform(&[1, 2])]],
        fixed_costs(&[0]),
        vec![Family::additive(1)],
    )
    .unwrap();
    let spec = construct_csip_from_copies(&inst).unwrap();
    assert_eq!(spec.item_prices[0][0][0], Some(int(2)));
    assert_eq!(evaluate(&inst, &spec).unwrap().profit, int(1));
    assert_eq!(profitlab::myerson::copies_opt_ud(&inst, 0).unwrap(), int(1));
}

#[test]
fn copies_construction_additive_pair_earns_two() {
    let inst = Instance::new(
        vec![vec![uniform(&[1, 2]), uniform(&[1, 2])]],
        fixed_costs(&[0, 0]),
        vec![Family::additive(2)],
    )
    .unwrap();
    let spec = construct_csip_from_copies(&inst).unwrap();
    assert_eq!(spec.item_prices[0][0][0], Some(int(2)));
    assert_eq!(evaluate(&inst, &spec).unwrap().profit, int(2));
    assert_eq!(
        profitlab::myerson::copies_opt_additive(&inst, 0).unwrap(),
        int(2)
    );
}

#[test]
fn copies_construction_with_values_below_cost_earns_nothing() {
    let inst = Instance::new(
        vec![vec![uniform(&[1, 2])]],
        fixed_costs(&[3]),
        vec![Family::additive(1)],
    )
    .unwrap();
    let spec = construct_csip_from_copies(&inst).unwrap();
    assert!(evaluate(&inst, &spec).unwrap().profit.is_zero());
}

#[test]
fn spb_core_on_three_quarters_uses_lower_median() {
    let inst = three_quarters();
    let lp = solve_lp(&inst).unwrap();
    let ex = ex_ante(&inst, &lp.mechanism);
    // With τ = 3/2 the item is in every type's core: median of {1/2, 3/2} is 1/2.
    let table = VbarTable::new(&inst, 0, None);
    let delta = bundle_price(&inst, 0, &table, &q("3/2"));
    assert_eq!(delta, q("1/4"));
    let spec = construct_spb_core(&inst, &ex, &[delta]).unwrap();
    assert_eq!(spec.kind, Kind::Pb);
    let r = evaluate(&inst, &spec).unwrap();
    assert_eq!(r.diagnostics.bundle_accept[0], Q::one());
    assert_eq!(r.profit, q("1/4"));
    // The derived τ = 1/2 leaves type 2's item in the tail, so its core is empty.
    let report = benchmark_terms(&inst, &lp.mechanism, &ex);
    assert_eq!(report.tau, vec![half()]);
    assert_eq!(report.delta, vec![Q::zero()]);
}

#[test]
fn spb_with_point_masses_always_accepts() {
    let inst = Instance::new(
        vec![vec![point(3)], vec![point(2)]],
        fixed_costs(&[1]),
        vec![Family::additive(1); 2],
    )
    .unwrap();
    let mut spec = MechanismSpec::blank(&inst, Kind::Spb).items_at_cost(&inst);
    // Buyer 0 takes the item; buyer 1 still expects nothing but pays a zero bundle price.
    spec.bundle_prices = vec![Some(int(2)), Some(Q::zero())];
    let r = evaluate(&inst, &spec).unwrap();
    assert_eq!(r.diagnostics.bundle_accept, vec![Q::one(), Q::one()]);
    assert_eq!(r.profit, int(2));
}

#[test]
fn rspp_tail_single_item_hides_half() {
    let inst = three_quarters();
    let lp = solve_lp(&inst).unwrap();
    let ex = ex_ante(&inst, &lp.mechanism);
    let report = benchmark_terms(&inst, &lp.mechanism, &ex);
    let tail = construct_rspp_tail(&inst, &ex, &report.tau).unwrap();
    let r = evaluate(&inst, &tail.spec).unwrap();
    assert_eq!(r.hide_probs.unwrap()[0][0], vec![half(), half()]);
}

#[test]
fn conversion_preserves_auxiliary_revenue() {
    let inst = three_quarters();
    for aux in [
        Auxiliary::SeparatePrices(vec![Some(q("3/2"))]),
        Auxiliary::SeparatePrices(vec![Some(q("1/2"))]),
        Auxiliary::GrandBundle(q("3/2")),
    ] {
        let revenue = auxiliary_revenue(&inst, &aux).unwrap();
        let spec = convert_revenue_to_permit(&inst, &aux).unwrap();
        assert_eq!(evaluate(&inst, &spec).unwrap().profit, revenue);
    }
    assert_eq!(
        auxiliary_revenue(&inst, &Auxiliary::SeparatePrices(vec![Some(q("3/2"))])).unwrap(),
        q("3/4")
    );
    let spec = convert_revenue_to_permit(&inst, &Auxiliary::GrandBundle(int(1))).unwrap();
    assert_eq!(spec.kind, Kind::Pb);
}

#[test]
fn search_finds_the_three_halves_permit() {
    let inst = three_quarters();
    let found = search_best(&inst, Kind::Pp, None).unwrap();
    assert_eq!(found.profit, q("3/4"));
    assert_eq!(found.spec.permit_prices[0][0], Some(q("3/2")));
    let ipf = search_best(&inst, Kind::Ip, None).unwrap();
    assert!(ipf.exhaustive);
    assert_eq!(ipf.profit, q("3/4"));
}

#[test]
fn search_rejects_an_empty_grid() {
    let inst = three_quarters();
    let mut grid = Grid::closure(&inst);
    grid.bundles[0].clear();
    assert!(matches!(
        search_best(&inst, Kind::Pb, Some(&grid)),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn prophet_mechanism_single_buyer_has_no_prophet_term() {
    let inst = three_quarters();
    let lp = solve_lp(&inst).unwrap();
    let ex = ex_ante(&inst, &lp.mechanism);
    let report = benchmark_terms(&inst, &lp.mechanism, &ex);
    assert!(report.prophet.is_zero());
    let p = prophet_csip(&inst, &ex).unwrap();
    assert!(evaluate(&inst, &p.spec).unwrap().profit >= Q::zero());
}

#[test]
fn per_atom_profits_average_to_the_total() {
    let inst = three_quarters();
    let spec = ip(&inst, &[&[2, 2]]);
    let per = profit_by_atom(&inst, &spec).unwrap();
    assert_eq!(per, vec![int(1), q("1/2")]);
    let avg: Q = per.iter().zip(inst.atoms()).map(|(p, a)| p * &a.prob).sum();
    assert_eq!(avg, evaluate(&inst, &spec).unwrap().profit);
}

#[test]
fn unsold_item_price_and_cost_shift_is_a_no_op() {
    let base = Instance::new(
        vec![vec![uniform(&[1, 2]), uniform(&[0, 1])]],
        fixed_costs(&[0, 1]),
        vec![Family::unit_demand(2)],
    )
    .unwrap();
    let shifted = Instance::new(
        vec![vec![uniform(&[1, 2]), uniform(&[0, 1])]],
        fixed_costs(&[0, 4]),
        vec![Family::unit_demand(2)],
    )
    .unwrap();
    let mut a = MechanismSpec::blank(&base, Kind::Ip);
    a.item_prices[0] = vec![vec![Some(int(1))], vec![Some(int(3))]];
    let mut b = a.clone();
    b.item_prices[0][1] = vec![Some(int(6))];
    assert_eq!(
        evaluate(&base, &a).unwrap().profit,
        evaluate(&shifted, &b).unwrap().profit
    );
    assert_eq!(frac(1, 1), Q::one());
}

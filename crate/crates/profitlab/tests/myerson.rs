mod common;

use common::*;
use proptest::prelude::*;

use profitlab::model::{DiscreteDist, Family, FamilyKind, Instance};
use profitlab::myerson::{
    copies_opt_additive, copies_opt_ud, copies_opt_ud_multi, expected_positive_surplus, ironed_virtual_values,
    monopoly_price, virtual_values,
};
use profitlab::rational::{frac, int, max_q, pos};
use profitlab::Q;

fn dist(values: &[i64], probs: &[&str]) -> DiscreteDist {
    DiscreteDist::new(values.iter().map(|&v| int(v)).collect(), probs.iter().map(|p| q(p)).collect()).unwrap()
}

/// Ironed values straight from the definition: the concave hull of the
/// revenue points, with each hull height taken as the best chord over all pairs.
fn ironed_by_chords(d: &DiscreteDist) -> Vec<Q> {
    let k = d.len();
    let mut pts = vec![(int(0), int(0))];
    for x in (0..k).rev() {
        let tail = d.tail_from(x);
        pts.push((tail.clone(), &d.support()[x] * tail));
    }
    let height = |p: usize| -> Q {
        let mut best = pts[p].1.clone();
        for a in 0..=p {
            for b in p..pts.len() {
                if a != b {
                    let w = (&pts[p].0 - &pts[a].0) / (&pts[b].0 - &pts[a].0);
                    best = max_q(&best, &(&pts[a].1 + w * (&pts[b].1 - &pts[a].1)));
                }
            }
        }
        best
    };
    let h: Vec<Q> = (0..pts.len()).map(height).collect();
    (0..k).map(|x| (&h[k - x] - &h[k - 1 - x]) / (&pts[k - x].0 - &pts[k - 1 - x].0)).collect()
}

/// Best margin `(p - r)·Pr[t ≥ p]` over every support price, or 0.
fn best_margin(d: &DiscreteDist, r: &Q) -> Q {
    d.support().iter().fold(int(0), |best, p| max_q(&best, &((p - r) * d.prob_at_least(p))))
}

#[test]
fn uniform_one_two_is_regular() {
    let vv = virtual_values(&uniform(&[1, 2]));
    assert_eq!(vv.raw, vec![int(0), int(2)]);
    assert_eq!(vv.ironed, vv.raw);
}

#[test]
fn irregular_three_point_distribution_irons_the_bottom_pair() {
    let d = dist(&[1, 2, 3], &["1/2", "1/10", "2/5"]);
    let vv = virtual_values(&d);
    assert_eq!(vv.raw, vec![int(0), int(-2), int(3)]);
    assert_eq!(vv.ironed, vec![q("-1/3"), q("-1/3"), int(3)]);
    assert_eq!(vv.ironed, ironed_by_chords(&d));
}

#[test]
fn point_mass_virtual_value_is_the_value() {
    assert_eq!(ironed_virtual_values(&point(5)), vec![int(5)]);
}

#[test]
fn monopoly_ties_go_to_the_higher_price() {
    // Both prices 1 and 2 earn 1.
    assert_eq!(monopoly_price(&uniform(&[1, 2]), &int(0)), Some((int(2), int(1))));
    assert_eq!(monopoly_price(&uniform(&[1, 2]), &int(2)), None);
}

#[test]
fn copies_single_item() {
    let at = |c: i64| {
        Instance::new(vec![vec![uniform(&[1, 2])]], fixed_costs(&[c]), vec![Family::additive(1)]).unwrap()
    };
    assert_eq!(copies_opt_ud(&at(0), 0).unwrap(), int(1));
    assert_eq!(copies_opt_ud(&at(1), 0).unwrap(), q("1/2"));
    assert_eq!(copies_opt_ud(&at(3), 0).unwrap(), int(0));
    assert_eq!(copies_opt_additive(&at(0), 0).unwrap(), copies_opt_ud(&at(0), 0).unwrap());
}

#[test]
fn copies_two_iid_items() {
    let with = |family| {
        Instance::new(vec![vec![uniform(&[1, 2]), uniform(&[1, 2])]], fixed_costs(&[0, 0]), vec![family]).unwrap()
    };
    assert_eq!(copies_opt_additive(&with(Family::additive(2)), 0).unwrap(), int(2));
    let rank_one = Family::new(2, FamilyKind::Uniform { rank: 1 }).unwrap();
    assert_eq!(copies_opt_additive(&with(rank_one), 0).unwrap(), q("3/2"));
}

#[test]
fn copies_multi_buyer() {
    let inst = two_buyers_one_item();
    assert_eq!(copies_opt_ud_multi(&inst, 0).unwrap(), q("3/2"));
    let single = three_quarters();
    for c in 0..2 {
        assert_eq!(copies_opt_ud_multi(&single, c).unwrap(), copies_opt_ud(&single, c).unwrap());
    }
    let priced_out = Instance::new(
        vec![vec![uniform(&[1, 2])], vec![uniform(&[1, 2])]],
        fixed_costs(&[5]),
        vec![Family::additive(1), Family::additive(1)],
    )
    .unwrap();
    assert_eq!(copies_opt_ud_multi(&priced_out, 0).unwrap(), int(0));
}

fn arb_dist() -> impl Strategy<Value = DiscreteDist> {
    (prop::collection::btree_set(0i64..=12, 1..=5), prop::collection::vec(1i64..=6, 5)).prop_map(|(vals, w)| {
        let vals: Vec<i64> = vals.into_iter().collect();
        let total: i64 = w[..vals.len()].iter().sum();
        DiscreteDist::new(
            vals.iter().map(|&v| frac(v, 2)).collect(),
            w[..vals.len()].iter().map(|&x| frac(x, total)).collect(),
        )
        .unwrap()
    })
}

proptest! {
    #[test]
    fn ironing_matches_the_chord_oracle(d in arb_dist()) {
        prop_assert_eq!(ironed_virtual_values(&d), ironed_by_chords(&d));
    }

    #[test]
    fn ironed_values_are_monotone(d in arb_dist()) {
        let iv = ironed_virtual_values(&d);
        prop_assert!(iv.windows(2).all(|w| w[0] <= w[1]));
    }

    /// Expected (ironed) virtual value equals revenue at the lowest price.
    #[test]
    fn virtual_values_average_to_the_lowest_value(d in arb_dist()) {
        let vv = virtual_values(&d);
        for phi in [&vv.raw, &vv.ironed] {
            let mean: Q = phi.iter().zip(d.probs()).map(|(v, p)| v * p).sum();
            prop_assert_eq!(&mean, &d.support()[0]);
        }
    }

    /// Optimal single-item revenue above a reserve is the expected positive virtual surplus.
    #[test]
    fn positive_surplus_is_the_best_posted_margin(d in arb_dist(), r in 0i64..=12) {
        let r = frac(r, 2);
        let best = best_margin(&d, &r);
        prop_assert_eq!(expected_positive_surplus(&d, &r), best.clone());
        let monopoly = monopoly_price(&d, &r).map(|(_, g)| g).unwrap_or_else(|| int(0));
        prop_assert_eq!(pos(monopoly), best);
    }
}

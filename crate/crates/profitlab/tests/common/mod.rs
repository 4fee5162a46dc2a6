#![allow(dead_code)]

use proptest::prelude::*;

use profitlab::model::{CostAtom, CostModel, DiscreteDist, Family, FamilyKind, Instance};
use profitlab::rational::{frac, int};
use profitlab::Q;

pub fn q(s: &str) -> Q {
    s.parse().expect("rational literal")
}

pub fn uniform(values: &[i64]) -> DiscreteDist {
    DiscreteDist::uniform(values.iter().map(|&v| int(v)).collect()).unwrap()
}

pub fn point(v: i64) -> DiscreteDist {
    DiscreteDist::point(int(v))
}

pub fn fixed_costs(costs: &[i64]) -> CostModel {
    CostModel::fixed(costs.iter().map(|&c| int(c)).collect())
}

pub fn uniform_costs(atoms: &[&[i64]]) -> CostModel {
    let p = frac(1, atoms.len() as i64);
    CostModel::new(
        atoms
            .iter()
            .map(|a| CostAtom {
                costs: a.iter().map(|&c| int(c)).collect(),
                prob: p.clone(),
            })
            .collect(),
    )
    .unwrap()
}

/// One buyer, one item, `t ~ U{1, 2}`, `c ~ U{0, 1}`: every simple mechanism earns 3/4.
pub fn three_quarters() -> Instance {
    Instance::new(
        vec![vec![uniform(&[1, 2])]],
        uniform_costs(&[&[0], &[1]]),
        vec![Family::additive(1)],
    )
    .unwrap()
}

/// Two buyers, one item, values `U{1, 2}`, free item.
pub fn two_buyers_one_item() -> Instance {
    Instance::new(
        vec![vec![uniform(&[1, 2])], vec![uniform(&[1, 2])]],
        fixed_costs(&[0]),
        vec![Family::additive(1), Family::additive(1)],
    )
    .unwrap()
}

/// Feasibility families for generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Families {
    Additive,
    DownwardClosed,
    Matroid,
}

fn arb_dist(max_support: usize) -> impl Strategy<Value = DiscreteDist> {
    (
        prop::collection::btree_set(0i64..=8, 1..=max_support),
        prop::collection::vec(1i64..=4, max_support),
    )
        .prop_map(|(values, weights)| {
            let values: Vec<i64> = values.into_iter().collect();
            let w = &weights[..values.len()];
            let total: i64 = w.iter().sum();
            DiscreteDist::new(
                values.iter().map(|&v| frac(v, 2)).collect(),
                w.iter().map(|&x| frac(x, total)).collect(),
            )
            .unwrap()
        })
}

fn arb_costs(m: usize, max_atoms: usize) -> impl Strategy<Value = CostModel> {
    (
        prop::collection::btree_set(prop::collection::vec(0i64..=6, m), 1..=max_atoms),
        prop::collection::vec(1i64..=3, max_atoms),
    )
        .prop_map(|(atoms, weights)| {
            let atoms: Vec<Vec<i64>> = atoms.into_iter().collect();
            let w = &weights[..atoms.len()];
            let total: i64 = w.iter().sum();
            CostModel::new(
                atoms
                    .iter()
                    .zip(w)
                    .map(|(a, &x)| CostAtom {
                        costs: a.iter().map(|&c| frac(c, 2)).collect(),
                        prob: frac(x, total),
                    })
                    .collect(),
            )
            .unwrap()
        })
}

fn arb_family(m: usize, kind: Families) -> BoxedStrategy<Family> {
    match kind {
        Families::Additive => Just(Family::additive(m)).boxed(),
        Families::DownwardClosed => prop::collection::vec(1u32..(1 << m), 1..=3)
            .prop_map(move |generators| {
                Family::new(m, FamilyKind::DownwardClosed { generators }).unwrap()
            })
            .boxed(),
        Families::Matroid => (1..=m)
            .prop_map(move |rank| Family::new(m, FamilyKind::Uniform { rank }).unwrap())
            .boxed(),
    }
}

/// Random small instance: half-integer values in `[0, 4]`, half-integer costs in `[0, 3]`.
pub fn arb_instance(
    n: std::ops::RangeInclusive<usize>,
    m: std::ops::RangeInclusive<usize>,
    max_support: usize,
    max_atoms: usize,
    families: Families,
) -> impl Strategy<Value = Instance> {
    (n, m).prop_flat_map(move |(n, m)| {
        (
            prop::collection::vec(prop::collection::vec(arb_dist(max_support), m), n),
            arb_costs(m, max_atoms),
            prop::collection::vec(arb_family(m, families), n),
        )
            .prop_map(|(dists, costs, fams)| Instance::new(dists, costs, fams).unwrap())
    })
}

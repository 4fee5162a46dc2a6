//! Valuations: plain value, the cost-adjusted value v̄, stage-two utility and μ.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::model::{full_mask, items, Instance, Mask};
use crate::rational::{max_q, pos, Q};

/// Per-(buyer, item, cost atom) price floors. Absent floors are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thresholds {
    floors: Vec<Vec<Vec<Q>>>,
}

impl Thresholds {
    pub fn zero(instance: &Instance) -> Self {
        let c = instance.atoms().len();
        Self {
            floors: vec![vec![vec![Q::zero(); c]; instance.m()]; instance.n()],
        }
    }

    pub fn from_nested(floors: Vec<Vec<Vec<Q>>>) -> Self {
        Self { floors }
    }

    pub fn get(&self, i: usize, j: usize, c: usize) -> &Q {
        &self.floors[i][j][c]
    }

    pub fn set(&mut self, i: usize, j: usize, c: usize, v: Q) {
        self.floors[i][j][c] = v;
    }

    pub fn as_nested(&self) -> &[Vec<Vec<Q>>] {
        &self.floors
    }
}

/// The effective price buyer `i` faces for item `j` under atom `c`: `max(β, c_j)`.
pub fn effective_price(
    instance: &Instance,
    beta: Option<&Thresholds>,
    i: usize,
    j: usize,
    c: usize,
) -> Q {
    let cost = &instance.atoms()[c].costs[j];
    match beta {
        Some(b) => max_q(b.get(i, j, c), cost),
        None => cost.clone(),
    }
}

/// `v_i(t, S)`: best feasible subset of `s` under additive values `t`.
pub fn value(instance: &Instance, i: usize, t: &[Q], s: Mask) -> Q {
    instance.family(i).max_weight(t, s)
}

/// `v̄_i(t, P)`: expected best stage-two surplus when holding permits `p`.
pub fn vbar(instance: &Instance, i: usize, t: &[Q], p: Mask, beta: Option<&Thresholds>) -> Q {
    let fam = instance.family(i);
    let mut total = Q::zero();
    for (c, atom) in instance.atoms().iter().enumerate() {
        let w: Vec<Q> = (0..instance.m())
            .map(|j| &t[j] - effective_price(instance, beta, i, j, c))
            .collect();
        total += fam.max_weight(&w, p) * &atom.prob;
    }
    total
}

/// `v̄_ij(t_ij) = E_c[(t_ij - max(β, c_j))⁺]`.
pub fn vbar_single(instance: &Instance, i: usize, j: usize, t: &Q, beta: Option<&Thresholds>) -> Q {
    instance
        .atoms()
        .iter()
        .enumerate()
        .fold(Q::zero(), |acc, (c, atom)| {
            acc + pos(t - effective_price(instance, beta, i, j, c)) * &atom.prob
        })
}

/// Best bundle out of `p` at the given per-item prices: `(utility, bundle)`.
///
/// Ties prefer larger bundles, then the smallest mask.
pub fn stage2_utility(instance: &Instance, i: usize, t: &[Q], prices: &[Q], p: Mask) -> (Q, Mask) {
    let w: Vec<Q> = t.iter().zip(prices).map(|(a, b)| a - b).collect();
    instance.family(i).best_subset(&w, p)
}

/// Per-item surplus of the chosen stage-two bundle; zero off the bundle.
pub fn supporting_prices(instance: &Instance, i: usize, t: &[Q], prices: &[Q], p: Mask) -> Vec<Q> {
    let (_, chosen) = stage2_utility(instance, i, t, prices, p);
    (0..instance.m())
        .map(|j| {
            if chosen & (1 << j) != 0 {
                &t[j] - &prices[j]
            } else {
                Q::zero()
            }
        })
        .collect()
}

/// Items whose single-item v̄ is at most `tau`.
pub fn core_items(
    instance: &Instance,
    i: usize,
    t: &[Q],
    beta: Option<&Thresholds>,
    tau: &Q,
) -> Mask {
    (0..instance.m())
        .filter(|&j| vbar_single(instance, i, j, &t[j], beta) <= *tau)
        .fold(0, |acc, j| acc | (1 << j))
}

/// `μ_i(t, S) = v̄_i(t, C_i(t) ∩ S)`.
pub fn mu(
    instance: &Instance,
    i: usize,
    t: &[Q],
    s: Mask,
    beta: Option<&Thresholds>,
    tau: &Q,
) -> Q {
    vbar(
        instance,
        i,
        t,
        core_items(instance, i, t, beta, tau) & s,
        beta,
    )
}

/// v̄ for every type of one buyer and every permit set, plus single-item values.
#[derive(Debug, Clone)]
pub struct VbarTable {
    /// `sets[t][P]`
    pub sets: Vec<Vec<Q>>,
    /// `singles[t][j]`
    pub singles: Vec<Vec<Q>>,
}

impl VbarTable {
    pub fn new(instance: &Instance, i: usize, beta: Option<&Thresholds>) -> Self {
        let ts = instance.types(i);
        let full = full_mask(instance.m());
        let sets = ts
            .values
            .iter()
            .map(|t| (0..=full).map(|p| vbar(instance, i, t, p, beta)).collect())
            .collect();
        let singles = ts
            .values
            .iter()
            .map(|t| {
                (0..instance.m())
                    .map(|j| vbar_single(instance, i, j, &t[j], beta))
                    .collect()
            })
            .collect();
        Self { sets, singles }
    }

    pub fn full(&self, t: usize) -> &Q {
        self.sets[t].last().expect("non-empty table")
    }

    /// `C_i(t)` as a mask.
    pub fn core_items(&self, t: usize, tau: &Q) -> Mask {
        self.singles[t]
            .iter()
            .enumerate()
            .filter(|(_, v)| *v <= tau)
            .fold(0, |acc, (j, _)| acc | (1 << j))
    }

    pub fn mu(&self, t: usize, s: Mask, tau: &Q) -> &Q {
        &self.sets[t][(self.core_items(t, tau) & s) as usize]
    }
}

/// Surplus of each chosen item, for callers that need the bundle explicitly.
pub fn bundle_surplus(t: &[Q], prices: &[Q], bundle: Mask) -> Q {
    items(bundle).fold(Q::zero(), |acc, j| acc + &t[j] - &prices[j])
}

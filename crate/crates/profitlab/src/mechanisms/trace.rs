//! Path-by-path replay of a mechanism on one type profile and cost atom.
//!
//! `simulate` draws every coin from a [`Randomness`] source, so the same code
//! serves Monte-Carlo sampling (a seeded generator) and exact enumeration
//! ([`enumerate_outcomes`], which walks every coin path).

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use super::eval::{choose, eligibility, offered, pairs, price, taken, EvalResult, TRACE_LIMIT};
use super::MechanismSpec;
use crate::error::{Error, Result};
use crate::model::{bit, full_mask, items, Instance, Mask, PairConstraint};
use crate::rational::Q;

/// Source of biased coins.
pub trait Randomness {
    /// `true` with probability `p`. Implementations must not consume randomness when `p ∈ {0, 1}`.
    fn flip(&mut self, p: &Q) -> bool;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Purchase {
    pub buyer: usize,
    pub permits: Mask,
    pub stage_one_paid: Q,
    pub items: Mask,
    pub item_paid: Q,
    pub cost: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Outcome {
    pub purchases: Vec<Purchase>,
}

impl Outcome {
    pub fn profit(&self) -> Q {
        self.purchases.iter().fold(Q::zero(), |acc, p| {
            acc + &p.stage_one_paid + &p.item_paid - &p.cost
        })
    }
}

fn pick(options: &[(Mask, Q)], rng: &mut impl Randomness) -> Mask {
    let mut rest = Q::one();
    for (k, (p, pp)) in options.iter().enumerate() {
        if k + 1 == options.len() || rng.flip(&(pp / &rest)) {
            return *p;
        }
        rest -= pp;
    }
    0
}

/// One run of the mechanism. Stage-one behaviour and hiding come from `result`.
pub fn simulate(
    instance: &Instance,
    spec: &MechanismSpec,
    result: &EvalResult,
    profile: &[usize],
    c: usize,
    rng: &mut impl Randomness,
) -> Outcome {
    let (n, m) = (instance.n(), instance.m());
    let pc = PairConstraint::new(instance);
    let atom = &instance.atoms()[c];
    let mut a: u64 = 0;
    let mut purchases = Vec::with_capacity(n);
    for &i in &spec.order {
        let t = &instance.types(i).values[profile[i]];
        let permits = pick(&result.decisions[i][profile[i]], rng);
        let mut visible = full_mask(m) & !taken(&pc, n, a);
        if let Some(h) = &result.hide_probs {
            for j in items(visible) {
                if rng.flip(&h[i][j][c]) {
                    visible &= !bit(j);
                }
            }
        }
        let allowed = offered(spec, i, c) & visible & permits;
        let mut eligible: Mask = 0;
        for j in items(allowed) {
            let p = price(spec, i, j, c);
            if t[j] > *p || (t[j] == *p && rng.flip(&spec.rationing[i][j][c])) {
                eligible |= bit(j);
            }
        }
        debug_assert!(eligibility(spec, i, t, c, allowed)
            .iter()
            .any(|(e, _)| *e == eligible));
        let (_, s) = choose(instance, spec, &pc, i, t, c, eligible, a);
        a |= pairs(&pc, i, s);
        purchases.push(Purchase {
            buyer: i,
            permits,
            stage_one_paid: spec.stage_one_price(i, permits),
            items: s,
            item_paid: items(s).fold(Q::zero(), |acc, j| acc + price(spec, i, j, c)),
            cost: items(s).fold(Q::zero(), |acc, j| acc + &atom.costs[j]),
        });
    }
    Outcome { purchases }
}

/// Replays a fixed prefix of coin outcomes, then answers `true` to new coins.
struct PathCoins {
    path: Vec<bool>,
    pos: usize,
    prob: Q,
}

impl PathCoins {
    fn start(&mut self) {
        self.pos = 0;
        self.prob = Q::one();
    }

    /// Next path in depth-first order; `false` once every path was visited.
    fn advance(&mut self) -> bool {
        self.path.truncate(self.pos);
        while self.path.last() == Some(&false) {
            self.path.pop();
        }
        match self.path.last_mut() {
            Some(last) => {
                *last = false;
                true
            }
            None => false,
        }
    }
}

impl Randomness for PathCoins {
    fn flip(&mut self, p: &Q) -> bool {
        if p.is_zero() {
            return false;
        }
        if p.is_one() {
            return true;
        }
        if self.pos == self.path.len() {
            self.path.push(true);
        }
        let b = self.path[self.pos];
        self.pos += 1;
        self.prob *= if b { p.clone() } else { Q::one() - p };
        b
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub profile: Vec<usize>,
    pub atom: usize,
    /// Joint probability of the profile, the atom and the coin path.
    pub prob: Q,
    pub outcome: Outcome,
}

/// Every (profile, atom, coin path) with its probability and purchases.
pub fn enumerate_outcomes(
    instance: &Instance,
    spec: &MechanismSpec,
    result: &EvalResult,
) -> Result<Vec<TraceEntry>> {
    let runs = instance
        .profile_count()
        .saturating_mul(instance.atoms().len());
    if runs > TRACE_LIMIT {
        return Err(Error::TooLarge {
            what: "trace enumeration",
            required: runs,
            limit: TRACE_LIMIT,
        });
    }
    let mut out = Vec::new();
    for k in 0..instance.profile_count() {
        let profile = instance.profile(k);
        let pp = instance.profile_prob(&profile);
        for (c, atom) in instance.atoms().iter().enumerate() {
            let base = &pp * &atom.prob;
            let mut coins = PathCoins {
                path: vec![],
                pos: 0,
                prob: Q::one(),
            };
            loop {
                coins.start();
                let outcome = simulate(instance, spec, result, &profile, c, &mut coins);
                if !coins.prob.is_zero() {
                    out.push(TraceEntry {
                        profile: profile.clone(),
                        atom: c,
                        prob: &base * &coins.prob,
                        outcome,
                    });
                }
                if !coins.advance() {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Expected profit recomputed from a trace.
pub fn trace_profit(trace: &[TraceEntry]) -> Q {
    trace
        .iter()
        .fold(Q::zero(), |acc, e| acc + &e.prob * e.outcome.profit())
}

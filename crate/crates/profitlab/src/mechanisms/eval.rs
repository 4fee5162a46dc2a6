//! Exact evaluation by dynamic programming over the joint allocation so far.
//!
//! For each cost atom the state is the distribution of the allocated pair
//! mask `A` (pair `(i, j)` ↦ bit `i·m + j`). Buyers are processed in order;
//! every random choice (types, hiding, rationing and tie coins) is summed
//! out exactly.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use super::{Kind, MechanismSpec};
use crate::error::{Error, Result};
use crate::model::{bit, full_mask, items, submasks, Instance, Mask, PairConstraint};
use crate::rational::{half, Q};

/// Largest number of (profile, cost atom) pairs the trace enumerator accepts.
pub const TRACE_LIMIT: usize = 100_000;

/// Probabilities observed during evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostics {
    /// `Pr[item j unsold when buyer i arrives | c]`, `[i][j][c]`.
    pub availability: Vec<Vec<Vec<Q>>>,
    /// `Pr[item j visible to buyer i | c]` after hiding, `[i][j][c]`.
    pub visibility: Vec<Vec<Vec<Q>>>,
    /// `Pr[buyer i buys permit j]`, `[i][j]`.
    pub permit_purchase: Vec<Vec<Q>>,
    /// `Pr[buyer i pays its bundle price]`.
    pub bundle_accept: Vec<Q>,
    /// `Pr[buyer i receives item j]`, averaged over costs.
    pub item_purchase: Vec<Vec<Q>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalResult {
    pub profit: Q,
    /// Per buyer: permit or bundle payments.
    pub stage_one_revenue: Vec<Q>,
    /// Per buyer: item payments.
    pub item_revenue: Vec<Q>,
    /// Per buyer: production cost of the items it received.
    pub cost: Vec<Q>,
    /// Stage-one behaviour, `[i][t]` → distribution over permit sets.
    pub decisions: Vec<Vec<Vec<(Mask, Q)>>>,
    /// Hiding probabilities actually used (after calibration), RSPP only.
    pub hide_probs: Option<Vec<Vec<Vec<Q>>>>,
    /// Distribution of visible item sets per buyer and atom, `[i][c]`.
    pub visible: Vec<Vec<BTreeMap<Mask, Q>>>,
    pub diagnostics: Diagnostics,
}

impl EvalResult {
    pub fn revenue(&self, i: usize) -> Q {
        &self.stage_one_revenue[i] + &self.item_revenue[i]
    }
}

pub(crate) fn offered(spec: &MechanismSpec, i: usize, c: usize) -> Mask {
    (0..spec.item_prices[i].len())
        .filter(|&j| spec.item_prices[i][j][c].is_some())
        .fold(0, |acc, j| acc | bit(j))
}

pub(crate) fn price(spec: &MechanismSpec, i: usize, j: usize, c: usize) -> &Q {
    spec.item_prices[i][j][c]
        .as_ref()
        .expect("price of an offered item")
}

/// Items of `allowed` the buyer may purchase, split over rationing coins at exact-price ties.
pub(crate) fn eligibility(
    spec: &MechanismSpec,
    i: usize,
    t: &[Q],
    c: usize,
    allowed: Mask,
) -> Vec<(Mask, Q)> {
    let mut sure: Mask = 0;
    let mut coins: Vec<(usize, Q)> = Vec::new();
    for j in items(allowed) {
        let p = price(spec, i, j, c);
        if t[j] > *p {
            sure |= bit(j);
        } else if t[j] == *p {
            let r = &spec.rationing[i][j][c];
            if r.is_one() {
                sure |= bit(j);
            } else if !r.is_zero() {
                coins.push((j, r.clone()));
            }
        }
    }
    let mut out = Vec::with_capacity(1 << coins.len());
    for pattern in 0..1u32 << coins.len() {
        let mut mask = sure;
        let mut prob = Q::one();
        for (k, (j, r)) in coins.iter().enumerate() {
            if pattern & (1 << k) != 0 {
                mask |= bit(*j);
                prob *= r;
            } else {
                prob *= Q::one() - r;
            }
        }
        out.push((mask, prob));
    }
    out
}

/// Surplus-maximizing bundle among `eligible`: feasible for the buyer and,
/// with a sub-constraint, jointly with the allocation `a`.
pub(crate) fn choose(
    instance: &Instance,
    spec: &MechanismSpec,
    pc: &PairConstraint,
    i: usize,
    t: &[Q],
    c: usize,
    eligible: Mask,
    a: u64,
) -> (Q, Mask) {
    let weights: Vec<Q> = (0..instance.m())
        .map(|j| {
            if eligible & bit(j) != 0 {
                &t[j] - price(spec, i, j, c)
            } else {
                Q::zero()
            }
        })
        .collect();
    let family = instance.family(i);
    match spec.sub_constraint.as_ref().map(|s| &s[c]) {
        None => family.best_subset(&weights, eligible),
        Some(sub) => {
            let mut best = (Q::zero(), 0 as Mask);
            for s in submasks(eligible) {
                if s == 0 || !family.contains(s) || !sub.contains(a | pairs(pc, i, s)) {
                    continue;
                }
                let w = items(s).fold(Q::zero(), |acc, j| acc + &weights[j]);
                if w > best.0 || (w == best.0 && s.count_ones() > best.1.count_ones()) {
                    best = (w, s);
                }
            }
            best
        }
    }
}

pub(crate) fn pairs(pc: &PairConstraint, i: usize, s: Mask) -> u64 {
    items(s).fold(0u64, |acc, j| acc | 1u64 << pc.pair(i, j))
}

pub(crate) fn taken(pc: &PairConstraint, n: usize, a: u64) -> Mask {
    (0..n).fold(0, |acc, i| acc | pc.bundle(a, i))
}

/// Visible subsets of `remaining` after independent hiding.
pub(crate) fn hide_split(hide: Option<&[Vec<Q>]>, c: usize, remaining: Mask) -> Vec<(Mask, Q)> {
    let Some(h) = hide else {
        return vec![(remaining, Q::one())];
    };
    let coins: Vec<usize> = items(remaining).filter(|&j| !h[j][c].is_zero()).collect();
    let fixed = remaining & !coins.iter().fold(0, |acc, &j| acc | bit(j));
    let mut out = Vec::with_capacity(1 << coins.len());
    for pattern in 0..1u32 << coins.len() {
        let mut mask = fixed;
        let mut prob = Q::one();
        for (k, &j) in coins.iter().enumerate() {
            if pattern & (1 << k) != 0 {
                mask |= bit(j);
                prob *= Q::one() - &h[j][c];
            } else {
                prob *= &h[j][c];
            }
        }
        if !prob.is_zero() {
            out.push((mask, prob));
        }
    }
    out
}

/// Expected stage-two utility of holding permits `p` for type values `t`.
pub(crate) fn expected_utility(
    instance: &Instance,
    spec: &MechanismSpec,
    pc: &PairConstraint,
    visible: &[BTreeMap<Mask, Q>],
    i: usize,
    t: &[Q],
    p: Mask,
) -> Q {
    let mut total = Q::zero();
    for (c, atom) in instance.atoms().iter().enumerate() {
        let off = offered(spec, i, c) & p;
        let mut inner = Q::zero();
        for (v, pv) in &visible[c] {
            for (e, pe) in eligibility(spec, i, t, c, off & v) {
                inner += pv * pe * choose(instance, spec, pc, i, t, c, e, 0).0;
            }
        }
        total += &atom.prob * inner;
    }
    total
}

/// Stage-one choice of one type as a distribution over permit sets.
pub(crate) fn decide(
    instance: &Instance,
    spec: &MechanismSpec,
    pc: &PairConstraint,
    visible: &[BTreeMap<Mask, Q>],
    i: usize,
    t: &[Q],
) -> Vec<(Mask, Q)> {
    let m = instance.m();
    let eu = |p: Mask| expected_utility(instance, spec, pc, visible, i, t, p);
    match spec.kind {
        Kind::Ip | Kind::Csip => vec![(full_mask(m), Q::one())],
        Kind::Pb | Kind::Spb => match &spec.bundle_prices[i] {
            Some(delta) if eu(full_mask(m)) >= *delta => vec![(full_mask(m), Q::one())],
            _ => vec![(0, Q::one())],
        },
        Kind::Pp => {
            let offered_permits = (0..m)
                .filter(|&j| spec.permit_prices[i][j].is_some())
                .fold(0, |acc, j| acc | bit(j));
            let mut best = (Q::zero(), 0 as Mask);
            for p in submasks(offered_permits).skip(1) {
                let net = eu(p) - spec.stage_one_price(i, p);
                if net > best.0 || (net == best.0 && p.count_ones() > best.1.count_ones()) {
                    best = (net, p);
                }
            }
            vec![(best.1, Q::one())]
        }
        Kind::Rspp => {
            let nets: Vec<(usize, Q)> = (0..m)
                .filter_map(|j| {
                    spec.permit_prices[i][j]
                        .as_ref()
                        .map(|l| (j, eu(bit(j)) - l))
                })
                .collect();
            let top = nets.iter().map(|(_, v)| v.clone()).max();
            match top {
                Some(v) if v > Q::zero() => {
                    let j = nets
                        .iter()
                        .find(|(_, x)| *x == v)
                        .map(|(j, _)| *j)
                        .unwrap_or(0);
                    vec![(bit(j), Q::one())]
                }
                Some(v) if v.is_zero() => {
                    // Zero-utility permits are tried in index order, each accepted by its coin.
                    let mut out = Vec::new();
                    let mut rest = Q::one();
                    for (j, _) in nets.iter().filter(|(_, x)| x.is_zero()) {
                        let a = &spec.zero_utility_accept[i][*j];
                        if !a.is_zero() {
                            out.push((bit(*j), &rest * a));
                            rest *= Q::one() - a;
                        }
                    }
                    if !rest.is_zero() {
                        out.push((0, rest));
                    }
                    out
                }
                _ => vec![(0, Q::one())],
            }
        }
    }
}

/// Exact expected profit and diagnostics.
pub fn evaluate(instance: &Instance, spec: &MechanismSpec) -> Result<EvalResult> {
    spec.validate(instance)?;
    let (n, m) = (instance.n(), instance.m());
    let atoms = instance.atoms();
    let nc = atoms.len();
    let pc = PairConstraint::new(instance);

    let calibrate = spec.kind == Kind::Rspp && spec.hide_probs.is_none();
    let mut hide: Option<Vec<Vec<Vec<Q>>>> = match spec.kind {
        Kind::Rspp => Some(
            spec.hide_probs
                .clone()
                .unwrap_or_else(|| vec![vec![vec![Q::zero(); nc]; m]; n]),
        ),
        _ => None,
    };

    let mut state: Vec<BTreeMap<u64, Q>> = (0..nc)
        .map(|_| BTreeMap::from([(0u64, Q::one())]))
        .collect();
    let mut stage_one_revenue = vec![Q::zero(); n];
    let mut item_revenue = vec![Q::zero(); n];
    let mut cost = vec![Q::zero(); n];
    let mut decisions = vec![Vec::new(); n];
    let mut visible_all = vec![Vec::new(); n];
    let mut diag = Diagnostics {
        availability: vec![vec![vec![Q::zero(); nc]; m]; n],
        visibility: vec![vec![vec![Q::zero(); nc]; m]; n],
        permit_purchase: vec![vec![Q::zero(); m]; n],
        bundle_accept: vec![Q::zero(); n],
        item_purchase: vec![vec![Q::zero(); m]; n],
    };

    for &i in &spec.order {
        let types = instance.types(i);
        for c in 0..nc {
            for (a, pa) in &state[c] {
                let rem = full_mask(m) & !taken(&pc, n, *a);
                for j in items(rem) {
                    diag.availability[i][j][c] += pa;
                }
            }
        }
        if calibrate {
            let h = hide.as_mut().expect("hiding table");
            for j in 0..m {
                for c in 0..nc {
                    let avail = &diag.availability[i][j][c];
                    if *avail < half() {
                        return Err(Error::Precondition(alloc::format!(
                            "item {j} is available to buyer {i} with probability {avail} < 1/2 under cost atom {c}"
                        )));
                    }
                    h[i][j][c] = Q::one() - half() / avail;
                }
            }
        }
        let hide_i = hide.as_ref().map(|h| h[i].as_slice());

        let mut visible: Vec<BTreeMap<Mask, Q>> = vec![BTreeMap::new(); nc];
        for c in 0..nc {
            for (a, pa) in &state[c] {
                let rem = full_mask(m) & !taken(&pc, n, *a);
                for (v, pv) in hide_split(hide_i, c, rem) {
                    *visible[c].entry(v).or_insert_with(Q::zero) += pa * pv;
                }
            }
            for (v, pv) in &visible[c] {
                for j in items(*v) {
                    diag.visibility[i][j][c] += pv;
                }
            }
        }

        let dec: Vec<Vec<(Mask, Q)>> = (0..types.len())
            .map(|t| decide(instance, spec, &pc, &visible, i, &types.values[t]))
            .collect();
        for (t, options) in dec.iter().enumerate() {
            let ft = &types.probs[t];
            for (p, pp) in options {
                let w = ft * pp;
                stage_one_revenue[i] += &w * spec.stage_one_price(i, *p);
                if spec.kind.sells_permits() {
                    for j in items(*p) {
                        diag.permit_purchase[i][j] += &w;
                    }
                }
                if spec.kind.sells_bundles() && *p != 0 {
                    diag.bundle_accept[i] += &w;
                }
            }
        }

        for c in 0..nc {
            let atom = &atoms[c];
            let off = offered(spec, i, c);
            let mut next: BTreeMap<u64, Q> = BTreeMap::new();
            let mut pay = Q::zero();
            let mut spent = Q::zero();
            for (a, pa) in &state[c] {
                let rem = full_mask(m) & !taken(&pc, n, *a);
                for (v, pv) in hide_split(hide_i, c, rem) {
                    let w_av = pa * pv;
                    for (t, options) in dec.iter().enumerate() {
                        let tv = &types.values[t];
                        let w_t = &w_av * &types.probs[t];
                        for (p, pp) in options {
                            let w_p = &w_t * pp;
                            for (e, pe) in eligibility(spec, i, tv, c, off & v & p) {
                                let w = &w_p * pe;
                                let (_, s) = choose(instance, spec, &pc, i, tv, c, e, *a);
                                for j in items(s) {
                                    pay += &w * price(spec, i, j, c);
                                    spent += &w * &atom.costs[j];
                                    diag.item_purchase[i][j] += &w * &atom.prob;
                                }
                                *next.entry(a | pairs(&pc, i, s)).or_insert_with(Q::zero) += w;
                            }
                        }
                    }
                }
            }
            item_revenue[i] += &atom.prob * pay;
            cost[i] += &atom.prob * spent;
            next.retain(|_, p| !p.is_zero());
            state[c] = next;
        }
        decisions[i] = dec;
        visible_all[i] = visible;
    }

    let profit = (0..n).fold(Q::zero(), |acc, i| {
        acc + &stage_one_revenue[i] + &item_revenue[i] - &cost[i]
    });
    Ok(EvalResult {
        profit,
        stage_one_revenue,
        item_revenue,
        cost,
        decisions,
        hide_probs: hide,
        visible: visible_all,
        diagnostics: diag,
    })
}

/// Largest gain any buyer type gets by copying another type's stage-one action.
///
/// Item pricing has no stage one, so the gain is always zero there; for the
/// permit mechanisms this replays every unilateral deviation exactly.
pub fn incentive_gain(instance: &Instance, spec: &MechanismSpec, result: &EvalResult) -> Q {
    let pc = PairConstraint::new(instance);
    let mut worst = Q::zero();
    for i in 0..instance.n() {
        let types = instance.types(i);
        let value_of = |t: usize, options: &[(Mask, Q)]| -> Q {
            options.iter().fold(Q::zero(), |acc, (p, pp)| {
                acc + pp
                    * (expected_utility(
                        instance,
                        spec,
                        &pc,
                        &result.visible[i],
                        i,
                        &types.values[t],
                        *p,
                    ) - spec.stage_one_price(i, *p))
            })
        };
        let own: Vec<Q> = (0..types.len())
            .map(|t| value_of(t, &result.decisions[i][t]))
            .collect();
        for t in 0..types.len() {
            for r in 0..types.len() {
                let gain = value_of(t, &result.decisions[i][r]) - &own[t];
                if gain > worst {
                    worst = gain;
                }
            }
        }
    }
    worst
}

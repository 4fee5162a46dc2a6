//! Greedy online contention resolution over small ground sets.
//!
//! Elements are indices `0..size` (for auctions: pair `(i, j)` ↦ `i·m + j`).
//! A greedy scheme fixes a downward-closed subfamily up front and accepts an
//! active element whenever the accepted set stays inside it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{FamilyKind, Instance, PairConstraint};
use crate::rational::Q;

/// Largest ground set handled by exact enumeration.
pub const MAX_GROUND: usize = 12;

/// A downward-closed family on `0..size` with an explicit membership table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetSystem {
    size: usize,
    member: Vec<bool>,
}

impl SetSystem {
    pub fn from_fn(size: usize, f: impl Fn(u64) -> bool) -> Result<Self> {
        if size > MAX_GROUND {
            return Err(Error::TooLarge {
                what: "ground set",
                required: size,
                limit: MAX_GROUND,
            });
        }
        let member: Vec<bool> = (0..1u64 << size).map(f).collect();
        let sys = Self { size, member };
        if !sys.is_downward_closed() {
            return Err(Error::Family("set system is not downward-closed".into()));
        }
        Ok(sys)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, a: u64) -> bool {
        (a as usize) < self.member.len() && self.member[a as usize]
    }

    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.member.len() as u64).filter(|&a| self.member[a as usize])
    }

    fn is_downward_closed(&self) -> bool {
        self.member.first().copied().unwrap_or(false)
            && self
                .members()
                .all(|a| (0..self.size).all(|e| a & (1 << e) == 0 || self.contains(a & !(1 << e))))
    }

    pub fn intersect(&self, other: &Self) -> Self {
        assert_eq!(self.size, other.size);
        Self {
            size: self.size,
            member: self
                .member
                .iter()
                .zip(&other.member)
                .map(|(a, b)| *a && *b)
                .collect(),
        }
    }

    pub fn rank(&self, s: u64) -> usize {
        self.members()
            .filter(|a| a & !s == 0)
            .map(|a| a.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn is_matroid(&self) -> bool {
        let members: Vec<u64> = self.members().collect();
        members.iter().all(|&a| {
            members.iter().all(|&b| {
                a.count_ones() >= b.count_ones()
                    || (0..self.size).any(|e| b & !a & (1 << e) != 0 && self.contains(a | (1 << e)))
            })
        })
    }

    /// `{A : |A| ≤ k}` within this family.
    pub fn truncate(&self, k: usize) -> Self {
        Self {
            size: self.size,
            member: self
                .member
                .iter()
                .enumerate()
                .map(|(a, &m)| m && (a as u64).count_ones() as usize <= k)
                .collect(),
        }
    }
}

/// Each item to at most one buyer.
pub fn item_partition(instance: &Instance) -> Result<SetSystem> {
    let (n, m) = (instance.n(), instance.m());
    SetSystem::from_fn(n * m, |a| {
        (0..m).all(|j| (0..n).filter(|&i| a & (1 << (i * m + j)) != 0).count() <= 1)
    })
}

/// Each buyer's bundle feasible for that buyer.
pub fn buyer_families(instance: &Instance) -> Result<SetSystem> {
    let pc = PairConstraint::new(instance);
    SetSystem::from_fn(instance.n() * instance.m(), |a| {
        (0..instance.n()).all(|i| instance.family(i).contains(pc.bundle(a, i)))
    })
}

/// How the subfamily is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Rule {
    /// Plain greedy on the matroid itself.
    Plain(SetSystem),
    /// Best truncation of the matroid, chosen per activity vector.
    Search(SetSystem),
    /// Intersection of the parts' subfamilies.
    Compose(Vec<GreedyOcrs>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyOcrs {
    pub b: Q,
    /// Claimed selectability constant.
    pub c: Q,
    rule: Rule,
}

/// Greedy scheme for a matroid; `closed_form` marks uniform or partition matroids.
pub fn matroid_ocrs(matroid: &SetSystem, b: Q, closed_form: bool) -> Result<GreedyOcrs> {
    if b <= Q::zero() || b >= Q::one() {
        return Err(Error::Precondition(
            "b must lie strictly between 0 and 1".into(),
        ));
    }
    if !matroid.is_matroid() {
        return Err(Error::Precondition("greedy scheme needs a matroid".into()));
    }
    let c = Q::one() - &b;
    let rule = if closed_form {
        Rule::Plain(matroid.clone())
    } else {
        Rule::Search(matroid.clone())
    };
    Ok(GreedyOcrs { b, c, rule })
}

/// Run both schemes side by side: the subfamily is the intersection, constants multiply.
pub fn compose(first: &GreedyOcrs, second: &GreedyOcrs) -> GreedyOcrs {
    GreedyOcrs {
        b: first.b.clone(),
        c: &first.c * &second.c,
        rule: Rule::Compose(vec![first.clone(), second.clone()]),
    }
}

/// Composed scheme for the auction constraint: item partition ∩ buyer families.
pub fn auction_ocrs(instance: &Instance, b: Q) -> Result<GreedyOcrs> {
    let items = matroid_ocrs(&item_partition(instance)?, b.clone(), true)?;
    let closed = instance.families().iter().all(|f| {
        matches!(
            f.kind(),
            FamilyKind::Uniform { .. } | FamilyKind::Partition { .. }
        )
    });
    let buyers = matroid_ocrs(&buyer_families(instance)?, b, closed)?;
    Ok(compose(&items, &buyers))
}

impl GreedyOcrs {
    pub fn ground(&self) -> &SetSystem {
        match &self.rule {
            Rule::Plain(s) | Rule::Search(s) => s,
            Rule::Compose(parts) => parts[0].ground(),
        }
    }

    /// The full constraint the scheme resolves against.
    pub fn target(&self) -> SetSystem {
        match &self.rule {
            Rule::Plain(s) | Rule::Search(s) => s.clone(),
            Rule::Compose(parts) => parts
                .iter()
                .skip(1)
                .fold(parts[0].target(), |acc, p| acc.intersect(&p.target())),
        }
    }

    /// Subfamily used for activity vector `y`.
    pub fn subfamily(&self, y: &[Q]) -> SetSystem {
        match &self.rule {
            Rule::Plain(s) => s.clone(),
            Rule::Search(s) => {
                let rank = s.rank((1u64 << s.size()) - 1);
                let mut best: Option<(Q, SetSystem)> = None;
                for k in (1..=rank.max(1)).rev() {
                    let cand = s.truncate(k);
                    let c = min_selectability(&cand, y);
                    if best.as_ref().is_none_or(|(bc, _)| c > *bc) {
                        best = Some((c, cand));
                    }
                }
                best.map(|(_, s)| s).unwrap_or_else(|| s.clone())
            }
            Rule::Compose(parts) => parts.iter().skip(1).fold(parts[0].subfamily(y), |acc, p| {
                acc.intersect(&p.subfamily(y))
            }),
        }
    }
}

/// Exact selectability per element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectabilityReport {
    /// `Pr[A ∪ {e} ∈ 𝒥' for every feasible A ⊆ R(y)]`.
    pub per_element: Vec<Q>,
    /// Activity patterns enumerated.
    pub patterns: usize,
}

impl SelectabilityReport {
    /// Minimum over elements with positive activity; 1 when none are active.
    pub fn min_over_support(&self, y: &[Q]) -> Q {
        self.per_element
            .iter()
            .zip(y)
            .filter(|(_, ye)| !ye.is_zero())
            .map(|(s, _)| s.clone())
            .min()
            .unwrap_or_else(Q::one)
    }
}

fn pattern_prob(y: &[Q], active: u64) -> Q {
    y.iter().enumerate().fold(Q::one(), |acc, (e, ye)| {
        if active & (1 << e) != 0 {
            acc * ye
        } else {
            acc * (Q::one() - ye)
        }
    })
}

pub fn selectability(sub: &SetSystem, y: &[Q]) -> SelectabilityReport {
    let size = sub.size();
    let members: Vec<u64> = sub.members().collect();
    let mut per_element = vec![Q::zero(); size];
    for active in 0..1u64 << size {
        let p = pattern_prob(y, active);
        if p.is_zero() {
            continue;
        }
        for (e, slot) in per_element.iter_mut().enumerate() {
            let bit = 1u64 << e;
            let ok = members
                .iter()
                .all(|&a| a & !active != 0 || sub.contains(a | bit));
            if ok {
                *slot += &p;
            }
        }
    }
    SelectabilityReport {
        per_element,
        patterns: 1 << size,
    }
}

fn min_selectability(sub: &SetSystem, y: &[Q]) -> Q {
    selectability(sub, y).min_over_support(y)
}

/// `y ∈ b·P(M)` for every matroid part, via rank inequalities `y(S) ≤ b·r(S)`.
pub fn check_scaled_membership(parts: &[SetSystem], y: &[Q], b: &Q) -> Result<()> {
    for part in parts {
        let size = part.size();
        for s in 1..1u64 << size {
            let load = (0..size)
                .filter(|e| s & (1 << e) != 0)
                .fold(Q::zero(), |acc, e| acc + &y[e]);
            if load > b * Q::from_integer((part.rank(s) as i64).into()) {
                return Err(Error::OutsidePolytope { witness: s });
            }
        }
    }
    Ok(())
}

/// Subfamily for `y` together with its exactly certified constant.
pub fn certified_subfamily(ocrs: &GreedyOcrs, y: &[Q]) -> (SetSystem, Q) {
    let sub = ocrs.subfamily(y);
    let c = min_selectability(&sub, y);
    (sub, c)
}

/// Lower bound over all fixed arrival orders of `Pr[e selected] / y_e`.
///
/// Enumerates all `|J|!` orders, so the ground set must have at most 7 elements.
pub fn order_replay(sub: &SetSystem, y: &[Q]) -> Result<Vec<Q>> {
    let size = sub.size();
    if size > 7 {
        return Err(Error::TooLarge {
            what: "order enumeration ground set",
            required: size,
            limit: 7,
        });
    }
    let mut worst: Vec<Option<Q>> = vec![None; size];
    let mut order: Vec<usize> = (0..size).collect();
    loop {
        let mut selected_prob = vec![Q::zero(); size];
        for active in 0..1u64 << size {
            let p = pattern_prob(y, active);
            if p.is_zero() {
                continue;
            }
            let mut chosen = 0u64;
            for &e in &order {
                if active & (1 << e) != 0 && sub.contains(chosen | (1 << e)) {
                    chosen |= 1 << e;
                    selected_prob[e] += &p;
                }
            }
        }
        for e in 0..size {
            if y[e].is_zero() {
                continue;
            }
            let ratio = &selected_prob[e] / &y[e];
            if worst[e].as_ref().is_none_or(|w| ratio < *w) {
                worst[e] = Some(ratio);
            }
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    Ok(worst
        .into_iter()
        .map(|w| w.unwrap_or_else(Q::one))
        .collect())
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Human-readable summary, used by reports.
pub fn describe(ocrs: &GreedyOcrs) -> alloc::string::String {
    format!("greedy OCRS (b = {}, c = {})", ocrs.b, ocrs.c)
}

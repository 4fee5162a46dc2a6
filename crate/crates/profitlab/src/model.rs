//! Buyers, items, costs and feasibility.
//!
//! Item sets are bitmasks (`Mask`, bit `j` = item `j`). Types are enumerated
//! in mixed radix with item 0 as the most significant digit, so type index 0
//! is the all-lowest profile.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};
use once_cell::race::OnceBox;

use crate::error::{Error, Result};
use crate::rational::Q;

pub type Mask = u32;

/// Largest item count the bitmask tables support.
pub const MAX_ITEMS: usize = 16;

pub fn bit(j: usize) -> Mask {
    1 << j
}

pub fn full_mask(m: usize) -> Mask {
    if m == 0 {
        0
    } else {
        (1u32 << m) - 1
    }
}

pub fn items(mask: Mask) -> impl Iterator<Item = usize> {
    (0..32usize).filter(move |j| mask & (1 << j) != 0)
}

/// All submasks of `mask`, including 0 and `mask` itself, in increasing order.
pub fn submasks(mask: Mask) -> impl Iterator<Item = Mask> {
    (0..=mask).filter(move |s| s & !mask == 0)
}

/// A finite distribution with strictly increasing support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteDist {
    support: Vec<Q>,
    probs: Vec<Q>,
}

impl DiscreteDist {
    pub fn new(support: Vec<Q>, probs: Vec<Q>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::Distribution(msg.to_string()));
        if support.is_empty() || support.len() != probs.len() {
            return bad("support and probabilities must be non-empty and equally long");
        }
        if support.iter().any(Signed::is_negative) {
            return bad("values must be non-negative");
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return bad("support must be strictly increasing");
        }
        if probs.iter().any(|p| !p.is_positive()) {
            return bad("probabilities must be positive");
        }
        if !crate::rational::sum(&probs).is_one() {
            return bad("probabilities must sum to 1");
        }
        Ok(Self { support, probs })
    }

    pub fn point(v: Q) -> Self {
        Self {
            support: vec![v],
            probs: vec![Q::one()],
        }
    }

    /// Equal weight on each value; values are sorted and deduplicated first.
    pub fn uniform(mut values: Vec<Q>) -> Result<Self> {
        values.sort();
        values.dedup();
        let w = Q::new(1.into(), (values.len() as i64).into());
        let probs = vec![w; values.len()];
        Self::new(values, probs)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[Q] {
        &self.support
    }

    pub fn probs(&self) -> &[Q] {
        &self.probs
    }

    pub fn max_value(&self) -> &Q {
        self.support.last().expect("non-empty support")
    }

    /// `Pr[t >= support[k]]`.
    pub fn tail_from(&self, k: usize) -> Q {
        crate::rational::sum(&self.probs[k..])
    }

    /// `Pr[t >= x]` for an arbitrary threshold.
    pub fn prob_at_least(&self, x: &Q) -> Q {
        self.support
            .iter()
            .zip(&self.probs)
            .filter(|(s, _)| *s >= x)
            .fold(Q::zero(), |acc, (_, p)| acc + p)
    }

    /// `Pr[t > x]`.
    pub fn prob_above(&self, x: &Q) -> Q {
        self.support
            .iter()
            .zip(&self.probs)
            .filter(|(s, _)| *s > x)
            .fold(Q::zero(), |acc, (_, p)| acc + p)
    }

    pub fn mean(&self) -> Q {
        self.support
            .iter()
            .zip(&self.probs)
            .fold(Q::zero(), |acc, (s, p)| acc + s * p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostAtom {
    pub costs: Vec<Q>,
    pub prob: Q,
}

/// Correlated seller costs: a finite list of cost vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostModel {
    atoms: Vec<CostAtom>,
}

impl CostModel {
    pub fn new(atoms: Vec<CostAtom>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::Costs(msg.to_string()));
        let Some(first) = atoms.first() else {
            return bad("at least one cost atom is required");
        };
        let m = first.costs.len();
        for (k, a) in atoms.iter().enumerate() {
            if a.costs.len() != m {
                return bad("all cost vectors must have the same length");
            }
            if a.costs.iter().any(Signed::is_negative) {
                return bad("costs must be non-negative");
            }
            if !a.prob.is_positive() {
                return bad("atom probabilities must be positive");
            }
            if atoms[..k].iter().any(|b| b.costs == a.costs) {
                return bad("cost atoms must be distinct");
            }
        }
        if !crate::rational::sum(atoms.iter().map(|a| &a.prob)).is_one() {
            return bad("atom probabilities must sum to 1");
        }
        Ok(Self { atoms })
    }

    /// A single deterministic cost vector.
    pub fn fixed(costs: Vec<Q>) -> Self {
        Self {
            atoms: vec![CostAtom {
                costs,
                prob: Q::one(),
            }],
        }
    }

    pub fn atoms(&self) -> &[CostAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].costs.len()
    }
}

/// How a feasibility family was described.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyKind {
    /// Every listed set plus all of their subsets.
    DownwardClosed {
        generators: Vec<Mask>,
    },
    Uniform {
        rank: usize,
    },
    Partition {
        parts: Vec<Mask>,
        capacities: Vec<usize>,
    },
    /// Independent sets are the subsets of the listed bases.
    Bases {
        bases: Vec<Mask>,
    },
}

/// A downward-closed family over `m` items with a precomputed membership table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    m: usize,
    kind: FamilyKind,
    member: Vec<bool>,
    matroid: bool,
}

impl Family {
    pub fn new(m: usize, kind: FamilyKind) -> Result<Self> {
        if m > MAX_ITEMS {
            return Err(Error::Family(format!(
                "at most {MAX_ITEMS} items supported"
            )));
        }
        let full = full_mask(m);
        let size = 1usize << m;
        let mut member = vec![false; size];
        let outside = |s: Mask| s & !full != 0;
        match &kind {
            FamilyKind::DownwardClosed { generators } | FamilyKind::Bases { bases: generators } => {
                if generators.iter().any(|&g| outside(g)) {
                    return Err(Error::Family(
                        "set mentions an item outside the ground set".into(),
                    ));
                }
                member[0] = true;
                for &g in generators {
                    for s in submasks(g) {
                        member[s as usize] = true;
                    }
                }
            }
            FamilyKind::Uniform { rank } => {
                for s in 0..size {
                    member[s] = (s as Mask).count_ones() as usize <= *rank;
                }
            }
            FamilyKind::Partition { parts, capacities } => {
                if parts.len() != capacities.len() {
                    return Err(Error::Family("one capacity per part is required".into()));
                }
                let mut seen: Mask = 0;
                for &p in parts {
                    if p & seen != 0 || outside(p) {
                        return Err(Error::Family(
                            "parts must be disjoint subsets of the ground set".into(),
                        ));
                    }
                    seen |= p;
                }
                if seen != full {
                    return Err(Error::Family("parts must cover the ground set".into()));
                }
                for s in 0..size {
                    member[s] = parts
                        .iter()
                        .zip(capacities)
                        .all(|(&p, &cap)| ((s as Mask) & p).count_ones() as usize <= cap);
                }
            }
        }
        let mut fam = Self {
            m,
            kind,
            member,
            matroid: false,
        };
        fam.matroid = fam.satisfies_exchange();
        if matches!(fam.kind, FamilyKind::Bases { .. }) && !fam.matroid {
            return Err(Error::Family("listed bases do not form a matroid".into()));
        }
        Ok(fam)
    }

    pub fn additive(m: usize) -> Self {
        Self::new(m, FamilyKind::Uniform { rank: m }).expect("free matroid")
    }

    pub fn unit_demand(m: usize) -> Self {
        Self::new(m, FamilyKind::Uniform { rank: 1.min(m) }).expect("rank-one matroid")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn contains(&self, s: Mask) -> bool {
        (s as usize) < self.member.len() && self.member[s as usize]
    }

    /// True when the family is a matroid (checked exhaustively at construction).
    pub fn is_matroid(&self) -> bool {
        self.matroid
    }

    pub fn is_additive(&self) -> bool {
        self.member.iter().all(|&b| b)
    }

    pub fn members(&self) -> impl Iterator<Item = Mask> + '_ {
        (0..self.member.len() as Mask).filter(|&s| self.member[s as usize])
    }

    /// Size of the largest feasible subset of `s`.
    pub fn rank(&self, s: Mask) -> usize {
        submasks(s)
            .filter(|&t| self.contains(t))
            .map(|t| t.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Exchange axiom over all member pairs.
    pub fn satisfies_exchange(&self) -> bool {
        let members: Vec<Mask> = self.members().collect();
        members.iter().all(|&a| {
            members.iter().all(|&b| {
                a.count_ones() >= b.count_ones() || items(b & !a).any(|j| self.contains(a | bit(j)))
            })
        })
    }

    /// Maximum of `Σ weight_j` over feasible subsets of `allowed`.
    ///
    /// Ties prefer the larger set, then the numerically smallest mask.
    pub fn best_subset(&self, weights: &[Q], allowed: Mask) -> (Q, Mask) {
        let mut best = (Q::zero(), 0 as Mask);
        for s in submasks(allowed) {
            if s == 0 || !self.contains(s) {
                continue;
            }
            let w = items(s).fold(Q::zero(), |acc, j| acc + &weights[j]);
            let better = match w.cmp(&best.0) {
                core::cmp::Ordering::Greater => true,
                core::cmp::Ordering::Equal => s.count_ones() > best.1.count_ones(),
                core::cmp::Ordering::Less => false,
            };
            if better {
                best = (w, s);
            }
        }
        best
    }

    /// Maximum weight of a feasible subset of `allowed`; negative weights never help.
    ///
    /// Matroids use the greedy algorithm, other families exhaustive search.
    pub fn max_weight(&self, weights: &[Q], allowed: Mask) -> Q {
        if !self.matroid {
            return self.best_subset(weights, allowed).0;
        }
        let mut order: Vec<usize> = items(allowed)
            .filter(|&j| weights[j].is_positive())
            .collect();
        order.sort_by(|&a, &b| weights[b].cmp(&weights[a]).then(a.cmp(&b)));
        let mut chosen: Mask = 0;
        let mut total = Q::zero();
        for j in order {
            if self.contains(chosen | bit(j)) {
                chosen |= bit(j);
                total += &weights[j];
            }
        }
        total
    }
}

/// Enumerated types of one buyer: the product of that buyer's item distributions.
#[derive(Debug, Clone)]
pub struct TypeSpace {
    pub values: Vec<Vec<Q>>,
    pub probs: Vec<Q>,
    pub digits: Vec<Vec<usize>>,
    radix: Vec<usize>,
}

impl TypeSpace {
    pub fn new(dists: &[DiscreteDist]) -> Self {
        let radix: Vec<usize> = dists.iter().map(DiscreteDist::len).collect();
        let count: usize = radix.iter().product();
        let mut values = Vec::with_capacity(count);
        let mut probs = Vec::with_capacity(count);
        let mut digits = Vec::with_capacity(count);
        let mut d = vec![0usize; dists.len()];
        for _ in 0..count {
            values.push(
                d.iter()
                    .zip(dists)
                    .map(|(&k, dist)| dist.support()[k].clone())
                    .collect(),
            );
            probs.push(
                d.iter()
                    .zip(dists)
                    .fold(Q::one(), |acc, (&k, dist)| acc * &dist.probs()[k]),
            );
            digits.push(d.clone());
            for pos in (0..d.len()).rev() {
                d[pos] += 1;
                if d[pos] < radix[pos] {
                    break;
                }
                d[pos] = 0;
            }
        }
        Self {
            values,
            probs,
            digits,
            radix,
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.radix)
            .fold(0, |acc, (&d, &r)| acc * r + d)
    }

    /// Same type with item `j` moved to support position `k`.
    pub fn with_digit(&self, t: usize, j: usize, k: usize) -> usize {
        let mut d = self.digits[t].clone();
        d[j] = k;
        self.index_of(&d)
    }
}

/// A buyer's type space, enumerated on first use.
struct LazyTypes(OnceBox<TypeSpace>);

impl Clone for LazyTypes {
    fn clone(&self) -> Self {
        let cell = OnceBox::new();
        if let Some(t) = self.0.get() {
            let _ = cell.set(Box::new(t.clone()));
        }
        Self(cell)
    }
}

impl core::fmt::Debug for LazyTypes {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.0.get() {
            Some(t) => write!(f, "{} types", t.len()),
            None => f.write_str("not enumerated"),
        }
    }
}

/// A complete problem description.
#[derive(Debug, Clone)]
pub struct Instance {
    n: usize,
    m: usize,
    dists: Vec<Vec<DiscreteDist>>,
    costs: CostModel,
    families: Vec<Family>,
    types: Vec<LazyTypes>,
}

impl Instance {
    pub fn new(
        dists: Vec<Vec<DiscreteDist>>,
        costs: CostModel,
        families: Vec<Family>,
    ) -> Result<Self> {
        let n = dists.len();
        let m = costs.dim();
        if n == 0 {
            return Err(Error::Instance("at least one buyer is required".into()));
        }
        if families.len() != n {
            return Err(Error::Instance(
                "one feasibility family per buyer is required".into(),
            ));
        }
        if dists.iter().any(|row| row.len() != m) {
            return Err(Error::Instance(
                "every buyer needs one distribution per item".into(),
            ));
        }
        if families.iter().any(|f| f.m() != m) {
            return Err(Error::Instance(
                "family ground sizes must equal the item count".into(),
            ));
        }
        let types = dists.iter().map(|_| LazyTypes(OnceBox::new())).collect();
        Ok(Self {
            n,
            m,
            dists,
            costs,
            families,
            types,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The same buyers facing cost atom `c` with certainty.
    pub fn at_atom(&self, c: usize) -> Self {
        let costs = CostModel::fixed(self.costs.atoms()[c].costs.clone());
        Self {
            costs,
            ..self.clone()
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dist(&self, i: usize, j: usize) -> &DiscreteDist {
        &self.dists[i][j]
    }

    pub fn dists(&self) -> &[Vec<DiscreteDist>] {
        &self.dists
    }

    pub fn costs(&self) -> &CostModel {
        &self.costs
    }

    pub fn atoms(&self) -> &[CostAtom] {
        self.costs.atoms()
    }

    pub fn family(&self, i: usize) -> &Family {
        &self.families[i]
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    /// Buyer `i`'s enumerated types; built on first call.
    pub fn types(&self, i: usize) -> &TypeSpace {
        self.types[i].0.get_or_init(|| Box::new(TypeSpace::new(&self.dists[i])))
    }

    /// `|T_i|` without enumerating the types.
    pub fn type_count(&self, i: usize) -> usize {
        self.dists[i].iter().map(DiscreteDist::len).product()
    }

    pub fn all_matroids(&self) -> bool {
        self.families.iter().all(Family::is_matroid)
    }

    /// Number of joint type profiles.
    pub fn profile_count(&self) -> usize {
        (0..self.n).map(|i| self.type_count(i)).product()
    }

    /// Per-buyer type indices of profile `k` (buyer 0 most significant).
    pub fn profile(&self, mut k: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for i in (0..self.n).rev() {
            let r = self.type_count(i);
            out[i] = k % r;
            k /= r;
        }
        out
    }

    pub fn profile_prob(&self, profile: &[usize]) -> Q {
        profile
            .iter()
            .enumerate()
            .fold(Q::one(), |acc, (i, &t)| acc * &self.types(i).probs[t])
    }

    /// Largest value any buyer can have for any item.
    pub fn max_value(&self) -> Q {
        self.dists
            .iter()
            .flatten()
            .map(|d| d.max_value().clone())
            .max()
            .unwrap_or_else(Q::zero)
    }
}

/// Joint allocations: each item to at most one buyer, each buyer's bundle in its family.
///
/// Pair `(i, j)` has index `i * m + j`; an allocation is a mask over pair indices.
#[derive(Debug, Clone)]
pub struct PairConstraint {
    n: usize,
    m: usize,
    families: Vec<Family>,
}

impl PairConstraint {
    pub fn new(instance: &Instance) -> Self {
        Self {
            n: instance.n,
            m: instance.m,
            families: instance.families.clone(),
        }
    }

    pub fn ground_size(&self) -> usize {
        self.n * self.m
    }

    pub fn pair(&self, i: usize, j: usize) -> usize {
        i * self.m + j
    }

    /// The bundle buyer `i` receives under pair mask `a`.
    pub fn bundle(&self, a: u64, i: usize) -> Mask {
        ((a >> (i * self.m)) & full_mask(self.m) as u64) as Mask
    }

    pub fn contains(&self, a: u64) -> bool {
        let mut taken: Mask = 0;
        for i in 0..self.n {
            let s = self.bundle(a, i);
            if s & taken != 0 || !self.families[i].contains(s) {
                return false;
            }
            taken |= s;
        }
        true
    }

    /// Every feasible joint allocation, including the empty one, in increasing mask order.
    pub fn members(&self) -> Vec<u64> {
        // Build buyer by buyer to avoid scanning all 2^(nm) masks.
        let mut partial: Vec<(u64, Mask)> = vec![(0, 0)];
        for i in 0..self.n {
            let mut next = Vec::new();
            for &(a, taken) in &partial {
                for s in self.families[i].members() {
                    if s & taken == 0 {
                        next.push((a | ((s as u64) << (i * self.m)), taken | s));
                    }
                }
            }
            partial = next;
        }
        let mut out: Vec<u64> = partial.into_iter().map(|(a, _)| a).collect();
        out.sort_unstable();
        out
    }
}

//! Deliberately naive second implementations used to cross-check the rest of
//! the crate: full-grid price enumeration, the equal-revenue cost example,
//! and a literal recomputation of the benchmark sums.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lp::DirectMechanism;
use crate::mechanisms::construct::{for_each_combination, product_size};
use crate::mechanisms::{evaluate, Grid, Kind, MechanismSpec};
use crate::model::{CostAtom, CostModel, DiscreteDist, Family, Instance};
use crate::rational::{frac, half, int, Q};

/// Largest number of price combinations the brute-force oracle enumerates.
pub const BRUTE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub name: String,
    pub value: Q,
    /// Number of cases enumerated.
    pub size: usize,
    pub method: &'static str,
}

/// Best mechanism of `kind` over the full product of the closure grid.
///
/// Unlike the search, nothing is decomposed: every slot (item prices per
/// buyer, item and atom; permits; bundles) varies jointly.
pub fn brute_posted_price_opt(instance: &Instance, kind: Kind) -> Result<OracleResult> {
    let grid = Grid::closure(instance);
    let (n, m, nc) = (instance.n(), instance.m(), instance.atoms().len());
    let mut slots: Vec<Vec<Option<Q>>> = Vec::new();
    let mut base = MechanismSpec::blank(instance, kind);
    if kind.item_only() {
        for i in 0..n {
            for j in 0..m {
                for c in 0..nc {
                    slots.push(grid.items[i][j][c].clone());
                }
            }
        }
    } else {
        base = base.items_at_cost(instance);
        if kind.sells_permits() {
            slots.extend(grid.permits.iter().flatten().cloned());
        } else {
            slots.extend(grid.bundles.iter().cloned());
        }
    }
    let sizes: Vec<usize> = slots.iter().map(Vec::len).collect();
    let total = product_size(&sizes).unwrap_or(usize::MAX);
    if total > BRUTE_LIMIT {
        return Err(Error::TooLarge {
            what: "brute-force price grid",
            required: total,
            limit: BRUTE_LIMIT,
        });
    }
    let mut best = Q::zero();
    for_each_combination(&sizes, |digits| {
        let mut spec = base.clone();
        for (s, &d) in digits.iter().enumerate() {
            let v = slots[s][d].clone();
            if kind.item_only() {
                let (i, rest) = (s / (m * nc), s % (m * nc));
                spec.item_prices[i][rest / nc][rest % nc] = v;
            } else if kind.sells_permits() {
                spec.permit_prices[s / m][s % m] = v;
            } else {
                spec.bundle_prices[s] = v;
            }
        }
        match evaluate(instance, &spec) {
            Ok(r) if r.profit > best => best = r.profit,
            Ok(_) => {}
            Err(Error::Precondition(_)) if kind == Kind::Rspp => {}
            Err(e) => return Err(e),
        }
        Ok(())
    })?;
    Ok(OracleResult {
        name: alloc::format!("{}-opt", kind.name()),
        value: best,
        size: total,
        method: "full product grid",
    })
}

/// Equal-revenue items (support `2⁰..2ᴷ`) and costs that reveal which single item is free.
pub fn example_1_1(m: usize, k: u32) -> Result<Instance> {
    if m < 2 || k < 1 {
        return Err(Error::Precondition(
            "the example needs m ≥ 2 and K ≥ 1".into(),
        ));
    }
    let support: Vec<Q> = (0..=k).map(|e| int(1i64 << e)).collect();
    let mut probs: Vec<Q> = (0..k).map(|e| frac(1, 1i64 << (e + 1))).collect();
    probs.push(frac(1, 1i64 << k));
    let d = DiscreteDist::new(support, probs)?;
    let prohibitive = int((1i64 << k) * m as i64 + 1);
    let atoms = (0..m)
        .map(|j| CostAtom {
            costs: (0..m)
                .map(|l| {
                    if l == j {
                        Q::zero()
                    } else {
                        prohibitive.clone()
                    }
                })
                .collect(),
            prob: frac(1, m as i64),
        })
        .collect();
    Instance::new(
        vec![vec![d; m]],
        CostModel::new(atoms)?,
        vec![Family::additive(m)],
    )
}

fn require_additive_single(instance: &Instance) -> Result<()> {
    if instance.n() != 1 || !instance.family(0).is_additive() {
        return Err(Error::Precondition("needs one additive buyer".into()));
    }
    Ok(())
}

/// `E_c[Σ_j max_p (p - c_j)·Pr[t_j ≥ p]]` over support prices: the item-pricing optimum
/// for one additive buyer when prices may depend on the costs.
pub fn ip_opt_additive(instance: &Instance) -> Result<OracleResult> {
    require_additive_single(instance)?;
    let mut total = Q::zero();
    for atom in instance.atoms() {
        for (j, cost) in atom.costs.iter().enumerate() {
            let d = instance.dist(0, j);
            let best = d
                .support()
                .iter()
                .map(|p| (p - cost) * d.prob_at_least(p))
                .fold(Q::zero(), |a, b| if b > a { b } else { a });
            total += best * &atom.prob;
        }
    }
    Ok(OracleResult {
        name: "IP-opt".into(),
        value: total,
        size: instance.m(),
        method: "per-item monopoly",
    })
}

/// `max_δ δ·Pr[Σ_j v̄_j(t_j) ≥ δ]` by convolving the per-item `v̄` distributions;
/// for an additive buyer this is the bundling optimum with items sold at cost.
pub fn pb_opt_additive(instance: &Instance) -> Result<OracleResult> {
    require_additive_single(instance)?;
    let mut dist: BTreeMap<Q, Q> = BTreeMap::from([(Q::zero(), Q::one())]);
    for j in 0..instance.m() {
        let d = instance.dist(0, j);
        let mut next = BTreeMap::new();
        for (v, p) in &dist {
            for (s, r) in d.support().iter().zip(d.probs()) {
                let gain = instance.atoms().iter().fold(Q::zero(), |acc, atom| {
                    let x = s - &atom.costs[j];
                    if x > Q::zero() {
                        acc + x * &atom.prob
                    } else {
                        acc
                    }
                });
                *next.entry(v + gain).or_insert_with(Q::zero) += p * r;
            }
        }
        dist = next;
    }
    let size = dist.len();
    let mut best = Q::zero();
    let mut tail = Q::zero();
    for (v, p) in dist.iter().rev() {
        tail += p;
        let rev = v * &tail;
        if rev > best {
            best = rev;
        }
    }
    Ok(OracleResult {
        name: "PB-opt".into(),
        value: best,
        size,
        method: "convolution of v̄ over items",
    })
}

/// Ironed virtual values via the concave hull evaluated pointwise by chords.
fn ironed_by_chords(d: &DiscreteDist) -> Vec<Q> {
    let k = d.len();
    // Points (quantile, revenue), quantile q_x = Pr[t ≥ s_x], plus the origin.
    let mut pts: Vec<(Q, Q)> = (0..k)
        .map(|x| (d.tail_from(x), &d.support()[x] * d.tail_from(x)))
        .collect();
    pts.push((Q::zero(), Q::zero()));
    let hull = |q: &Q| -> Q {
        let mut best: Option<Q> = None;
        for a in &pts {
            for b in &pts {
                if a.0 <= *q && *q <= b.0 {
                    let h = if a.0 == b.0 {
                        if a.1 > b.1 {
                            a.1.clone()
                        } else {
                            b.1.clone()
                        }
                    } else {
                        &a.1 + (&b.1 - &a.1) * (q - &a.0) / (&b.0 - &a.0)
                    };
                    if best.as_ref().is_none_or(|x| h > *x) {
                        best = Some(h);
                    }
                }
            }
        }
        best.expect("the quantile lies within [0, 1]")
    };
    (0..k)
        .map(|x| (hull(&pts[x].0) - hull(&d.tail_from(x + 1))) / &d.probs()[x])
        .collect()
}

fn literal_vbar_single(instance: &Instance, beta: &[Vec<Vec<Q>>], i: usize, j: usize, t: &Q) -> Q {
    let mut total = Q::zero();
    for (c, atom) in instance.atoms().iter().enumerate() {
        let price = if beta[i][j][c] > atom.costs[j] {
            &beta[i][j][c]
        } else {
            &atom.costs[j]
        };
        if t > price {
            total += (t - price) * &atom.prob;
        }
    }
    total
}

fn literal_vbar(instance: &Instance, beta: &[Vec<Vec<Q>>], i: usize, t: &[Q], allowed: u32) -> Q {
    let mut total = Q::zero();
    for (c, atom) in instance.atoms().iter().enumerate() {
        let mut best = Q::zero();
        for s in instance.family(i).members() {
            if s & !allowed != 0 {
                continue;
            }
            let mut w = Q::zero();
            for j in 0..instance.m() {
                if s & (1 << j) != 0 {
                    let price = if beta[i][j][c] > atom.costs[j] {
                        &beta[i][j][c]
                    } else {
                        &atom.costs[j]
                    };
                    w += &t[j] - price;
                }
            }
            if w > best {
                best = w;
            }
        }
        total += best * &atom.prob;
    }
    total
}

/// Most-Surplus, Prophet and Less-Surplus by literal summation of their definitions.
pub fn direct_benchmark_recompute(
    instance: &Instance,
    mechanism: &DirectMechanism,
) -> Result<[OracleResult; 3]> {
    let (n, m, nc) = (instance.n(), instance.m(), instance.atoms().len());
    // q, then β as the highest support value still reached with probability q.
    let mut q = vec![vec![vec![Q::zero(); nc]; m]; n];
    let mut beta = vec![vec![vec![Q::zero(); nc]; m]; n];
    for i in 0..n {
        let ts = instance.types(i);
        for j in 0..m {
            let d = instance.dist(i, j);
            for (c, atom) in instance.atoms().iter().enumerate() {
                let mut mass = Q::zero();
                for t in 0..ts.len() {
                    mass += &mechanism.interim[i][t][c][j] * &ts.probs[t];
                }
                q[i][j][c] = mass * half();
                if n > 1 && d.prob_at_least(&atom.costs[j]) > q[i][j][c] {
                    for (x, s) in d.support().iter().enumerate() {
                        if d.tail_from(x) >= q[i][j][c] {
                            beta[i][j][c] = s.clone();
                        }
                    }
                }
            }
        }
    }
    let ironed: Vec<Vec<Vec<Q>>> = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| ironed_by_chords(instance.dist(i, j)))
                .collect()
        })
        .collect();
    let mut most = Q::zero();
    let mut less = Q::zero();
    let mut cases = 0;
    for i in 0..n {
        let ts = instance.types(i);
        for t in 0..ts.len() {
            let tv = &ts.values[t];
            let singles: Vec<Q> = (0..m)
                .map(|j| literal_vbar_single(instance, &beta, i, j, &tv[j]))
                .collect();
            // Favorite item: largest v̄_ij, smallest index on ties.
            let mut fav = 0;
            for j in 1..m {
                if singles[j] > singles[fav] {
                    fav = j;
                }
            }
            let phi = &ironed[i][fav][ts.digits[t][fav]];
            for (c, atom) in instance.atoms().iter().enumerate() {
                most += &mechanism.interim[i][t][c][fav]
                    * (phi - &atom.costs[fav])
                    * &ts.probs[t]
                    * &atom.prob;
                cases += 1;
            }
            let rest = ((1u32 << m) - 1) & !(1 << fav);
            less += literal_vbar(instance, &beta, i, tv, rest) * &ts.probs[t];
        }
    }
    let mut prophet = Q::zero();
    for i in 0..n {
        for j in 0..m {
            for (c, atom) in instance.atoms().iter().enumerate() {
                if beta[i][j][c] > atom.costs[j] {
                    prophet +=
                        int(2) * &q[i][j][c] * (&beta[i][j][c] - &atom.costs[j]) * &atom.prob;
                }
            }
        }
    }
    let method = "literal summation";
    Ok([
        OracleResult {
            name: "Most-Surplus".into(),
            value: most,
            size: cases,
            method,
        },
        OracleResult {
            name: "Prophet".into(),
            value: prophet,
            size: n * m * nc,
            method,
        },
        OracleResult {
            name: "Less-Surplus".into(),
            value: less,
            size: cases,
            method,
        },
    ])
}

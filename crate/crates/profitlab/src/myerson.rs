//! Virtual values, ironing, and optimal revenue in the "copies" settings.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{bit, DiscreteDist, Instance, Mask};
use crate::rational::{pos, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualValues {
    /// `φ(t) = t - (t⁺ - t)·Pr[t' > t] / f(t)`, with `φ = t` at the top.
    pub raw: Vec<Q>,
    /// Slopes of the upper concave hull of the revenue curve.
    pub ironed: Vec<Q>,
}

/// Breakpoints `(Pr[t ≥ v], v·Pr[t ≥ v])` from the top value down, preceded by `(0, 0)`.
pub fn revenue_curve(d: &DiscreteDist) -> Vec<(Q, Q)> {
    let mut pts = vec![(Q::zero(), Q::zero())];
    let mut tail = Q::zero();
    for (v, p) in d.support().iter().zip(d.probs()).rev() {
        tail += p;
        pts.push((tail.clone(), v * &tail));
    }
    pts
}

fn upper_hull(pts: &[(Q, Q)]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::new();
    for k in 0..pts.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // Drop b when it lies on or below the chord a→k.
            let lhs = (&pts[b].1 - &pts[a].1) * (&pts[k].0 - &pts[a].0);
            let rhs = (&pts[k].1 - &pts[a].1) * (&pts[b].0 - &pts[a].0);
            if lhs <= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    hull
}

pub fn virtual_values(d: &DiscreteDist) -> VirtualValues {
    let s = d.support();
    let f = d.probs();
    let k = s.len();
    let mut raw = Vec::with_capacity(k);
    for x in 0..k {
        if x + 1 == k {
            raw.push(s[x].clone());
        } else {
            let above = d.tail_from(x + 1);
            raw.push(&s[x] - (&s[x + 1] - &s[x]) * above / &f[x]);
        }
    }

    let pts = revenue_curve(d);
    let hull = upper_hull(&pts);
    // Hull height at every breakpoint, by interpolation between hull vertices.
    let mut height = vec![Q::zero(); pts.len()];
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slope = (&pts[b].1 - &pts[a].1) / (&pts[b].0 - &pts[a].0);
        for p in a..=b {
            height[p] = &pts[a].1 + &slope * (&pts[p].0 - &pts[a].0);
        }
    }
    // Support index x sits between breakpoints k-1-x (its upper quantile) and k-x.
    let ironed = (0..k)
        .map(|x| {
            let (lo, hi) = (k - 1 - x, k - x);
            (&height[hi] - &height[lo]) / (&pts[hi].0 - &pts[lo].0)
        })
        .collect();
    VirtualValues { raw, ironed }
}

pub fn ironed_virtual_values(d: &DiscreteDist) -> Vec<Q> {
    virtual_values(d).ironed
}

/// Best posted price at or above `reserve` for margin `p - reserve`.
///
/// Returns `(price, expected margin)`; `None` when no support value beats the reserve.
/// Ties go to the largest price, which sells only where the virtual surplus is positive.
pub fn monopoly_price(d: &DiscreteDist, reserve: &Q) -> Option<(Q, Q)> {
    let mut best: Option<(Q, Q)> = None;
    for (x, v) in d.support().iter().enumerate() {
        if v <= reserve {
            continue;
        }
        let gain = (v - reserve) * d.tail_from(x);
        if best.as_ref().is_none_or(|(_, g)| gain >= *g) {
            best = Some((v.clone(), gain));
        }
    }
    best
}

/// `E[(φ̃(t) - r)⁺]`.
pub fn expected_positive_surplus(d: &DiscreteDist, reserve: &Q) -> Q {
    let iv = ironed_virtual_values(d);
    iv.iter()
        .zip(d.probs())
        .fold(Q::zero(), |acc, (phi, p)| acc + pos(phi - reserve) * p)
}

fn require_single_buyer(instance: &Instance) -> Result<()> {
    if instance.n() != 1 {
        return Err(Error::Precondition(
            "single-buyer copies bound needs n = 1".into(),
        ));
    }
    Ok(())
}

fn require_atom(instance: &Instance, c: usize) -> Result<()> {
    if c >= instance.atoms().len() {
        return Err(Error::Precondition("cost atom out of range".into()));
    }
    Ok(())
}

/// Ironed virtual surplus `(φ̃_ij - c_j)⁺` for every buyer, item and support position.
fn virtual_surplus(instance: &Instance, c: usize) -> Vec<Vec<Vec<Q>>> {
    let costs = &instance.atoms()[c].costs;
    (0..instance.n())
        .map(|i| {
            (0..instance.m())
                .map(|j| {
                    ironed_virtual_values(instance.dist(i, j))
                        .into_iter()
                        .map(|phi| pos(phi - &costs[j]))
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Expectation over the buyer's type of `objective(weights)`, where
/// `weights[j] = (φ̃_j(t_j) - c_j)⁺`.
fn expect_over_types(instance: &Instance, c: usize, objective: impl Fn(&[Q]) -> Q) -> Q {
    let vs = virtual_surplus(instance, c);
    let ts = instance.types(0);
    let mut total = Q::zero();
    for (t, p) in ts.probs.iter().enumerate() {
        let w: Vec<Q> = ts.digits[t]
            .iter()
            .enumerate()
            .map(|(j, &k)| vs[0][j][k].clone())
            .collect();
        total += objective(&w) * p;
    }
    total
}

/// Optimal revenue from a unit-demand buyer whose values for the copies are `t_j - c_j`.
pub fn copies_opt_ud(instance: &Instance, c: usize) -> Result<Q> {
    require_single_buyer(instance)?;
    require_atom(instance, c)?;
    let fam = instance.family(0);
    Ok(expect_over_types(instance, c, |w| {
        (0..w.len())
            .filter(|&j| fam.contains(bit(j)))
            .map(|j| w[j].clone())
            .max()
            .unwrap_or_else(Q::zero)
    }))
}

/// Optimal revenue when the buyer's copies are constrained only by its own family.
pub fn copies_opt_additive(instance: &Instance, c: usize) -> Result<Q> {
    require_single_buyer(instance)?;
    require_atom(instance, c)?;
    let fam = instance.family(0);
    let all = crate::model::full_mask(instance.m());
    Ok(expect_over_types(instance, c, |w| fam.max_weight(w, all)))
}

/// Many unit-demand buyers: best matching of (buyer, item) copies, at most one per buyer and item.
pub fn copies_opt_ud_multi(instance: &Instance, c: usize) -> Result<Q> {
    require_atom(instance, c)?;
    let (n, m) = (instance.n(), instance.m());
    if n * m > 12 {
        return Err(Error::TooLarge {
            what: "buyer-item pairs",
            required: n * m,
            limit: 12,
        });
    }
    let vs = virtual_surplus(instance, c);
    let allowed: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| instance.family(i).contains(bit(j)))
                .collect()
        })
        .collect();
    // Enumerate every (i, j) support position independently; weights only depend on those.
    let radix: Vec<usize> = (0..n * m)
        .map(|e| instance.dist(e / m, e % m).len())
        .collect();
    let mut digits = vec![0usize; n * m];
    let mut total = Q::zero();
    loop {
        let mut prob = Q::one();
        let mut w = vec![vec![Q::zero(); m]; n];
        for e in 0..n * m {
            let (i, j) = (e / m, e % m);
            prob *= &instance.dist(i, j).probs()[digits[e]];
            if allowed[i][j] {
                w[i][j] = vs[i][j][digits[e]].clone();
            }
        }
        total += best_matching(&w, 0, 0) * prob;
        let mut pos = n * m;
        loop {
            if pos == 0 {
                return Ok(total);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < radix[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
}

fn best_matching(w: &[Vec<Q>], i: usize, used: Mask) -> Q {
    if i == w.len() {
        return Q::zero();
    }
    let mut best = best_matching(w, i + 1, used);
    for (j, wij) in w[i].iter().enumerate() {
        if used & bit(j) == 0 && !wij.is_zero() {
            let cand = wij + best_matching(w, i + 1, used | bit(j));
            if cand > best {
                best = cand;
            }
        }
    }
    best
}

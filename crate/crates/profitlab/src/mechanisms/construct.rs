//! Price rules taken from the approximation arguments.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use super::eval::evaluate;
use super::{Kind, MechanismSpec};
use crate::benchmark::{benchmark_thresholds, tail_prices, ExAnte};
use crate::error::{Error, Result};
use crate::model::Instance;
use crate::myerson::monopoly_price;
use crate::ocrs::{
    auction_ocrs, buyer_families, certified_subfamily, check_scaled_membership, item_partition,
    SetSystem,
};
use crate::rational::{half, Q};
use crate::valuation::{vbar_single, Thresholds};

/// Largest price grid searched per cost atom.
pub const GRID_LIMIT: usize = 100_000;

/// Item-pricing spec restricted to atom `c`, for the matching `instance.at_atom(c)`.
pub fn atom_spec(spec: &MechanismSpec, c: usize) -> MechanismSpec {
    let pick = |row: &Vec<Vec<Option<Q>>>| row.iter().map(|v| vec![v[c].clone()]).collect();
    MechanismSpec {
        item_prices: spec.item_prices.iter().map(pick).collect(),
        rationing: spec
            .rationing
            .iter()
            .map(|row| row.iter().map(|v| vec![v[c].clone()]).collect())
            .collect(),
        sub_constraint: spec.sub_constraint.as_ref().map(|s| vec![s[c].clone()]),
        hide_probs: spec.hide_probs.as_ref().map(|h| {
            h.iter()
                .map(|row| row.iter().map(|v| vec![v[c].clone()]).collect())
                .collect()
        }),
        ..spec.clone()
    }
}

/// Profit conditional on each cost atom. Only item pricing decomposes this way.
pub fn profit_by_atom(instance: &Instance, spec: &MechanismSpec) -> Result<Vec<Q>> {
    if !spec.kind.item_only() {
        return Err(Error::Precondition(
            "only item pricing decomposes over cost atoms".into(),
        ));
    }
    (0..instance.atoms().len())
        .map(|c| Ok(evaluate(&instance.at_atom(c), &atom_spec(spec, c))?.profit))
        .collect()
}

/// The joint feasibility constraint as an explicit set system.
pub fn pair_system(instance: &Instance) -> Result<SetSystem> {
    Ok(item_partition(instance)?.intersect(&buyer_families(instance)?))
}

/// Every combination of one candidate per slot, as index vectors.
pub(crate) fn product_size(sizes: &[usize]) -> Option<usize> {
    sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s))
}

pub(crate) fn for_each_combination(
    sizes: &[usize],
    mut f: impl FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    let mut digits = vec![0usize; sizes.len()];
    if sizes.contains(&0) {
        return Ok(());
    }
    loop {
        f(&digits)?;
        let mut pos = sizes.len();
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < sizes[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Item prices from the copies argument.
///
/// A single additive buyer gets the per-item monopoly price of `t_j` above
/// `c_j`. Otherwise each cost atom gets the best price vector over support
/// values above cost (or "not offered"); with several buyers the
/// sub-constraint is either the full constraint or "at most one sale".
pub fn construct_csip_from_copies(instance: &Instance) -> Result<MechanismSpec> {
    let (n, m) = (instance.n(), instance.m());
    let kind = if n == 1 { Kind::Ip } else { Kind::Csip };
    let mut spec = MechanismSpec::blank(instance, kind).with_label(if n == 1 {
        "IP (copies)"
    } else {
        "CSIP (copies)"
    });
    if n == 1 && instance.family(0).is_additive() {
        for j in 0..m {
            for (c, atom) in instance.atoms().iter().enumerate() {
                spec.item_prices[0][j][c] =
                    monopoly_price(instance.dist(0, j), &atom.costs[j]).map(|(p, _)| p);
            }
        }
        return Ok(spec);
    }
    let subs: Vec<Option<SetSystem>> = if n == 1 {
        vec![None]
    } else {
        let full = pair_system(instance)?;
        vec![Some(full.clone()), Some(full.truncate(1))]
    };
    let mut chosen_subs = Vec::new();
    for (c, atom) in instance.atoms().iter().enumerate() {
        let single = instance.at_atom(c);
        let candidates: Vec<Vec<Option<Q>>> = (0..n * m)
            .map(|e| {
                let (i, j) = (e / m, e % m);
                let mut v: Vec<Option<Q>> = vec![None];
                v.extend(
                    instance
                        .dist(i, j)
                        .support()
                        .iter()
                        .filter(|s| **s > atom.costs[j])
                        .cloned()
                        .map(Some),
                );
                v
            })
            .collect();
        let sizes: Vec<usize> = candidates.iter().map(Vec::len).collect();
        let total = product_size(&sizes)
            .unwrap_or(usize::MAX)
            .saturating_mul(subs.len());
        if total > GRID_LIMIT {
            return Err(Error::TooLarge {
                what: "item price grid",
                required: total,
                limit: GRID_LIMIT,
            });
        }
        let mut best: Option<(Q, Vec<usize>, usize)> = None;
        for (si, sub) in subs.iter().enumerate() {
            let mut trial = MechanismSpec::blank(&single, kind);
            trial.sub_constraint = sub.clone().map(|s| vec![s]);
            for_each_combination(&sizes, |digits| {
                for (e, &d) in digits.iter().enumerate() {
                    trial.item_prices[e / m][e % m][0] = candidates[e][d].clone();
                }
                let profit = evaluate(&single, &trial)?.profit;
                if best.as_ref().is_none_or(|(b, _, _)| profit > *b) {
                    best = Some((profit, digits.to_vec(), si));
                }
                Ok(())
            })?;
        }
        let (_, digits, si) = best.expect("the grid is never empty");
        for (e, &d) in digits.iter().enumerate() {
            spec.item_prices[e / m][e % m][c] = candidates[e][d].clone();
        }
        chosen_subs.push(subs[si].clone());
    }
    if n > 1 {
        spec.sub_constraint = Some(
            chosen_subs
                .into_iter()
                .map(|s| s.expect("multi-buyer subs are explicit"))
                .collect(),
        );
    }
    Ok(spec)
}

/// Prophet mechanism with its certified contention-resolution data.
#[derive(Debug, Clone)]
pub struct ProphetCsip {
    pub spec: MechanismSpec,
    /// Per atom: activity `y[i·m + j]` of each pair.
    pub activity: Vec<Vec<Q>>,
    /// Per atom: exactly certified selectability of the chosen subfamily.
    pub selectability: Vec<Q>,
}

/// Prices `max(β, c)` with the ex-ante rationing, restricted per atom to the
/// greedy contention-resolution subfamily for the activity vector.
pub fn prophet_csip(instance: &Instance, ex: &ExAnte) -> Result<ProphetCsip> {
    let (n, m) = (instance.n(), instance.m());
    let ocrs = auction_ocrs(instance, half())?;
    let parts = [item_partition(instance)?, buyer_families(instance)?];
    let mut spec = MechanismSpec::blank(instance, Kind::Csip).with_label("CSIP (prophet)");
    let mut subs = Vec::new();
    let mut activity = Vec::new();
    let mut selectability = Vec::new();
    for (c, atom) in instance.atoms().iter().enumerate() {
        let mut y = vec![Q::zero(); n * m];
        for i in 0..n {
            for j in 0..m {
                // Pairs priced below cost are never served.
                if *ex.beta.get(i, j, c) < atom.costs[j] {
                    continue;
                }
                spec.item_prices[i][j][c] = Some(ex.price(instance, i, j, c));
                spec.rationing[i][j][c] = ex.rationing[i][j][c].clone();
                y[i * m + j] = ex.active_prob(instance, i, j, c);
            }
        }
        check_scaled_membership(&parts, &y, &half())?;
        let (sub, cert) = certified_subfamily(&ocrs, &y);
        subs.push(sub);
        activity.push(y);
        selectability.push(cert);
    }
    if n == 1 {
        // A single buyer faces no competition; the constraint is its own family.
        spec.kind = Kind::Ip;
    }
    spec.sub_constraint = Some(subs);
    Ok(ProphetCsip {
        spec,
        activity,
        selectability,
    })
}

/// Item prices `max(β, c)` with rationing, shared by the permit constructions.
fn threshold_items(instance: &Instance, ex: &ExAnte, spec: &mut MechanismSpec) {
    let beta = benchmark_thresholds(instance, ex);
    for i in 0..instance.n() {
        for j in 0..instance.m() {
            for (c, atom) in instance.atoms().iter().enumerate() {
                let b = beta.get(i, j, c);
                let p = if *b > atom.costs[j] {
                    b.clone()
                } else {
                    atom.costs[j].clone()
                };
                spec.item_prices[i][j][c] = Some(p);
                if instance.n() > 1 {
                    spec.rationing[i][j][c] = ex.rationing[i][j][c].clone();
                }
            }
        }
    }
}

/// Tail mechanism with the thresholds it was built from.
#[derive(Debug, Clone)]
pub struct RsppTail {
    pub spec: MechanismSpec,
    /// `xi[i][j] = (ξ_ij, ξ_ij·Pr[v̄_ij ≥ ξ_ij])`, `None` when no value exceeds `τᵢ`.
    pub xi: Vec<Vec<Option<(Q, Q)>>>,
    /// `Pr[v̄_ij ≥ ξ_ij]`.
    pub reach: Vec<Vec<Q>>,
}

fn vbar_reach(instance: &Instance, beta: &Thresholds, i: usize, j: usize, x: &Q) -> Q {
    let d = instance.dist(i, j);
    d.support()
        .iter()
        .zip(d.probs())
        .filter(|(v, _)| vbar_single(instance, i, j, v, Some(beta)) >= *x)
        .fold(Q::zero(), |acc, (_, p)| acc + p)
}

/// Single-permit sales at `½ξ_ij`, items at `max(β, c)`, hiding calibrated at evaluation.
pub fn construct_rspp_tail(instance: &Instance, ex: &ExAnte, tau: &[Q]) -> Result<RsppTail> {
    let (n, m) = (instance.n(), instance.m());
    let beta = benchmark_thresholds(instance, ex);
    let mut spec = MechanismSpec::blank(instance, Kind::Rspp).with_label("RSPP (tail)");
    threshold_items(instance, ex, &mut spec);
    let mut xi = Vec::with_capacity(n);
    let mut reach = vec![vec![Q::zero(); m]; n];
    for i in 0..n {
        let prices = tail_prices(instance, i, &beta, &tau[i]);
        let mut mass = Q::zero();
        for (j, entry) in prices.iter().enumerate() {
            if let Some((x, _)) = entry {
                spec.permit_prices[i][j] = Some(x * half());
                reach[i][j] = vbar_reach(instance, &beta, i, j, x);
                mass += &reach[i][j];
            }
        }
        if mass > half() {
            return Err(Error::Precondition(alloc::format!(
                "buyer {i}: tail thresholds are reached with total probability {mass} > 1/2"
            )));
        }
        xi.push(prices);
    }
    Ok(RsppTail { spec, xi, reach })
}

/// Single-permit sales at `½τᵢ` for every item; a buyer exactly at `τᵢ` buys with
/// the probability that brings the total permit mass to ½.
pub fn construct_rspp_tau(instance: &Instance, ex: &ExAnte, tau: &[Q]) -> Result<MechanismSpec> {
    let (n, m) = (instance.n(), instance.m());
    let beta = benchmark_thresholds(instance, ex);
    let mut spec = MechanismSpec::blank(instance, Kind::Rspp).with_label("RSPP (tau)");
    threshold_items(instance, ex, &mut spec);
    for i in 0..n {
        let mut above = Q::zero();
        let mut at = Q::zero();
        for j in 0..m {
            let d = instance.dist(i, j);
            for (v, p) in d.support().iter().zip(d.probs()) {
                let x = vbar_single(instance, i, j, v, Some(&beta));
                if x > tau[i] {
                    above += p;
                } else if x == tau[i] {
                    at += p;
                }
            }
        }
        let accept = if at.is_zero() {
            Q::one()
        } else {
            let r = (half() - above) / at;
            if r > Q::one() {
                Q::one()
            } else if r < Q::zero() {
                Q::zero()
            } else {
                r
            }
        };
        for j in 0..m {
            spec.permit_prices[i][j] = Some(&tau[i] * half());
            spec.zero_utility_accept[i][j] = accept.clone();
        }
    }
    Ok(spec)
}

/// Permit bundles at `δᵢ`, items at `max(β, c)`.
pub fn construct_spb_core(instance: &Instance, ex: &ExAnte, delta: &[Q]) -> Result<MechanismSpec> {
    if delta.len() != instance.n() {
        return Err(Error::Precondition(
            "one bundle price per buyer is required".into(),
        ));
    }
    let kind = if instance.n() == 1 {
        Kind::Pb
    } else {
        Kind::Spb
    };
    let mut spec = MechanismSpec::blank(instance, kind).with_label("SPB (core)");
    threshold_items(instance, ex, &mut spec);
    for (i, d) in delta.iter().enumerate() {
        spec.bundle_prices[i] = Some(d.clone());
    }
    Ok(spec)
}

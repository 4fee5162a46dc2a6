//! Grid search over one mechanism family. The result is a lower bound on the
//! family optimum, exact on the grid.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use num_traits::Zero;

use super::construct::{for_each_combination, product_size};
use super::eval::{evaluate, EvalResult};
use super::{Kind, MechanismSpec};
use crate::error::{Error, Result};
use crate::model::{full_mask, Instance};
use crate::rational::Q;
use crate::valuation::{vbar, vbar_single};

/// Largest number of candidate mechanisms evaluated by one search.
pub const SEARCH_LIMIT: usize = 200_000;

/// Type-space size up to which the winning additive item pricing is re-evaluated in full.
pub const EVAL_TYPE_LIMIT: usize = 20_000;

/// Candidate prices per slot; `None` means "not offered".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    /// `[i][j][c]`.
    pub items: Vec<Vec<Vec<Vec<Option<Q>>>>>,
    /// `[i][j]`.
    pub permits: Vec<Vec<Vec<Option<Q>>>>,
    /// `[i]`.
    pub bundles: Vec<Vec<Option<Q>>>,
}

fn with_none(values: BTreeSet<Q>) -> Vec<Option<Q>> {
    core::iter::once(None)
        .chain(values.into_iter().map(Some))
        .collect()
}

impl Grid {
    /// Item prices at support values or cost; permit and bundle prices at the
    /// values of `v̄`, where a buyer's stage-one decision can change.
    pub fn closure(instance: &Instance) -> Self {
        let (n, m) = (instance.n(), instance.m());
        let items = (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        instance
                            .atoms()
                            .iter()
                            .map(|atom| {
                                let cost = &atom.costs[j];
                                let mut s: BTreeSet<Q> = instance
                                    .dist(i, j)
                                    .support()
                                    .iter()
                                    .filter(|v| *v >= cost)
                                    .cloned()
                                    .collect();
                                s.insert(cost.clone());
                                with_none(s)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let permits = (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let mut s: BTreeSet<Q> = instance
                            .dist(i, j)
                            .support()
                            .iter()
                            .map(|v| vbar_single(instance, i, j, v, None))
                            .collect();
                        s.insert(Q::zero());
                        with_none(s)
                    })
                    .collect()
            })
            .collect();
        let bundles = (0..n)
            .map(|i| {
                let mut s: BTreeSet<Q> = instance
                    .types(i)
                    .values
                    .iter()
                    .map(|t| vbar(instance, i, t, full_mask(m), None))
                    .collect();
                s.insert(Q::zero());
                with_none(s)
            })
            .collect();
        Self {
            items,
            permits,
            bundles,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub spec: MechanismSpec,
    pub profit: Q,
    /// Full evaluation of the winner; skipped for additive single buyers with
    /// more than [`EVAL_TYPE_LIMIT`] types, whose profit is summed per item.
    pub result: Option<EvalResult>,
    pub evaluated: usize,
    /// True when the grid provably contains a family optimum.
    pub exhaustive: bool,
}

fn guard(sizes: &[usize]) -> Result<()> {
    if sizes.contains(&0) {
        return Err(Error::Precondition("empty candidate grid".into()));
    }
    let total = product_size(sizes).unwrap_or(usize::MAX);
    if total > SEARCH_LIMIT {
        return Err(Error::TooLarge {
            what: "search grid",
            required: total,
            limit: SEARCH_LIMIT,
        });
    }
    Ok(())
}

/// Best mechanism of `kind` over `grid` (the closure grid when `None`).
pub fn search_best(instance: &Instance, kind: Kind, grid: Option<&Grid>) -> Result<SearchResult> {
    let owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            owned = Grid::closure(instance);
            &owned
        }
    };
    let (n, m) = (instance.n(), instance.m());
    if kind.single_buyer() && n != 1 {
        return Err(Error::Precondition(
            "IP, PP and PB are single-buyer mechanisms".into(),
        ));
    }
    match kind {
        Kind::Ip | Kind::Csip => search_items(instance, kind, grid),
        Kind::Pp | Kind::Rspp => {
            let slots: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
            let cands: Vec<&Vec<Option<Q>>> =
                slots.iter().map(|&(i, j)| &grid.permits[i][j]).collect();
            search_stage_one(instance, kind, &cands, |spec, digits| {
                for (s, &d) in digits.iter().enumerate() {
                    let (i, j) = slots[s];
                    spec.permit_prices[i][j] = cands[s][d].clone();
                }
            })
        }
        Kind::Pb | Kind::Spb => {
            let cands: Vec<&Vec<Option<Q>>> = grid.bundles.iter().collect();
            search_stage_one(instance, kind, &cands, |spec, digits| {
                for (i, &d) in digits.iter().enumerate() {
                    spec.bundle_prices[i] = cands[i][d].clone();
                }
            })
        }
    }
}

fn search_stage_one(
    instance: &Instance,
    kind: Kind,
    cands: &[&Vec<Option<Q>>],
    apply: impl Fn(&mut MechanismSpec, &[usize]),
) -> Result<SearchResult> {
    let sizes: Vec<usize> = cands.iter().map(|c| c.len()).collect();
    guard(&sizes)?;
    let mut trial = MechanismSpec::blank(instance, kind)
        .items_at_cost(instance)
        .with_label(alloc::format!("{} (search)", kind.name()));
    let mut best: Option<(MechanismSpec, EvalResult)> = None;
    let mut evaluated = 0;
    for_each_combination(&sizes, |digits| {
        apply(&mut trial, digits);
        let result = match evaluate(instance, &trial) {
            Ok(r) => r,
            // Hiding cannot be calibrated for this candidate; it is not an admissible mechanism.
            Err(Error::Precondition(_)) if kind == Kind::Rspp => return Ok(()),
            Err(e) => return Err(e),
        };
        evaluated += 1;
        if best.as_ref().is_none_or(|(_, b)| result.profit > b.profit) {
            best = Some((trial.clone(), result));
        }
        Ok(())
    })?;
    let (spec, result) =
        best.ok_or_else(|| Error::Precondition("no admissible candidate".into()))?;
    Ok(SearchResult {
        spec,
        profit: result.profit.clone(),
        result: Some(result),
        evaluated,
        exhaustive: false,
    })
}

fn search_items(instance: &Instance, kind: Kind, grid: &Grid) -> Result<SearchResult> {
    let (n, m) = (instance.n(), instance.m());
    let mut spec =
        MechanismSpec::blank(instance, kind).with_label(alloc::format!("{} (search)", kind.name()));
    let mut evaluated = 0;
    let additive = n == 1 && instance.family(0).is_additive();
    let mut additive_profit = Q::zero();
    for (c, atom) in instance.atoms().iter().enumerate() {
        if additive {
            // Items never interact, so each price is optimized on its own.
            for j in 0..m {
                let cands = &grid.items[0][j][c];
                guard(&[cands.len()])?;
                let d = instance.dist(0, j);
                let mut best: Option<(Q, Option<Q>)> = None;
                for p in cands {
                    let gain = match p {
                        Some(p) => (p - &atom.costs[j]) * d.prob_at_least(p),
                        None => Q::zero(),
                    };
                    evaluated += 1;
                    if best.as_ref().is_none_or(|(b, _)| gain > *b) {
                        best = Some((gain, p.clone()));
                    }
                }
                let (gain, p) = best.expect("guarded grid is non-empty");
                additive_profit += gain * &atom.prob;
                spec.item_prices[0][j][c] = p;
            }
            continue;
        }
        let single = instance.at_atom(c);
        let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
        let sizes: Vec<usize> = slots
            .iter()
            .map(|&(i, j)| grid.items[i][j][c].len())
            .collect();
        guard(&sizes)?;
        let mut trial = MechanismSpec::blank(&single, kind);
        let mut best: Option<(Q, Vec<usize>)> = None;
        for_each_combination(&sizes, |digits| {
            for (s, &d) in digits.iter().enumerate() {
                let (i, j) = slots[s];
                trial.item_prices[i][j][0] = grid.items[i][j][c][d].clone();
            }
            let profit = evaluate(&single, &trial)?.profit;
            evaluated += 1;
            if best.as_ref().is_none_or(|(b, _)| profit > *b) {
                best = Some((profit, digits.to_vec()));
            }
            Ok(())
        })?;
        let (_, digits) = best.expect("guarded grid is non-empty");
        for (s, &d) in digits.iter().enumerate() {
            let (i, j) = slots[s];
            spec.item_prices[i][j][c] = grid.items[i][j][c][d].clone();
        }
    }
    if additive && instance.type_count(0) > EVAL_TYPE_LIMIT {
        return Ok(SearchResult {
            spec,
            profit: additive_profit,
            result: None,
            evaluated,
            exhaustive: true,
        });
    }
    let result = evaluate(instance, &spec)?;
    if additive && result.profit != additive_profit {
        return Err(Error::Mismatch(alloc::format!(
            "per-item profit {additive_profit} differs from full evaluation {}",
            result.profit
        )));
    }
    Ok(SearchResult {
        spec,
        profit: result.profit.clone(),
        result: Some(result),
        evaluated,
        exhaustive: additive,
    })
}

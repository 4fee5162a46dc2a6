//! From a truthful permit-selling auction for a buyer valuing permit sets by
//! `v̄` to a two-stage mechanism with the same profit: permits are sold first,
//! then every item is offered at its realized cost.

use alloc::vec::Vec;

use num_traits::Zero;

use super::{Kind, MechanismSpec};
use crate::error::{Error, Result};
use crate::model::{full_mask, items, submasks, Instance, Mask};
use crate::rational::Q;
use crate::valuation::vbar;

/// Auxiliary single-buyer mechanisms over permits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Auxiliary {
    /// Permit `j` at `prices[j]`; `None` means not offered.
    SeparatePrices(Vec<Option<Q>>),
    /// All permits together at one price.
    GrandBundle(Q),
}

fn allocation(instance: &Instance, aux: &Auxiliary, t: &[Q]) -> (Mask, Q) {
    let m = instance.m();
    match aux {
        Auxiliary::SeparatePrices(prices) => {
            let offered = (0..m)
                .filter(|&j| prices[j].is_some())
                .fold(0, |acc, j| acc | (1 << j));
            let mut best = (Q::zero(), 0 as Mask, Q::zero());
            for p in submasks(offered).skip(1) {
                let pay = items(p).fold(Q::zero(), |acc, j| {
                    acc + prices[j].as_ref().expect("offered")
                });
                let u = vbar(instance, 0, t, p, None) - &pay;
                if u > best.0 || (u == best.0 && p.count_ones() > best.1.count_ones()) {
                    best = (u, p, pay);
                }
            }
            (best.1, best.2)
        }
        Auxiliary::GrandBundle(delta) => {
            let all = full_mask(m);
            if vbar(instance, 0, t, all, None) >= *delta {
                (all, delta.clone())
            } else {
                (0, Q::zero())
            }
        }
    }
}

/// Expected revenue of the auxiliary mechanism, computed from `v̄` directly.
///
/// Fails when some type prefers another type's outcome or has negative utility.
pub fn auxiliary_revenue(instance: &Instance, aux: &Auxiliary) -> Result<Q> {
    if instance.n() != 1 {
        return Err(Error::Precondition(
            "permit conversion needs a single buyer".into(),
        ));
    }
    let ts = instance.types(0);
    let outcomes: Vec<(Mask, Q)> = ts
        .values
        .iter()
        .map(|t| allocation(instance, aux, t))
        .collect();
    for (truth, t) in ts.values.iter().enumerate() {
        let own = vbar(instance, 0, t, outcomes[truth].0, None) - &outcomes[truth].1;
        if own < Q::zero() {
            return Err(Error::NotTruthful {
                truth,
                report: truth,
            });
        }
        for (report, (p, pay)) in outcomes.iter().enumerate() {
            if vbar(instance, 0, t, *p, None) - pay > own {
                return Err(Error::NotTruthful { truth, report });
            }
        }
    }
    Ok(outcomes
        .iter()
        .zip(&ts.probs)
        .fold(Q::zero(), |acc, ((_, pay), f)| acc + pay * f))
}

/// The two-stage mechanism: separate prices become PP, a grand bundle becomes PB.
pub fn convert_revenue_to_permit(instance: &Instance, aux: &Auxiliary) -> Result<MechanismSpec> {
    auxiliary_revenue(instance, aux)?;
    let spec = match aux {
        Auxiliary::SeparatePrices(prices) => {
            if prices.len() != instance.m() {
                return Err(Error::Precondition(
                    "one permit price per item is required".into(),
                ));
            }
            let mut spec = MechanismSpec::blank(instance, Kind::Pp)
                .items_at_cost(instance)
                .with_label("PP (converted)");
            spec.permit_prices[0] = prices.clone();
            spec
        }
        Auxiliary::GrandBundle(delta) => {
            let mut spec = MechanismSpec::blank(instance, Kind::Pb)
                .items_at_cost(instance)
                .with_label("PB (converted)");
            spec.bundle_prices[0] = Some(delta.clone());
            spec
        }
    };
    Ok(spec)
}

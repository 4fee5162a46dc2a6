//! The six simple mechanism families, their exact and sampled evaluation,
//! the price constructions, and grid search.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{Instance, PairConstraint};
use crate::ocrs::SetSystem;
use crate::rational::Q;

pub mod construct;
pub mod convert;
pub mod eval;
pub mod search;
pub mod trace;

pub use construct::{
    construct_csip_from_copies, construct_rspp_tail, construct_rspp_tau, construct_spb_core,
    prophet_csip, ProphetCsip, RsppTail,
};
pub use convert::{auxiliary_revenue, convert_revenue_to_permit, Auxiliary};
pub use eval::{evaluate, incentive_gain, Diagnostics, EvalResult};
pub use search::{search_best, Grid, SearchResult};
pub use trace::{
    enumerate_outcomes, simulate, trace_profit, Outcome, Purchase, Randomness, TraceEntry,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    /// Single buyer, item prices that may depend on the costs.
    Ip,
    /// Single buyer, separately priced permits, items at cost.
    Pp,
    /// Single buyer, one price for all permits, items at cost.
    Pb,
    /// Sequential item prices with an optional sub-constraint.
    Csip,
    /// Sequential single-permit sales with item hiding.
    Rspp,
    /// Sequential permit bundles.
    Spb,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Ip,
        Kind::Pp,
        Kind::Pb,
        Kind::Csip,
        Kind::Rspp,
        Kind::Spb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Ip => "IP",
            Kind::Pp => "PP",
            Kind::Pb => "PB",
            Kind::Csip => "CSIP",
            Kind::Rspp => "RSPP",
            Kind::Spb => "SPB",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
    }

    pub fn single_buyer(self) -> bool {
        matches!(self, Kind::Ip | Kind::Pp | Kind::Pb)
    }

    pub fn sells_permits(self) -> bool {
        matches!(self, Kind::Pp | Kind::Rspp)
    }

    pub fn sells_bundles(self) -> bool {
        matches!(self, Kind::Pb | Kind::Spb)
    }

    pub fn item_only(self) -> bool {
        matches!(self, Kind::Ip | Kind::Csip)
    }
}

/// All parameters of one mechanism. `None` prices mean "not offered".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MechanismSpec {
    pub kind: Kind,
    /// `item_prices[i][j][c]`.
    pub item_prices: Vec<Vec<Vec<Option<Q>>>>,
    /// `permit_prices[i][j]`, independent of costs.
    pub permit_prices: Vec<Vec<Option<Q>>>,
    /// `bundle_prices[i]`, independent of costs.
    pub bundle_prices: Vec<Option<Q>>,
    /// Per cost atom: allowed joint allocations over pairs `i·m + j`.
    pub sub_constraint: Option<Vec<SetSystem>>,
    /// `hide_probs[i][j][c]`: chance an available item is hidden from buyer `i` (RSPP).
    /// `None` means "calibrate so every item is visible with probability ½".
    pub hide_probs: Option<Vec<Vec<Vec<Q>>>>,
    /// `rationing[i][j][c]`: chance a buyer valuing item `j` exactly at its price may buy it.
    pub rationing: Vec<Vec<Vec<Q>>>,
    /// `zero_utility_accept[i][j]`: chance a permit with zero net utility is acceptable.
    pub zero_utility_accept: Vec<Vec<Q>>,
    pub order: Vec<usize>,
    pub label: String,
}

impl MechanismSpec {
    /// Nothing offered, ties resolved toward buying, buyers in index order.
    pub fn blank(instance: &Instance, kind: Kind) -> Self {
        let (n, m, nc) = (instance.n(), instance.m(), instance.atoms().len());
        Self {
            kind,
            item_prices: vec![vec![vec![None; nc]; m]; n],
            permit_prices: vec![vec![None; m]; n],
            bundle_prices: vec![None; n],
            sub_constraint: None,
            hide_probs: None,
            rationing: vec![vec![vec![Q::one(); nc]; m]; n],
            zero_utility_accept: vec![vec![Q::one(); m]; n],
            order: (0..n).collect(),
            label: String::from(kind.name()),
        }
    }

    /// Every item offered at the seller's cost.
    pub fn items_at_cost(mut self, instance: &Instance) -> Self {
        for i in 0..instance.n() {
            for j in 0..instance.m() {
                for (c, atom) in instance.atoms().iter().enumerate() {
                    self.item_prices[i][j][c] = Some(atom.costs[j].clone());
                }
            }
        }
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self, instance: &Instance) -> Result<()> {
        let (n, m, nc) = (instance.n(), instance.m(), instance.atoms().len());
        let bad = |msg: &str| Err(Error::Precondition(String::from(msg)));
        if self.kind.single_buyer() && n != 1 {
            return bad("IP, PP and PB are single-buyer mechanisms");
        }
        let dims_ok = self.item_prices.len() == n
            && self
                .item_prices
                .iter()
                .all(|r| r.len() == m && r.iter().all(|c| c.len() == nc))
            && self.permit_prices.len() == n
            && self.permit_prices.iter().all(|r| r.len() == m)
            && self.bundle_prices.len() == n
            && self.rationing.len() == n
            && self
                .rationing
                .iter()
                .all(|r| r.len() == m && r.iter().all(|c| c.len() == nc))
            && self.zero_utility_accept.len() == n
            && self.zero_utility_accept.iter().all(|r| r.len() == m);
        if !dims_ok {
            return bad("price tables do not match the instance dimensions");
        }
        let mut seen = vec![false; n];
        for &i in &self.order {
            if i >= n || core::mem::replace(&mut seen[i], true) {
                return bad("buyer order must be a permutation");
            }
        }
        if seen.iter().any(|s| !s) {
            return bad("buyer order must be a permutation");
        }
        let unit = |q: &Q| !q.is_negative() && *q <= Q::one();
        if !self.rationing.iter().flatten().flatten().all(unit)
            || !self.zero_utility_accept.iter().flatten().all(unit)
        {
            return bad("tie-breaking probabilities must lie in [0, 1]");
        }
        if let Some(r) = &self.hide_probs {
            if self.kind != Kind::Rspp {
                return bad("only RSPP hides items");
            }
            let shape = r.len() == n
                && r.iter()
                    .all(|row| row.len() == m && row.iter().all(|c| c.len() == nc));
            if !shape || !r.iter().flatten().flatten().all(unit) {
                return bad("hiding probabilities must be an n×m×|C| table in [0, 1]");
            }
        }
        if !self.kind.sells_permits() && self.permit_prices.iter().flatten().any(Option::is_some) {
            return bad("permit prices only apply to PP and RSPP");
        }
        if !self.kind.sells_bundles() && self.bundle_prices.iter().any(Option::is_some) {
            return bad("bundle prices only apply to PB and SPB");
        }
        if self
            .permit_prices
            .iter()
            .flatten()
            .flatten()
            .any(Signed::is_negative)
            || self.bundle_prices.iter().flatten().any(Signed::is_negative)
        {
            return bad("permit and bundle prices must be non-negative");
        }
        if let Some(sub) = &self.sub_constraint {
            if !self.kind.item_only() {
                return bad("sub-constraints only apply to item pricing");
            }
            if sub.len() != nc {
                return bad("one sub-constraint per cost atom is required");
            }
            let pc = PairConstraint::new(instance);
            for s in sub {
                if s.size() != n * m || s.members().any(|a| !pc.contains(a)) {
                    return bad("sub-constraint must be nested in the feasible allocations");
                }
            }
        }
        Ok(())
    }

    /// Total permit price of `p` for buyer `i`, or the bundle price for bundle kinds.
    pub fn stage_one_price(&self, i: usize, p: crate::model::Mask) -> Q {
        if self.kind.sells_bundles() {
            if p == 0 {
                Q::zero()
            } else {
                self.bundle_prices[i].clone().unwrap_or_else(Q::zero)
            }
        } else if self.kind.sells_permits() {
            crate::model::items(p).fold(Q::zero(), |acc, j| {
                acc + self.permit_prices[i][j].clone().unwrap_or_else(Q::zero)
            })
        } else {
            Q::zero()
        }
    }
}

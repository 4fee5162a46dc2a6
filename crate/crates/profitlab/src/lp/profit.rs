//! The optimal-profit linear program over BIC, interim-IR direct mechanisms.
//!
//! Variables:
//! * `x[t, c, A]`: probability of joint allocation `A` at type profile `t`
//!   and cost atom `c` (one per non-empty `A`; the empty allocation takes the rest);
//! * `Π[i, tᵢ, j]`: interim probability that buyer `i` of type `tᵢ` gets item `j`,
//!   averaged over other buyers' types and the costs, tied to `x` by equality rows;
//! * `P[i, tᵢ]`: interim payment, split into non-negative parts.
//!
//! Incentive rows compare truthful reporting against every other type and
//! against non-participation. Payments only enter through interim expectations,
//! so charging `P[i, tᵢ]` at every `(t₋ᵢ, c)` loses nothing.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use super::simplex::{LinearProgram, LpOptimum, RowKind};
use crate::error::{Error, Result};
use crate::model::{Instance, PairConstraint};
use crate::rational::Q;

pub const DEFAULT_VAR_LIMIT: usize = 200_000;

/// A buyer-type edge of a dual flow; `to == None` is the sink (non-participation).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowEdge {
    pub from: usize,
    pub to: Option<usize>,
    pub weight: Q,
}

/// Dual flow per buyer over that buyer's type nodes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Flow {
    pub edges: Vec<Vec<FlowEdge>>,
}

impl Flow {
    /// All flow goes straight from the source to the sink.
    pub fn trivial(instance: &Instance) -> Self {
        let edges = (0..instance.n())
            .map(|i| {
                let ts = instance.types(i);
                (0..ts.len())
                    .map(|t| FlowEdge {
                        from: t,
                        to: None,
                        weight: ts.probs[t].clone(),
                    })
                    .collect()
            })
            .collect();
        Self { edges }
    }

    /// `f(t) + inflow(t) = outflow(t)` at every node, all weights non-negative.
    pub fn check_conservation(&self, instance: &Instance) -> Result<()> {
        for (i, edges) in self.edges.iter().enumerate() {
            let ts = instance.types(i);
            let mut balance: Vec<Q> = ts.probs.clone();
            for e in edges {
                if e.weight.is_negative() {
                    return Err(Error::FlowConservation {
                        buyer: i,
                        type_index: e.from,
                    });
                }
                balance[e.from] -= &e.weight;
                if let Some(to) = e.to {
                    balance[to] += &e.weight;
                }
            }
            if let Some(t) = balance.iter().position(|b| !b.is_zero()) {
                return Err(Error::FlowConservation {
                    buyer: i,
                    type_index: t,
                });
            }
        }
        Ok(())
    }

    /// `Φᵢ(t) = t - (1/f(t)) Σ_{t'} λ(t', t)(t' - t)` for every buyer and type.
    pub fn virtual_values(&self, instance: &Instance) -> Vec<Vec<Vec<Q>>> {
        (0..instance.n())
            .map(|i| {
                let ts = instance.types(i);
                let mut phi = ts.values.clone();
                for e in &self.edges[i] {
                    if let Some(to) = e.to {
                        for j in 0..instance.m() {
                            let d = (&ts.values[e.from][j] - &ts.values[to][j]) * &e.weight
                                / &ts.probs[to];
                            phi[to][j] -= d;
                        }
                    }
                }
                phi
            })
            .collect()
    }
}

/// A direct mechanism: a lottery over joint allocations per `(t, c)` plus interim payments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectMechanism {
    /// `allocation[profile][c]`: non-empty allocations with positive probability.
    pub allocation: Vec<Vec<Vec<(u64, Q)>>>,
    /// `payments[i][tᵢ]`, charged at every `(t₋ᵢ, c)`.
    pub payments: Vec<Vec<Q>>,
    /// `interim[i][tᵢ][c][j] = π_ij(tᵢ, c)`.
    pub interim: Vec<Vec<Vec<Vec<Q>>>>,
}

impl DirectMechanism {
    pub fn zero(instance: &Instance) -> Self {
        let c = instance.atoms().len();
        let allocation = vec![vec![Vec::new(); c]; instance.profile_count()];
        let payments = (0..instance.n())
            .map(|i| vec![Q::zero(); instance.types(i).len()])
            .collect();
        Self::from_parts(instance, allocation, payments)
    }

    pub fn from_parts(
        instance: &Instance,
        allocation: Vec<Vec<Vec<(u64, Q)>>>,
        payments: Vec<Vec<Q>>,
    ) -> Self {
        let (n, m, nc) = (instance.n(), instance.m(), instance.atoms().len());
        let pc = PairConstraint::new(instance);
        let mut interim: Vec<Vec<Vec<Vec<Q>>>> = (0..n)
            .map(|i| vec![vec![vec![Q::zero(); m]; nc]; instance.types(i).len()])
            .collect();
        for (k, per_atom) in allocation.iter().enumerate() {
            let profile = instance.profile(k);
            for i in 0..n {
                let others = profile
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| *b != i)
                    .fold(Q::one(), |acc, (b, &t)| acc * &instance.types(b).probs[t]);
                for (c, lottery) in per_atom.iter().enumerate() {
                    for (a, p) in lottery {
                        let bundle = pc.bundle(*a, i);
                        for j in crate::model::items(bundle) {
                            interim[i][profile[i]][c][j] += &others * p;
                        }
                    }
                }
            }
        }
        Self {
            allocation,
            payments,
            interim,
        }
    }

    /// `p_i(t, c)` for the full profile `profile`.
    pub fn payment(&self, i: usize, profile: &[usize], _c: usize) -> &Q {
        &self.payments[i][profile[i]]
    }

    /// `Σ_i E[p_i - c·x_i]`, straight from the allocation lotteries.
    pub fn profit(&self, instance: &Instance) -> Q {
        let pc = PairConstraint::new(instance);
        let mut total = Q::zero();
        for (k, per_atom) in self.allocation.iter().enumerate() {
            let profile = instance.profile(k);
            let fp = instance.profile_prob(&profile);
            for (c, lottery) in per_atom.iter().enumerate() {
                let atom = &instance.atoms()[c];
                let mut net = Q::zero();
                for i in 0..instance.n() {
                    net += self.payment(i, &profile, c);
                }
                for (a, p) in lottery {
                    for i in 0..instance.n() {
                        for j in crate::model::items(pc.bundle(*a, i)) {
                            net -= &atom.costs[j] * p;
                        }
                    }
                }
                total += net * &fp * &atom.prob;
            }
        }
        total
    }

    /// Interim utility of a buyer with true values `values` reporting `report`.
    pub fn interim_utility(
        &self,
        instance: &Instance,
        i: usize,
        values: &[Q],
        report: Option<usize>,
    ) -> Q {
        let Some(r) = report else { return Q::zero() };
        let mut u = -self.payments[i][r].clone();
        for (c, atom) in instance.atoms().iter().enumerate() {
            for (j, v) in values.iter().enumerate() {
                u += v * &self.interim[i][r][c][j] * &atom.prob;
            }
        }
        u
    }

    /// First violated incentive constraint `(buyer, true type, report)`, if any.
    pub fn bic_violation(&self, instance: &Instance) -> Option<(usize, usize, Option<usize>)> {
        for i in 0..instance.n() {
            let ts = instance.types(i);
            for t in 0..ts.len() {
                let truthful = self.interim_utility(instance, i, &ts.values[t], Some(t));
                let reports = (0..ts.len()).map(Some).chain(core::iter::once(None));
                for r in reports {
                    if self.interim_utility(instance, i, &ts.values[t], r) > truthful {
                        return Some((i, t, r));
                    }
                }
            }
        }
        None
    }

    /// Every lottery is a sub-distribution over feasible allocations.
    pub fn is_feasible(&self, instance: &Instance) -> bool {
        let pc = PairConstraint::new(instance);
        self.allocation.iter().flatten().all(|lottery| {
            let mass = lottery.iter().fold(Q::zero(), |acc, (_, p)| acc + p);
            mass <= Q::one()
                && lottery
                    .iter()
                    .all(|(a, p)| pc.contains(*a) && !p.is_negative())
        })
    }

    /// `E_t[π_ij(tᵢ, c)]`.
    pub fn expected_allocation(&self, instance: &Instance, i: usize, j: usize, c: usize) -> Q {
        let ts = instance.types(i);
        (0..ts.len()).fold(Q::zero(), |acc, t| {
            acc + &ts.probs[t] * &self.interim[i][t][c][j]
        })
    }
}

/// Where each family of variables and rows lives.
#[derive(Debug, Clone)]
pub struct ProfitLp {
    pub lp: LinearProgram,
    pub allocations: Vec<u64>,
    alloc_base: usize,
    pay_base: Vec<usize>,
    /// `(buyer, true type, report)` per incentive row, in row order starting at 0.
    pub incentive_rows: Vec<(usize, usize, Option<usize>)>,
    n_atoms: usize,
}

impl ProfitLp {
    fn alloc_var(&self, profile: usize, c: usize, a: usize) -> usize {
        self.alloc_base + (profile * self.n_atoms + c) * self.allocations.len() + a
    }
}

pub fn build_profit_lp(instance: &Instance) -> Result<ProfitLp> {
    build_profit_lp_with_limit(instance, DEFAULT_VAR_LIMIT)
}

pub fn build_profit_lp_with_limit(instance: &Instance, var_limit: usize) -> Result<ProfitLp> {
    let (n, m) = (instance.n(), instance.m());
    let n_atoms = instance.atoms().len();
    let pc = PairConstraint::new(instance);
    let allocations: Vec<u64> = pc.members().into_iter().filter(|&a| a != 0).collect();
    let profiles = instance.profile_count();
    let type_total: usize = (0..n).map(|i| instance.type_count(i)).sum();
    let required = profiles * n_atoms * allocations.len() + type_total * (m + 2);
    if required > var_limit {
        return Err(Error::TooLarge {
            what: "LP variables",
            required,
            limit: var_limit,
        });
    }

    let mut lp = LinearProgram::default();
    // Incentive rows first so that row index = position in `incentive_rows`.
    let mut incentive_rows = Vec::new();
    for i in 0..n {
        let k = instance.types(i).len();
        for t in 0..k {
            for r in (0..k)
                .filter(|&r| r != t)
                .map(Some)
                .chain(core::iter::once(None))
            {
                incentive_rows.push((i, t, r));
            }
        }
    }

    let alloc_base = 0;
    for k in 0..profiles {
        let fp = instance.profile_prob(&instance.profile(k));
        for (c, atom) in instance.atoms().iter().enumerate() {
            for &a in &allocations {
                let mut cost = Q::zero();
                for i in 0..n {
                    for j in crate::model::items(pc.bundle(a, i)) {
                        cost += &atom.costs[j];
                    }
                }
                lp.add_var(format!("x_{k}_{c}_{a}"), -(cost * &fp * &atom.prob));
            }
        }
    }
    let mut interim_base = Vec::with_capacity(n);
    for i in 0..n {
        interim_base.push(lp.num_vars());
        for t in 0..instance.types(i).len() {
            for j in 0..m {
                lp.add_var(format!("pi_{i}_{t}_{j}"), Q::zero());
            }
        }
    }
    let mut pay_base = Vec::with_capacity(n);
    for i in 0..n {
        pay_base.push(lp.num_vars());
        let ts = instance.types(i);
        for t in 0..ts.len() {
            lp.add_var(format!("pp_{i}_{t}"), ts.probs[t].clone());
            lp.add_var(format!("pm_{i}_{t}"), -ts.probs[t].clone());
        }
    }

    let pi_var = |i: usize, t: usize, j: usize| interim_base[i] + t * m + j;
    let pay_vars = |i: usize, t: usize| (pay_base[i] + 2 * t, pay_base[i] + 2 * t + 1);

    for &(i, t, r) in &incentive_rows {
        let ts = instance.types(i);
        let truth = &ts.values[t];
        let mut coeffs = Vec::new();
        // u(t→r) - u(t→t) ≤ 0
        for j in 0..m {
            if !truth[j].is_zero() {
                coeffs.push((pi_var(i, t, j), -truth[j].clone()));
            }
        }
        let (pp, pm) = pay_vars(i, t);
        coeffs.push((pp, Q::one()));
        coeffs.push((pm, -Q::one()));
        if let Some(r) = r {
            for j in 0..m {
                if !truth[j].is_zero() {
                    coeffs.push((pi_var(i, r, j), truth[j].clone()));
                }
            }
            let (rp, rm) = pay_vars(i, r);
            coeffs.push((rp, -Q::one()));
            coeffs.push((rm, Q::one()));
        }
        let name = match r {
            Some(r) => format!("bic_{i}_{t}_{r}"),
            None => format!("ir_{i}_{t}"),
        };
        lp.add_row(name, coeffs, RowKind::Le, Q::zero());
    }

    // Interim definitions: Π[i,t,j] - Σ f₋ᵢ p(c) x[t,c,A] over A ∋ (i,j) = 0.
    let mut def_coeffs: Vec<Vec<(usize, Q)>> = Vec::new();
    let mut def_index = vec![Vec::new(); n];
    for i in 0..n {
        for t in 0..instance.types(i).len() {
            for j in 0..m {
                def_index[i].push(def_coeffs.len());
                def_coeffs.push(vec![(pi_var(i, t, j), Q::one())]);
            }
        }
    }
    let layout = ProfitLp {
        lp: LinearProgram::default(),
        allocations: allocations.clone(),
        alloc_base,
        pay_base: pay_base.clone(),
        incentive_rows: Vec::new(),
        n_atoms,
    };
    for k in 0..profiles {
        let profile = instance.profile(k);
        for i in 0..n {
            let others = profile
                .iter()
                .enumerate()
                .filter(|(b, _)| *b != i)
                .fold(Q::one(), |acc, (b, &t)| acc * &instance.types(b).probs[t]);
            for (c, atom) in instance.atoms().iter().enumerate() {
                let w = &others * &atom.prob;
                for (ai, &a) in allocations.iter().enumerate() {
                    for j in crate::model::items(pc.bundle(a, i)) {
                        let row = def_index[i][profile[i] * m + j];
                        def_coeffs[row].push((layout.alloc_var(k, c, ai), -w.clone()));
                    }
                }
            }
        }
    }
    for (i, rows) in def_index.iter().enumerate() {
        for (idx, &row) in rows.iter().enumerate() {
            let (t, j) = (idx / m.max(1), idx % m.max(1));
            lp.add_row(
                format!("def_{i}_{t}_{j}"),
                core::mem::take(&mut def_coeffs[row]),
                RowKind::Eq,
                Q::zero(),
            );
        }
    }
    for k in 0..profiles {
        for c in 0..n_atoms {
            let coeffs = (0..allocations.len())
                .map(|a| (layout.alloc_var(k, c, a), Q::one()))
                .collect();
            lp.add_row(format!("simplex_{k}_{c}"), coeffs, RowKind::Le, Q::one());
        }
    }
    Ok(ProfitLp {
        lp,
        incentive_rows,
        ..layout
    })
}

/// Exact optimum of the profit LP.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: Q,
    pub mechanism: DirectMechanism,
    /// Multipliers on the incentive rows, as a flow over each buyer's types.
    pub flow: Flow,
    pub exact_pivots: usize,
}

pub fn solve_lp(instance: &Instance) -> Result<LpSolution> {
    let model = build_profit_lp(instance)?;
    solve_built(instance, &model)
}

pub fn solve_built(instance: &Instance, model: &ProfitLp) -> Result<LpSolution> {
    let LpOptimum {
        objective,
        primal,
        dual,
        exact_pivots,
        ..
    } = model.lp.solve()?;
    let n_atoms = instance.atoms().len();
    let mut allocation = vec![vec![Vec::new(); n_atoms]; instance.profile_count()];
    for (k, per_atom) in allocation.iter_mut().enumerate() {
        for (c, lottery) in per_atom.iter_mut().enumerate() {
            for (ai, &a) in model.allocations.iter().enumerate() {
                let v = &primal[model.alloc_var(k, c, ai)];
                if v.is_positive() {
                    lottery.push((a, v.clone()));
                }
            }
        }
    }
    let payments = (0..instance.n())
        .map(|i| {
            (0..instance.types(i).len())
                .map(|t| {
                    &primal[model.pay_base[i] + 2 * t] - &primal[model.pay_base[i] + 2 * t + 1]
                })
                .collect()
        })
        .collect();
    let mechanism = DirectMechanism::from_parts(instance, allocation, payments);
    let mut edges = vec![Vec::new(); instance.n()];
    for (row, &(i, t, r)) in model.incentive_rows.iter().enumerate() {
        if !dual[row].is_zero() {
            edges[i].push(FlowEdge {
                from: t,
                to: r,
                weight: dual[row].clone(),
            });
        }
    }
    Ok(LpSolution {
        objective,
        mechanism,
        flow: Flow { edges },
        exact_pivots,
    })
}

/// Both sides of the virtual-welfare bound for a mechanism and a flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualBound {
    pub profit: Q,
    pub bound: Q,
}

impl VirtualBound {
    pub fn holds(&self) -> bool {
        self.profit <= self.bound
    }
}

/// Profit of a BIC mechanism against `E[Σ π·(Φ - c)]` for the flow's virtual values.
pub fn verify_virtual_bound(
    instance: &Instance,
    mechanism: &DirectMechanism,
    flow: &Flow,
) -> Result<VirtualBound> {
    flow.check_conservation(instance)?;
    let phi = flow.virtual_values(instance);
    let mut bound = Q::zero();
    for i in 0..instance.n() {
        let ts = instance.types(i);
        for t in 0..ts.len() {
            for (c, atom) in instance.atoms().iter().enumerate() {
                let w = &ts.probs[t] * &atom.prob;
                for j in 0..instance.m() {
                    let pi = &mechanism.interim[i][t][c][j];
                    if !pi.is_zero() {
                        bound += pi * (&phi[i][t][j] - &atom.costs[j]) * &w;
                    }
                }
            }
        }
    }
    Ok(VirtualBound {
        profit: mechanism.profit(instance),
        bound,
    })
}

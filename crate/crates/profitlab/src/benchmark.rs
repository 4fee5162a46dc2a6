//! Ex-ante relaxation, the canonical dual flow, the three-term profit benchmark
//! and its core/tail split.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::check::Check;
use crate::lp::{DirectMechanism, Flow, FlowEdge};
use crate::model::{full_mask, Instance};
use crate::myerson::ironed_virtual_values;
use crate::rational::{half, max_q, Q};
use crate::valuation::{Thresholds, VbarTable};

/// Halved expected allocation and the matching price thresholds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExAnte {
    /// `q[i][j][c] = ½·E_t[π_ij(tᵢ, c)]`.
    pub q: Vec<Vec<Vec<Q>>>,
    pub beta: Thresholds,
    /// Probability that a value exactly at the threshold counts as active.
    pub rationing: Vec<Vec<Vec<Q>>>,
}

pub fn ex_ante(instance: &Instance, mechanism: &DirectMechanism) -> ExAnte {
    let (n, m, nc) = (instance.n(), instance.m(), instance.atoms().len());
    let mut q = vec![vec![vec![Q::zero(); nc]; m]; n];
    let mut beta = Thresholds::zero(instance);
    let mut rationing = vec![vec![vec![Q::one(); nc]; m]; n];
    for i in 0..n {
        for j in 0..m {
            let d = instance.dist(i, j);
            for c in 0..nc {
                let target = mechanism.expected_allocation(instance, i, j, c) * half();
                let cost = &instance.atoms()[c].costs[j];
                if d.prob_at_least(cost) > target {
                    // Smallest support value s with Pr[t > s] < q ≤ Pr[t ≥ s]; rationing tops up to q.
                    let k = (0..d.len())
                        .rev()
                        .find(|&k| d.tail_from(k) >= target)
                        .expect("Pr[t ≥ s₀] = 1 ≥ q");
                    let above = d.tail_from(k + 1);
                    let rho = (&target - &above) / &d.probs()[k];
                    beta.set(i, j, c, d.support()[k].clone());
                    rationing[i][j][c] = rho;
                }
                q[i][j][c] = target;
            }
        }
    }
    ExAnte { q, beta, rationing }
}

impl ExAnte {
    /// Posted price `max(β, c_j)` at which pair `(i, j)` is offered under atom `c`.
    pub fn price(&self, instance: &Instance, i: usize, j: usize, c: usize) -> Q {
        max_q(self.beta.get(i, j, c), &instance.atoms()[c].costs[j])
    }

    /// Probability that value index `k` of `D_ij` counts as active under atom `c`.
    pub fn activity(&self, instance: &Instance, i: usize, j: usize, c: usize, k: usize) -> Q {
        let v = &instance.dist(i, j).support()[k];
        let price = self.price(instance, i, j, c);
        if *v > price {
            Q::one()
        } else if *v == price {
            self.rationing[i][j][c].clone()
        } else {
            Q::zero()
        }
    }

    /// `Pr[(i, j) active | c]`; equals `min(q, Pr[t ≥ c_j])`.
    pub fn active_prob(&self, instance: &Instance, i: usize, j: usize, c: usize) -> Q {
        let d = instance.dist(i, j);
        (0..d.len()).fold(Q::zero(), |acc, k| {
            acc + self.activity(instance, i, j, c, k) * &d.probs()[k]
        })
    }

    /// `Σ_i q_ij(c) ≤ ½` for every item and atom.
    pub fn feasibility_checks(&self, instance: &Instance) -> Vec<Check> {
        let mut out = Vec::new();
        for j in 0..instance.m() {
            for c in 0..instance.atoms().len() {
                let total = (0..instance.n()).fold(Q::zero(), |acc, i| acc + &self.q[i][j][c]);
                out.push(Check::at_most(
                    format!("ex-ante mass item {j} atom {c}"),
                    total,
                    half(),
                ));
            }
        }
        out
    }
}

/// Thresholds used for the benchmark: zero for one buyer, the ex-ante ones otherwise.
pub fn benchmark_thresholds(instance: &Instance, ex: &ExAnte) -> Thresholds {
    if instance.n() == 1 {
        Thresholds::zero(instance)
    } else {
        ex.beta.clone()
    }
}

/// Favorite-item regions and the flow that induces Myerson virtual values along them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSpec {
    /// `labels[i][t]`: smallest index maximizing `v̄_ij(t_ij)`; `None` when there are no items.
    pub labels: Vec<Vec<Option<usize>>>,
    /// `virtual_values[i][t][k]`: `t_k` off the label, ironed `φ̃` on it.
    pub virtual_values: Vec<Vec<Vec<Q>>>,
    /// Explicit flow: along the labelled coordinate, down to the region boundary, then to the sink.
    pub flow: Flow,
}

pub fn regions(instance: &Instance, beta: &Thresholds) -> Vec<Vec<Option<usize>>> {
    (0..instance.n())
        .map(|i| {
            let table = VbarTable::new(instance, i, Some(beta));
            table
                .singles
                .iter()
                .map(|row| {
                    let mut best: Option<usize> = None;
                    for (j, v) in row.iter().enumerate() {
                        if best.is_none_or(|b| *v > row[b]) {
                            best = Some(j);
                        }
                    }
                    best
                })
                .collect()
        })
        .collect()
}

pub fn build_flow(instance: &Instance, beta: &Thresholds) -> FlowSpec {
    let labels = regions(instance, beta);
    let mut virtual_values = Vec::with_capacity(instance.n());
    let mut edges = Vec::with_capacity(instance.n());
    for i in 0..instance.n() {
        let ts = instance.types(i);
        let ironed: Vec<Vec<Q>> = (0..instance.m())
            .map(|j| ironed_virtual_values(instance.dist(i, j)))
            .collect();
        let mut vv = ts.values.clone();
        let mut es = Vec::new();
        for t in 0..ts.len() {
            let Some(j) = labels[i][t] else {
                es.push(FlowEdge {
                    from: t,
                    to: None,
                    weight: ts.probs[t].clone(),
                });
                continue;
            };
            let k = ts.digits[t][j];
            vv[t][j] = ironed[j][k].clone();
            let d = instance.dist(i, j);
            let others = &ts.probs[t] / &d.probs()[k];
            let weight = others * d.tail_from(k);
            let below = (k > 0)
                .then(|| ts.with_digit(t, j, k - 1))
                .filter(|&s| labels[i][s] == Some(j));
            es.push(FlowEdge {
                from: t,
                to: below,
                weight,
            });
        }
        virtual_values.push(vv);
        edges.push(es);
    }
    FlowSpec {
        labels,
        virtual_values,
        flow: Flow { edges },
    }
}

/// The three benchmark terms and the core/tail quantities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkReport {
    pub most_surplus: Q,
    pub prophet: Q,
    pub less_surplus: Q,
    pub tail: Q,
    pub core: Q,
    pub tau: Vec<Q>,
    pub delta: Vec<Q>,
}

impl BenchmarkReport {
    pub fn total(&self) -> Q {
        &self.most_surplus + &self.prophet + &self.less_surplus
    }
}

pub fn most_surplus(instance: &Instance, mechanism: &DirectMechanism, flow: &FlowSpec) -> Q {
    let mut total = Q::zero();
    for i in 0..instance.n() {
        let ts = instance.types(i);
        for t in 0..ts.len() {
            let Some(j) = flow.labels[i][t] else { continue };
            let phi = &flow.virtual_values[i][t][j];
            for (c, atom) in instance.atoms().iter().enumerate() {
                let pi = &mechanism.interim[i][t][c][j];
                if !pi.is_zero() {
                    total += pi * (phi - &atom.costs[j]) * &ts.probs[t] * &atom.prob;
                }
            }
        }
    }
    total
}

pub fn prophet(instance: &Instance, ex: &ExAnte, beta: &Thresholds) -> Q {
    let mut total = Q::zero();
    for i in 0..instance.n() {
        for j in 0..instance.m() {
            for (c, atom) in instance.atoms().iter().enumerate() {
                let gap = max_q(beta.get(i, j, c), &atom.costs[j]) - &atom.costs[j];
                total += &ex.q[i][j][c] * gap * &atom.prob;
            }
        }
    }
    total * Q::from_integer(2.into())
}

pub fn less_surplus(instance: &Instance, tables: &[VbarTable], flow: &FlowSpec) -> Q {
    let full = full_mask(instance.m());
    let mut total = Q::zero();
    for i in 0..instance.n() {
        let ts = instance.types(i);
        for t in 0..ts.len() {
            let rest = match flow.labels[i][t] {
                Some(j) => full & !(1 << j),
                None => full,
            };
            total += &tables[i].sets[t][rest as usize] * &ts.probs[t];
        }
    }
    total
}

/// `τᵢ`: smallest v̄ grid value (or 0) with `Σ_j Pr[v̄_ij > τ] ≤ ½`.
pub fn tau(instance: &Instance, i: usize, table: &VbarTable) -> Q {
    let ts = instance.types(i);
    let mut grid: Vec<Q> = table.singles.iter().flatten().cloned().collect();
    grid.push(Q::zero());
    grid.sort();
    grid.dedup();
    for g in grid {
        let mass = (0..instance.m()).fold(Q::zero(), |acc, j| {
            acc + (0..ts.len())
                .filter(|&t| table.singles[t][j] > g)
                .fold(Q::zero(), |a, t| a + &ts.probs[t])
        });
        if mass <= half() {
            return g;
        }
    }
    unreachable!("the largest grid value always qualifies")
}

/// Distribution of `v̄_ij` as (value, probability) pairs, by support position.
pub fn single_vbar_dist(instance: &Instance, i: usize, j: usize, beta: &Thresholds) -> Vec<(Q, Q)> {
    let d = instance.dist(i, j);
    d.support()
        .iter()
        .zip(d.probs())
        .map(|(v, p)| {
            (
                crate::valuation::vbar_single(instance, i, j, v, Some(beta)),
                p.clone(),
            )
        })
        .collect()
}

fn prob_at_least(dist: &[(Q, Q)], x: &Q) -> Q {
    dist.iter()
        .filter(|(v, _)| v >= x)
        .fold(Q::zero(), |acc, (_, p)| acc + p)
}

/// `Σ_j E[v̄_ij · 1[v̄_ij > τ] · Pr[∃ k ≠ j: v̄_ik ≥ v̄_ij]]`.
pub fn tail_term(instance: &Instance, i: usize, beta: &Thresholds, tau: &Q) -> Q {
    let dists: Vec<Vec<(Q, Q)>> = (0..instance.m())
        .map(|j| single_vbar_dist(instance, i, j, beta))
        .collect();
    let mut total = Q::zero();
    for j in 0..instance.m() {
        for (x, p) in &dists[j] {
            if x <= tau {
                continue;
            }
            let none_higher = (0..instance.m())
                .filter(|&k| k != j)
                .fold(Q::one(), |acc, k| {
                    acc * (Q::one() - prob_at_least(&dists[k], x))
                });
            total += x * p * (Q::one() - none_higher);
        }
    }
    total
}

/// `E[v̄ᵢ(tᵢ, Cᵢ(tᵢ))]`.
pub fn core_term(instance: &Instance, i: usize, table: &VbarTable, tau: &Q) -> Q {
    let ts = instance.types(i);
    (0..ts.len()).fold(Q::zero(), |acc, t| {
        acc + table.mu(t, full_mask(instance.m()), tau) * &ts.probs[t]
    })
}

/// Half the lower median of `v̄ᵢ(tᵢ, Cᵢ(tᵢ))`.
pub fn bundle_price(instance: &Instance, i: usize, table: &VbarTable, tau: &Q) -> Q {
    let ts = instance.types(i);
    let mut dist: Vec<(Q, Q)> = (0..ts.len())
        .map(|t| {
            (
                table.mu(t, full_mask(instance.m()), tau).clone(),
                ts.probs[t].clone(),
            )
        })
        .collect();
    dist.sort();
    let mut acc = Q::zero();
    for (v, p) in dist {
        acc += p;
        if acc >= half() {
            return v * half();
        }
    }
    Q::zero()
}

/// Tail permit threshold per item: `(ξ, r)` maximizing `a·Pr[v̄_ij ≥ a]` over grid values `a > τ`.
pub fn tail_prices(
    instance: &Instance,
    i: usize,
    beta: &Thresholds,
    tau: &Q,
) -> Vec<Option<(Q, Q)>> {
    (0..instance.m())
        .map(|j| {
            let dist = single_vbar_dist(instance, i, j, beta);
            let mut grid: Vec<Q> = dist
                .iter()
                .map(|(v, _)| v.clone())
                .filter(|v| v > tau)
                .collect();
            grid.sort();
            grid.dedup();
            let mut best: Option<(Q, Q)> = None;
            for a in grid {
                let r = &a * prob_at_least(&dist, &a);
                if best.as_ref().is_none_or(|(_, b)| r > *b) {
                    best = Some((a, r));
                }
            }
            best
        })
        .collect()
}

pub fn benchmark_terms(
    instance: &Instance,
    mechanism: &DirectMechanism,
    ex: &ExAnte,
) -> BenchmarkReport {
    let beta = benchmark_thresholds(instance, ex);
    let flow = build_flow(instance, &beta);
    let tables: Vec<VbarTable> = (0..instance.n())
        .map(|i| VbarTable::new(instance, i, Some(&beta)))
        .collect();
    let mut tail = Q::zero();
    let mut core = Q::zero();
    let mut taus = Vec::new();
    let mut deltas = Vec::new();
    for (i, table) in tables.iter().enumerate() {
        let t = tau(instance, i, table);
        tail += tail_term(instance, i, &beta, &t);
        core += core_term(instance, i, table, &t);
        deltas.push(bundle_price(instance, i, table, &t));
        taus.push(t);
    }
    BenchmarkReport {
        most_surplus: most_surplus(instance, mechanism, &flow),
        prophet: prophet(instance, ex, &beta),
        less_surplus: less_surplus(instance, &tables, &flow),
        tail,
        core,
        tau: taus,
        delta: deltas,
    }
}

/// `E[μᵢ(tᵢ, [m])] ≤ 4δᵢ + (5/2)τᵢ` per buyer.
pub fn concentration_checks(
    instance: &Instance,
    beta: &Thresholds,
    report: &BenchmarkReport,
) -> Vec<Check> {
    (0..instance.n())
        .map(|i| {
            let table = VbarTable::new(instance, i, Some(beta));
            let lhs = core_term(instance, i, &table, &report.tau[i]);
            let rhs = &report.delta[i] * Q::from_integer(4.into())
                + &report.tau[i] * crate::rational::frac(5, 2);
            Check::at_most(format!("core concentration buyer {i}"), lhs, rhs)
        })
        .collect()
}

/// Less-Surplus ≤ Tail + Core.
pub fn core_tail_check(report: &BenchmarkReport) -> Check {
    Check::at_most(
        "core-tail split",
        report.less_surplus.clone(),
        &report.tail + &report.core,
    )
}

/// Tail ≤ ½ Σ r over tail prices.
pub fn tail_price_check(instance: &Instance, beta: &Thresholds, report: &BenchmarkReport) -> Check {
    let mut r_total = Q::zero();
    for i in 0..instance.n() {
        for (_, r) in tail_prices(instance, i, beta, &report.tau[i])
            .into_iter()
            .flatten()
        {
            r_total += r;
        }
    }
    Check::at_most(
        "tail below half the tail revenue",
        report.tail.clone(),
        r_total * half(),
    )
}

//! Per-instance verification chains: each function solves what it needs,
//! builds the mechanisms the bounds talk about, and returns every comparison
//! as a named exact [`Check`].

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::benchmark::{
    benchmark_terms, benchmark_thresholds, build_flow, concentration_checks, core_tail_check,
    ex_ante, most_surplus, tail_price_check, BenchmarkReport, ExAnte,
};
use crate::check::Check;
use crate::error::{Error, Result};
use crate::lp::{solve_lp, verify_virtual_bound, LpSolution};
use crate::mechanisms::construct::profit_by_atom;
use crate::mechanisms::{
    auxiliary_revenue, construct_csip_from_copies, construct_rspp_tail, construct_rspp_tau,
    construct_spb_core, convert_revenue_to_permit, evaluate, incentive_gain, prophet_csip,
    search_best, Auxiliary, Kind, MechanismSpec,
};
use crate::model::Instance;
use crate::myerson::{
    copies_opt_additive, copies_opt_ud, copies_opt_ud_multi, expected_positive_surplus,
};
use crate::ocrs::{
    auction_ocrs, buyer_families, certified_subfamily, check_scaled_membership, item_partition,
    order_replay, selectability,
};
use crate::oracles::{
    brute_posted_price_opt, direct_benchmark_recompute, example_1_1, ip_opt_additive,
    pb_opt_additive,
};
use crate::properties::valuation_properties;
use crate::rational::{frac, half, int, max_q, Q};
use crate::valuation::{Thresholds, VbarTable};

/// Headline numbers of one instance; `None` where a suite does not compute them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Figures {
    pub opt: Option<Q>,
    pub ip: Option<Q>,
    pub pp: Option<Q>,
    pub pb: Option<Q>,
    pub csip: Option<Q>,
    pub rspp: Option<Q>,
    pub spb: Option<Q>,
    pub most_surplus: Option<Q>,
    pub prophet: Option<Q>,
    pub less_surplus: Option<Q>,
    pub tail: Option<Q>,
    pub core: Option<Q>,
}

impl Figures {
    fn with_benchmark(mut self, report: &BenchmarkReport) -> Self {
        self.most_surplus = Some(report.most_surplus.clone());
        self.prophet = Some(report.prophet.clone());
        self.less_surplus = Some(report.less_surplus.clone());
        self.tail = Some(report.tail.clone());
        self.core = Some(report.core.clone());
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct Analysis {
    pub figures: Figures,
    pub checks: Vec<Check>,
}

impl Analysis {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.holds())
    }
}

struct Solved {
    lp: LpSolution,
    ex: ExAnte,
    report: BenchmarkReport,
}

fn solve(instance: &Instance) -> Result<Solved> {
    let lp = solve_lp(instance)?;
    let ex = ex_ante(instance, &lp.mechanism);
    let report = benchmark_terms(instance, &lp.mechanism, &ex);
    Ok(Solved { lp, ex, report })
}

fn at_most_opt(checks: &mut Vec<Check>, what: &str, profit: &Q, opt: &Q) {
    checks.push(Check::at_most(
        format!("{what} profit ≤ OPT"),
        profit.clone(),
        opt.clone(),
    ));
}

fn truthful(checks: &mut Vec<Check>, instance: &Instance, spec: &MechanismSpec) -> Result<Q> {
    let result = evaluate(instance, spec)?;
    checks.push(Check::equal(
        format!("{} incentive gain", spec.label),
        incentive_gain(instance, spec, &result),
        Q::zero(),
    ));
    Ok(result.profit)
}

/// LP optimum against the three-term benchmark, with an independent recomputation.
pub fn benchmark_validity(instance: &Instance) -> Result<Analysis> {
    let Solved { lp, ex, report } = solve(instance)?;
    let mut checks = vec![
        Check::equal(
            "LP objective = mechanism profit",
            lp.objective.clone(),
            lp.mechanism.profit(instance),
        ),
        Check::at_most(
            "OPT ≤ Most-Surplus + Prophet + Less-Surplus",
            lp.objective.clone(),
            report.total(),
        ),
        core_tail_check(&report),
    ];
    checks.extend(ex.feasibility_checks(instance));
    let dual = verify_virtual_bound(instance, &lp.mechanism, &lp.flow)?;
    checks.push(Check::at_most(
        "profit ≤ virtual welfare of the LP dual",
        dual.profit,
        dual.bound,
    ));
    let direct = direct_benchmark_recompute(instance, &lp.mechanism)?;
    for (oracle, ours) in
        direct
            .iter()
            .zip([&report.most_surplus, &report.prophet, &report.less_surplus])
    {
        checks.push(Check::equal(
            format!("{} recomputed literally", oracle.name),
            oracle.value.clone(),
            ours.clone(),
        ));
    }
    let figures = Figures {
        opt: Some(lp.objective),
        ..Figures::default()
    }
    .with_benchmark(&report);
    Ok(Analysis { figures, checks })
}

/// Coefficients `(a, b, c)` of `OPT ≤ a·IP + b·PP + c·PB` for one buyer.
pub fn single_buyer_coefficients(additive: bool) -> (i64, i64, i64) {
    if additive {
        (1, 3, 2)
    } else {
        (2, 5, 4)
    }
}

/// Family optima by brute force, the decomposition bound, and both permit conversions.
pub fn single_buyer_bounds(instance: &Instance) -> Result<Analysis> {
    if instance.n() != 1 {
        return Err(Error::Precondition("single-buyer bounds need n = 1".into()));
    }
    let Solved { lp, report, .. } = solve(instance)?;
    let opt = lp.objective;
    let mut checks = Vec::new();
    let mut best = Vec::new();
    for kind in [Kind::Ip, Kind::Pp, Kind::Pb] {
        let brute = brute_posted_price_opt(instance, kind)?;
        let searched = search_best(instance, kind, None)?;
        checks.push(Check::equal(
            format!("{} search = brute force", kind.name()),
            searched.profit.clone(),
            brute.value.clone(),
        ));
        at_most_opt(&mut checks, kind.name(), &brute.value, &opt);
        best.push((brute.value, searched.spec));
    }
    let additive = instance.family(0).is_additive();
    let (a, b, c) = single_buyer_coefficients(additive);
    let (ip, pp, pb) = (&best[0].0, &best[1].0, &best[2].0);
    let bound = ip * int(a) + pp * int(b) + pb * int(c);
    checks.push(Check::at_most(
        format!("OPT ≤ {a}·IP + {b}·PP + {c}·PB"),
        opt.clone(),
        bound,
    ));
    let simple = max_q(&max_q(ip, pp), pb);
    checks.push(Check::at_most(
        format!("OPT ≤ {}·max(IP, PP, PB)", a + b + c),
        opt.clone(),
        simple * int(a + b + c),
    ));
    let pp_spec = &best[1].1;
    let mut conversions = vec![Auxiliary::SeparatePrices(pp_spec.permit_prices[0].clone())];
    if let Some(delta) = &best[2].1.bundle_prices[0] {
        conversions.push(Auxiliary::GrandBundle(delta.clone()));
    }
    for aux in conversions {
        let revenue = auxiliary_revenue(instance, &aux)?;
        let spec = convert_revenue_to_permit(instance, &aux)?;
        let profit = evaluate(instance, &spec)?.profit;
        let name = match aux {
            Auxiliary::SeparatePrices(_) => "conversion: separate permits",
            Auxiliary::GrandBundle(_) => "conversion: permit bundle",
        };
        checks.push(Check::equal(name, profit, revenue));
    }
    let figures = Figures {
        opt: Some(opt),
        ip: Some(ip.clone()),
        pp: Some(pp.clone()),
        pb: Some(pb.clone()),
        ..Figures::default()
    }
    .with_benchmark(&report);
    Ok(Analysis { figures, checks })
}

/// `Most-Surplus ≤ E_c[copies] ≤ 2·profit(constructed IP)`, factor 1 when additive.
pub fn copies_chain(instance: &Instance) -> Result<Analysis> {
    if instance.n() != 1 {
        return Err(Error::Precondition("the copies chain needs n = 1".into()));
    }
    let Solved { lp, ex, report } = solve(instance)?;
    let flow = build_flow(instance, &benchmark_thresholds(instance, &ex));
    let ms = most_surplus(instance, &lp.mechanism, &flow);
    let mut copies = Q::zero();
    let mut copies_add = Q::zero();
    for (c, atom) in instance.atoms().iter().enumerate() {
        copies += copies_opt_ud(instance, c)? * &atom.prob;
        copies_add += copies_opt_additive(instance, c)? * &atom.prob;
    }
    let spec = construct_csip_from_copies(instance)?;
    let mut checks = Vec::new();
    let profit = truthful(&mut checks, instance, &spec)?;
    at_most_opt(&mut checks, "constructed IP", &profit, &lp.objective);
    checks.push(Check::at_most(
        "Most-Surplus ≤ E[unit-demand copies]",
        ms.clone(),
        copies.clone(),
    ));
    checks.push(Check::at_most(
        "E[unit-demand copies] ≤ 2·IP(copies)",
        copies,
        &profit * int(2),
    ));
    if instance.family(0).is_additive() {
        checks.push(Check::at_most(
            "Most-Surplus ≤ IP(copies)",
            ms,
            profit.clone(),
        ));
        checks.push(Check::equal(
            "IP(copies) = E[additive copies]",
            profit.clone(),
            copies_add,
        ));
    }
    let figures = Figures {
        opt: Some(lp.objective),
        ip: Some(profit),
        ..Figures::default()
    }
    .with_benchmark(&report);
    Ok(Analysis { figures, checks })
}

/// Structural properties of `v̄` and `μ` for every buyer under thresholds `beta`.
pub fn property_suite(instance: &Instance, beta: &Thresholds) -> Analysis {
    let mut checks = Vec::new();
    for i in 0..instance.n() {
        let table = VbarTable::new(instance, i, Some(beta));
        let tau = crate::benchmark::tau(instance, i, &table);
        let report = valuation_properties(instance, i, &table, &tau);
        checks.push(Check::equal(
            format!(
                "buyer {i}: property violations over {} comparisons",
                report.checked
            ),
            int(report.violations.len() as i64),
            Q::zero(),
        ));
    }
    Analysis {
        figures: Figures::default(),
        checks,
    }
}

/// Every buyer order, as permutations of `0..n`.
pub fn buyer_orders(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for i in 0..n {
            if !prefix.contains(&i) {
                prefix.push(i);
                extend(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), n, &mut out);
    out
}

fn reordered(spec: &MechanismSpec, order: &[usize]) -> MechanismSpec {
    MechanismSpec {
        order: order.to_vec(),
        ..spec.clone()
    }
}

/// The multi-buyer chain: each benchmark term against the mechanism built to
/// cover it, then the composed bound. Orders are swept when `n ≤ 3`.
pub fn multi_buyer_chain(instance: &Instance) -> Result<Analysis> {
    let Solved { lp, ex, report } = solve(instance)?;
    let opt = lp.objective.clone();
    let beta = benchmark_thresholds(instance, &ex);
    let mut checks = vec![Check::at_most(
        "OPT ≤ Most-Surplus + Prophet + Less-Surplus",
        opt.clone(),
        report.total(),
    )];
    checks.push(core_tail_check(&report));

    // Most-Surplus against item pricing from the copies argument.
    let copies_spec = construct_csip_from_copies(instance)?;
    let copies_profit = truthful(&mut checks, instance, &copies_spec)?;
    at_most_opt(&mut checks, "CSIP (copies)", &copies_profit, &opt);
    let mut copies_bound = Q::zero();
    for (c, atom) in instance.atoms().iter().enumerate() {
        copies_bound += copies_opt_ud_multi(instance, c)? * &atom.prob;
    }
    checks.push(Check::at_most(
        "Most-Surplus ≤ E[copies matching]",
        report.most_surplus.clone(),
        copies_bound,
    ));
    checks.push(Check::at_most(
        "Most-Surplus ≤ 6·CSIP(copies)",
        report.most_surplus.clone(),
        &copies_profit * int(6),
    ));

    checks.push(tail_price_check(instance, &beta, &report));
    checks.extend(concentration_checks(instance, &beta, &report));

    let prophet = prophet_csip(instance, &ex)?;
    let tail = construct_rspp_tail(instance, &ex, &report.tau)?;
    let tau_spec = construct_rspp_tau(instance, &ex, &report.tau)?;
    let spb = construct_spb_core(instance, &ex, &report.delta)?;
    let sum_tau = report.tau.iter().fold(Q::zero(), |acc, t| acc + t);
    let sum_delta = report.delta.iter().fold(Q::zero(), |acc, d| acc + d);
    let tail_revenue = tail.xi.iter().enumerate().fold(Q::zero(), |acc, (i, row)| {
        row.iter().enumerate().fold(acc, |a, (j, x)| match x {
            Some((xi, _)) => a + xi * &tail.reach[i][j],
            None => a,
        })
    });
    for (c, cert) in prophet.selectability.iter().enumerate() {
        checks.push(Check::at_most(
            format!("prophet selectability atom {c} ≥ 1/4"),
            frac(1, 4),
            cert.clone(),
        ));
    }

    let orders = if instance.n() <= 3 {
        buyer_orders(instance.n())
    } else {
        vec![(0..instance.n()).collect()]
    };
    let mut figures_at_default = None;
    for order in &orders {
        let tag = format!("order {order:?}");
        let p_spec = reordered(&prophet.spec, order);
        let p_result = evaluate(instance, &p_spec)?;
        let by_atom = profit_by_atom(instance, &p_spec)?;
        for (c, atom) in instance.atoms().iter().enumerate() {
            let mut served = Q::zero();
            for i in 0..instance.n() {
                for j in 0..instance.m() {
                    if let Some(p) = &p_spec.item_prices[i][j][c] {
                        served += &prophet.activity[c][i * instance.m() + j] * (p - &atom.costs[j]);
                    }
                }
            }
            checks.push(Check::at_most(
                format!("{tag}: prophet CSIP atom {c} ≥ selectability·Σ y(p - c)"),
                &prophet.selectability[c] * served,
                by_atom[c].clone(),
            ));
        }
        checks.push(Check::at_most(
            format!("{tag}: Prophet ≤ 8·CSIP(prophet)"),
            report.prophet.clone(),
            &p_result.profit * int(8),
        ));

        let t_spec = reordered(&tail.spec, order);
        let t_result = evaluate(instance, &t_spec)?;
        for i in 0..instance.n() {
            for j in 0..instance.m() {
                if tail.xi[i][j].is_some() {
                    checks.push(Check::at_most(
                        format!("{tag}: buyer {i} buys permit {j} w.p. ≥ ½·reach"),
                        &tail.reach[i][j] * half(),
                        t_result.diagnostics.permit_purchase[i][j].clone(),
                    ));
                }
            }
        }
        checks.push(Check::at_most(
            format!("{tag}: Σ ξ·reach ≤ 4·RSPP(tail)"),
            tail_revenue.clone(),
            &t_result.profit * int(4),
        ));
        checks.push(Check::at_most(
            format!("{tag}: Tail ≤ 2·RSPP(tail)"),
            report.tail.clone(),
            &t_result.profit * int(2),
        ));

        let tau_result = evaluate(instance, &reordered(&tau_spec, order))?;
        checks.push(Check::at_most(
            format!("{tag}: Σ τ ≤ 8·RSPP(τ)"),
            sum_tau.clone(),
            &tau_result.profit * int(8),
        ));

        let s_spec = reordered(&spb, order);
        let s_result = evaluate(instance, &s_spec)?;
        for (i, accept) in s_result.diagnostics.bundle_accept.iter().enumerate() {
            checks.push(Check::at_most(
                format!("{tag}: buyer {i} pays δ w.p. ≥ ½"),
                half(),
                accept.clone(),
            ));
        }
        checks.push(Check::at_most(
            format!("{tag}: Σ δ ≤ 2·SPB"),
            sum_delta.clone(),
            &s_result.profit * int(2),
        ));

        let csip = max_q(&copies_profit, &p_result.profit);
        let rspp = max_q(&t_result.profit, &tau_result.profit);
        checks.push(Check::at_most(
            format!("{tag}: Core ≤ 8·SPB + 20·RSPP"),
            report.core.clone(),
            &s_result.profit * int(8) + &rspp * int(20),
        ));
        checks.push(Check::at_most(
            format!("{tag}: OPT ≤ 14·CSIP + 22·RSPP + 8·SPB"),
            opt.clone(),
            &csip * int(14) + &rspp * int(22) + &s_result.profit * int(8),
        ));
        for (name, profit) in [
            ("CSIP (prophet)", &p_result.profit),
            ("RSPP (tail)", &t_result.profit),
            ("RSPP (τ)", &tau_result.profit),
            ("SPB (core)", &s_result.profit),
        ] {
            at_most_opt(&mut checks, &format!("{tag}: {name}"), profit, &opt);
        }
        if figures_at_default.is_none() {
            figures_at_default = Some((csip, rspp, s_result.profit.clone()));
        }
    }
    let (csip, rspp, spb_profit) = figures_at_default.expect("at least one order");
    let figures = Figures {
        opt: Some(opt),
        csip: Some(csip),
        rspp: Some(rspp),
        spb: Some(spb_profit),
        ..Figures::default()
    }
    .with_benchmark(&report);
    Ok(Analysis { figures, checks })
}

/// Test activity vectors for the contention-resolution certificate: half of
/// every indicator of a feasible set, a uniform interior point, and the
/// prophet activity of the instance per atom.
pub fn ocrs_test_points(instance: &Instance) -> Result<Vec<Vec<Q>>> {
    let target = item_partition(instance)?.intersect(&buyer_families(instance)?);
    let size = target.size();
    let mut points: Vec<Vec<Q>> = target
        .members()
        .map(|s| {
            (0..size)
                .map(|e| if s & (1 << e) != 0 { half() } else { Q::zero() })
                .collect()
        })
        .collect();
    let spread = frac(1, 2 * size.max(1) as i64);
    points.push(vec![spread; size]);
    let lp = solve_lp(instance)?;
    let ex = ex_ante(instance, &lp.mechanism);
    points.extend(prophet_csip(instance, &ex)?.activity);
    Ok(points)
}

/// Certifies the composed greedy scheme `(½, ¼)`-selectable at each point,
/// both for the activity-pattern definition and against every arrival order.
pub fn ocrs_certificate(instance: &Instance, points: &[Vec<Q>]) -> Result<Analysis> {
    let ocrs = auction_ocrs(instance, half())?;
    let parts = [item_partition(instance)?, buyer_families(instance)?];
    let quarter = frac(1, 4);
    let mut checks = vec![Check::equal(
        "claimed constant",
        ocrs.c.clone(),
        quarter.clone(),
    )];
    for (k, y) in points.iter().enumerate() {
        check_scaled_membership(&parts, y, &half())?;
        let (sub, cert) = certified_subfamily(&ocrs, y);
        let target = ocrs.target();
        let inside = sub.members().all(|s| target.contains(s));
        checks.push(Check::equal(
            format!("point {k}: subfamily inside the constraint"),
            int(inside as i64),
            Q::one(),
        ));
        let report = selectability(&sub, y);
        checks.push(Check::equal(
            format!("point {k}: patterns enumerated"),
            int(report.patterns as i64),
            int(1 << sub.size()),
        ));
        checks.push(Check::at_most(
            format!("point {k}: selectability ≥ 1/4"),
            quarter.clone(),
            cert,
        ));
        let replay = order_replay(&sub, y)?;
        for (e, (ratio, ye)) in replay.iter().zip(y).enumerate() {
            if !ye.is_zero() {
                checks.push(Check::at_most(
                    format!("point {k}: element {e} worst order ≥ 1/4"),
                    quarter.clone(),
                    ratio.clone(),
                ));
            }
        }
    }
    Ok(Analysis {
        figures: Figures::default(),
        checks,
    })
}

/// Equal-revenue example: IP earns exactly 1 and PB/IP grows with `m`.
pub fn example_separation(ms: &[usize], k: u32) -> Result<(Vec<(usize, Q, Q)>, Vec<Check>)> {
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &m in ms {
        let inst = example_1_1(m, k)?;
        let ip = ip_opt_additive(&inst)?.value;
        let pb = pb_opt_additive(&inst)?.value;
        checks.push(Check::equal(
            format!("m = {m}: IP = 1"),
            ip.clone(),
            Q::one(),
        ));
        rows.push((m, ip, pb));
    }
    for w in rows.windows(2) {
        checks.push(Check::below(
            format!("PB/IP at m = {} < m = {}", w[0].0, w[1].0),
            &w[0].2 / &w[0].1,
            &w[1].2 / &w[1].1,
        ));
    }
    Ok((rows, checks))
}

/// One item, one buyer: the LP optimum is the expected positive ironed virtual surplus.
pub fn single_item_exactness(instance: &Instance) -> Result<Analysis> {
    if instance.n() != 1 || instance.m() != 1 {
        return Err(Error::Precondition(
            "single-item exactness needs n = m = 1".into(),
        ));
    }
    let lp = solve_lp(instance)?;
    let d = instance.dist(0, 0);
    let mut closed = Q::zero();
    for atom in instance.atoms() {
        closed += expected_positive_surplus(d, &atom.costs[0]) * &atom.prob;
    }
    let mut checks = vec![Check::equal(
        "OPT = E[(φ̃ - c)⁺]",
        lp.objective.clone(),
        closed.clone(),
    )];
    let spec = construct_csip_from_copies(instance)?;
    let profit = evaluate(instance, &spec)?.profit;
    checks.push(Check::equal(
        "monopoly pricing attains OPT",
        profit.clone(),
        closed,
    ));
    Ok(Analysis {
        figures: Figures {
            opt: Some(lp.objective),
            ip: Some(profit),
            ..Figures::default()
        },
        checks,
    })
}

/// Label used in reports for a check list.
pub fn summarize(checks: &[Check]) -> String {
    let failed = checks.iter().filter(|c| !c.holds()).count();
    format!("{}/{} checks hold", checks.len() - failed, checks.len())
}

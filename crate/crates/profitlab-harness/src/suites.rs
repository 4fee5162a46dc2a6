//! Verification suites: one per acceptance criterion family, each a pure
//! function of (corpus, seed).

use anyhow::{anyhow, Result};
use num_traits::{Signed, Zero};
use profitlab::analysis::{
    benchmark_validity, copies_chain, example_separation, multi_buyer_chain, ocrs_certificate, ocrs_test_points,
    property_suite, single_buyer_bounds, single_item_exactness, Analysis, Figures,
};
use profitlab::benchmark::ex_ante;
use profitlab::check::Check;
use profitlab::lp::solve_lp;
use profitlab::mechanisms::{
    construct_csip_from_copies, construct_rspp_tail, construct_spb_core, evaluate, search_best, Kind, MechanismSpec,
};
use profitlab::model::Instance;
use profitlab::oracles::{brute_posted_price_opt, example_1_1, pb_opt_additive};
use profitlab::rational::{int, max_q};
use profitlab::valuation::Thresholds;
use profitlab::Q;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::generate::{generate_corpus, CorpusParams, FamilyClass};
use crate::io::instance_json;
use crate::montecarlo::{monte_carlo_eval, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Benchmark,
    Additive,
    Constrained,
    Copies,
    Properties,
    MultiBuyer,
    Ocrs,
    Example,
    SingleItem,
    MonteCarlo,
}

/// Monte-Carlo draws per instance.
pub const MC_SAMPLES: usize = 100_000;

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Benchmark,
        Suite::Additive,
        Suite::Constrained,
        Suite::Copies,
        Suite::Properties,
        Suite::MultiBuyer,
        Suite::Ocrs,
        Suite::Example,
        Suite::SingleItem,
        Suite::MonteCarlo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Benchmark => "benchmark",
            Suite::Additive => "additive",
            Suite::Constrained => "constrained",
            Suite::Copies => "copies",
            Suite::Properties => "properties",
            Suite::MultiBuyer => "multi-buyer",
            Suite::Ocrs => "ocrs",
            Suite::Example => "example",
            Suite::SingleItem => "single-item",
            Suite::MonteCarlo => "monte-carlo",
        }
    }

    /// Corpus shape and default size; `None` for the fixed example family.
    pub fn corpus(self) -> Option<(CorpusParams, usize)> {
        let base = CorpusParams::default();
        let single = CorpusParams { n: (1, 1), ..base.clone() };
        Some(match self {
            Suite::Benchmark => (CorpusParams { skewed: true, uneven_buyers: true, ..base.clone() }, 400),
            Suite::Additive => {
                (CorpusParams { m: (1, 3), max_types: 12, families: FamilyClass::Additive, ..single }, 100)
            }
            Suite::Constrained => (
                CorpusParams { m: (2, 3), max_support: 2, max_types: 8, families: FamilyClass::DownwardClosed, ..single },
                100,
            ),
            Suite::Copies => (CorpusParams { m: (1, 3), max_types: 12, ..single }, 100),
            Suite::Properties => (CorpusParams { m: (1, 3), max_types: 27, max_atoms: 3, ..single }, 60),
            Suite::MultiBuyer | Suite::Ocrs => (
                CorpusParams {
                    n: (2, 2),
                    m: (2, 2),
                    max_support: 3,
                    max_types: 9,
                    families: FamilyClass::Matroid,
                    skewed: true,
                    uneven_buyers: true,
                    cost_cap: 2,
                    ..base
                },
                if self == Suite::Ocrs { 20 } else { 200 },
            ),
            Suite::Example => return None,
            Suite::SingleItem => (CorpusParams { m: (1, 1), max_support: 4, max_types: 4, max_atoms: 3, ..single }, 60),
            Suite::MonteCarlo => (CorpusParams { max_support: 2, max_types: 4, ..base }, 20),
        })
    }

    pub fn default_corpus(self, seed: u64) -> Result<Vec<Instance>> {
        match self.corpus() {
            Some((params, count)) if self == Suite::MonteCarlo => {
                // Zero-profit mechanisms would be trivially covered; keep instances that earn something.
                let mut kept = Vec::with_capacity(count);
                for inst in generate_corpus(&params, 10 * count, seed)? {
                    if kept.len() == count {
                        break;
                    }
                    let spec = sampled_spec(&inst, kept.len())?;
                    if evaluate(&inst, &spec)?.profit.is_positive() {
                        kept.push(inst);
                    }
                }
                Ok(kept)
            }
            Some((params, count)) => generate_corpus(&params, count, seed),
            None => Ok(Vec::new()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    pub id: usize,
    pub figures: Figures,
    pub checks: Vec<Check>,
    pub estimate: Option<Estimate>,
}

impl Row {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::holds)
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub rows: Vec<Row>,
    /// Checks about the corpus as a whole (coverage counts, the example family).
    pub corpus_checks: Vec<Check>,
}

impl SuiteReport {
    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.rows.iter().flat_map(|r| &r.checks).chain(&self.corpus_checks)
    }

    pub fn passed(&self) -> bool {
        self.checks().all(Check::holds)
    }

    pub fn failures(&self) -> Vec<(Option<usize>, &Check)> {
        let rows = self.rows.iter().flat_map(|r| r.checks.iter().map(move |c| (Some(r.id), c)));
        rows.chain(self.corpus_checks.iter().map(|c| (None, c))).filter(|(_, c)| !c.holds()).collect()
    }

    /// Largest `OPT / max(simple mechanisms)` seen, for suites that compute both.
    pub fn worst_ratio(&self) -> Option<Q> {
        self.rows
            .iter()
            .filter_map(|r| {
                let f = &r.figures;
                let opt = f.opt.as_ref()?;
                let best = [&f.ip, &f.pp, &f.pb, &f.csip, &f.rspp, &f.spb]
                    .into_iter()
                    .flatten()
                    .fold(Q::zero(), |a, b| max_q(&a, b));
                (!best.is_zero()).then(|| opt / best)
            })
            .max()
    }
}

/// A verification error with the instance that triggered it, ready for replay.
#[derive(Debug)]
pub struct SuiteFailure {
    pub id: usize,
    pub instance_json: String,
    pub error: anyhow::Error,
}

impl std::fmt::Display for SuiteFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "instance {}: {:#}", self.id, self.error)
    }
}

impl std::error::Error for SuiteFailure {}

fn row(id: usize, analysis: Analysis) -> Row {
    Row { id, figures: analysis.figures, checks: analysis.checks, estimate: None }
}

/// Thresholds for the property suite: zero on even ids, seeded support values otherwise.
fn property_thresholds(instance: &Instance, id: usize, seed: u64) -> Thresholds {
    let mut beta = Thresholds::zero(instance);
    if id % 2 == 0 {
        return beta;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    for i in 0..instance.n() {
        for j in 0..instance.m() {
            let support = instance.dist(i, j).support();
            for c in 0..instance.atoms().len() {
                beta.set(i, j, c, support[rng.gen_range(0..support.len())].clone());
            }
        }
    }
    beta
}

/// The mechanism sampled for Monte-Carlo instance `id`.
fn sampled_spec(instance: &Instance, id: usize) -> Result<MechanismSpec> {
    if instance.n() == 1 {
        let kind = [Kind::Ip, Kind::Pp, Kind::Pb][id % 3];
        return Ok(search_best(instance, kind, None)?.spec);
    }
    let lp = solve_lp(instance)?;
    let ex = ex_ante(instance, &lp.mechanism);
    let report = profitlab::benchmark::benchmark_terms(instance, &lp.mechanism, &ex);
    Ok(match id % 3 {
        0 => construct_csip_from_copies(instance)?,
        1 => construct_rspp_tail(instance, &ex, &report.tau)?.spec,
        _ => construct_spb_core(instance, &ex, &report.delta)?,
    })
}

fn analyze(suite: Suite, id: usize, instance: &Instance, seed: u64) -> Result<Row> {
    Ok(match suite {
        Suite::Benchmark => row(id, benchmark_validity(instance)?),
        Suite::Additive | Suite::Constrained => row(id, single_buyer_bounds(instance)?),
        Suite::Copies => row(id, copies_chain(instance)?),
        Suite::Properties => row(id, property_suite(instance, &property_thresholds(instance, id, seed))),
        Suite::MultiBuyer => row(id, multi_buyer_chain(instance)?),
        Suite::Ocrs => row(id, ocrs_certificate(instance, &ocrs_test_points(instance)?)?),
        Suite::SingleItem => row(id, single_item_exactness(instance)?),
        Suite::MonteCarlo => {
            let spec = sampled_spec(instance, id)?;
            let (result, estimate) = monte_carlo_eval(instance, &spec, MC_SAMPLES, seed.wrapping_add(id as u64))?;
            Row { id, figures: Figures::default(), checks: Vec::new(), estimate: Some(estimate) }
            .with_exact(&spec, &result.profit)
        }
        Suite::Example => return Err(anyhow!("the example suite has no corpus")),
    })
}

impl Row {
    fn with_exact(mut self, spec: &MechanismSpec, exact: &Q) -> Self {
        let slot = match spec.kind {
            Kind::Ip => &mut self.figures.ip,
            Kind::Pp => &mut self.figures.pp,
            Kind::Pb => &mut self.figures.pb,
            Kind::Csip => &mut self.figures.csip,
            Kind::Rspp => &mut self.figures.rspp,
            Kind::Spb => &mut self.figures.spb,
        };
        *slot = Some(exact.clone());
        self
    }

    /// The exact profit a Monte-Carlo row estimated.
    pub fn exact_profit(&self) -> Option<&Q> {
        let f = &self.figures;
        [&f.ip, &f.pp, &f.pb, &f.csip, &f.rspp, &f.spb].into_iter().flatten().next()
    }
}

fn example_rows(checks: &mut Vec<Check>) -> Result<Vec<Row>> {
    let (rows, separation) = example_separation(&[2, 4, 8], 6)?;
    checks.extend(separation);
    // The convolution shortcut against full enumeration where the latter is affordable.
    let small = example_1_1(2, 6)?;
    let brute = brute_posted_price_opt(&small, Kind::Pb)?.value;
    checks.push(Check::equal("m = 2: PB convolution = brute force", pb_opt_additive(&small)?.value, brute));
    let d = small.dist(0, 0);
    for p in d.support() {
        checks.push(Check::equal(format!("posted price {p} earns 1"), p * d.prob_at_least(p), int(1)));
    }
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(id, (_, ip, pb))| Row {
            id,
            figures: Figures { ip: Some(ip), pb: Some(pb), ..Figures::default() },
            checks: Vec::new(),
            estimate: None,
        })
        .collect())
}

/// Runs `suite` over `corpus` on the worker pool; rows come back sorted by id.
pub fn run_suite(suite: Suite, corpus: &[Instance], seed: u64) -> Result<SuiteReport, SuiteFailure> {
    let mut corpus_checks = Vec::new();
    let rows = if suite == Suite::Example {
        example_rows(&mut corpus_checks)
            .map_err(|error| SuiteFailure { id: 0, instance_json: String::new(), error })?
    } else {
        let results: Vec<Result<Row, SuiteFailure>> = corpus
            .par_iter()
            .enumerate()
            .map(|(id, inst)| {
                analyze(suite, id, inst, seed).map_err(|error| SuiteFailure {
                    id,
                    instance_json: instance_json(inst),
                    error,
                })
            })
            .collect();
        results.into_iter().collect::<Result<Vec<Row>, SuiteFailure>>()?
    };
    if suite == Suite::MonteCarlo && !rows.is_empty() {
        let covered = rows
            .iter()
            .filter(|r| match (&r.estimate, r.exact_profit()) {
                (Some(e), Some(x)) => e.covers(x),
                _ => false,
            })
            .count();
        // At least nine in ten intervals must cover (18 of 20).
        let needed = (9 * rows.len()).div_ceil(10);
        corpus_checks.push(Check::at_most(
            "99% intervals covering the exact profit",
            int(needed as i64),
            int(covered as i64),
        ));
    }
    Ok(SuiteReport { suite, seed, rows, corpus_checks })
}

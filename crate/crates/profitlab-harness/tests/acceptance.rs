//! One pass/fail line per acceptance criterion, each backed by a full suite
//! run over its default seeded corpus.

use std::process::ExitCode;

use profitlab::check::Check;
use profitlab::rational::int;
use profitlab_harness::suites::{run_suite, Suite, SuiteReport};

const SEED: u64 = 0;

struct Verdict {
    number: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn run(suite: Suite) -> SuiteReport {
    let corpus = suite.default_corpus(SEED).expect("default corpus parameters are valid");
    run_suite(suite, &corpus, SEED).unwrap_or_else(|e| panic!("{} suite errored: {e}", suite.name()))
}

fn tally<'a>(checks: impl IntoIterator<Item = &'a Check>) -> (usize, usize) {
    checks.into_iter().fold((0, 0), |(ok, all), c| (ok + c.holds() as usize, all + 1))
}

/// Every check in the suite holds and the corpus is at least `min_rows` large.
fn whole_suite(number: usize, title: &'static str, report: &SuiteReport, min_rows: usize) -> Verdict {
    let (ok, all) = tally(report.checks());
    let rows = report.rows.len();
    let mut detail = format!("{rows} instances, {ok}/{all} checks hold");
    if let Some(r) = report.worst_ratio() {
        detail += &format!(", worst OPT/best {r}");
    }
    if report.suite == Suite::MonteCarlo {
        for c in &report.corpus_checks {
            detail += &format!(", {} intervals cover (need {})", c.rhs, c.lhs);
        }
    }
    for (id, c) in report.failures().into_iter().take(3) {
        detail += &format!("; failed {id:?} {}: {} vs {}", c.name, c.lhs, c.rhs);
    }
    Verdict { number, title, passed: ok == all && all > 0 && rows >= min_rows, detail }
}

/// The single-buyer bounds without the conversion checks, which belong to their own criterion.
fn single_buyer(number: usize, title: &'static str, report: &SuiteReport, max_ratio: i64) -> Verdict {
    let checks = report.rows.iter().flat_map(|r| &r.checks).filter(|c| !c.name.starts_with("conversion: "));
    let (ok, all) = tally(checks);
    let worst = report.worst_ratio();
    let within = worst.as_ref().map_or(true, |r| *r <= int(max_ratio));
    let detail = format!(
        "{} instances, {ok}/{all} checks hold, worst OPT/max {} (limit {max_ratio})",
        report.rows.len(),
        worst.map_or("n/a".into(), |r| r.to_string())
    );
    Verdict { number, title, passed: ok == all && within && report.rows.len() >= 100, detail }
}

fn conversions(reports: &[&SuiteReport]) -> Verdict {
    let checks = reports.iter().flat_map(|r| r.checks()).filter(|c| c.name.starts_with("conversion: "));
    let (ok, all) = tally(checks);
    Verdict {
        number: 5,
        title: "permit conversion keeps profit",
        passed: ok == all && all > 0,
        detail: format!("{ok}/{all} conversions exact"),
    }
}

fn main() -> ExitCode {
    let benchmark = run(Suite::Benchmark);
    let additive = run(Suite::Additive);
    let constrained = run(Suite::Constrained);
    let copies = run(Suite::Copies);
    let properties = run(Suite::Properties);
    let multi = run(Suite::MultiBuyer);
    let ocrs = run(Suite::Ocrs);
    let example = run(Suite::Example);
    let single_item = run(Suite::SingleItem);
    let monte_carlo = run(Suite::MonteCarlo);

    let verdicts = [
        whole_suite(1, "benchmark validity", &benchmark, 200),
        single_buyer(2, "single-buyer additive", &additive, 6),
        single_buyer(3, "single-buyer constrained-additive", &constrained, 11),
        whole_suite(4, "copies chain", &copies, 1),
        conversions(&[&additive, &constrained]),
        whole_suite(6, "valuation properties", &properties, 50),
        whole_suite(7, "multi-buyer chain", &multi, 50),
        whole_suite(8, "OCRS selectability", &ocrs, 1),
        whole_suite(9, "equal-revenue separation", &example, 3),
        whole_suite(10, "single-item exactness", &single_item, 50),
        whole_suite(11, "Monte-Carlo consistency", &monte_carlo, 20),
    ];
    for v in &verdicts {
        println!(
            "criterion {} ({}): {}, {}",
            v.number,
            v.title,
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if verdicts.iter().all(|v| v.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

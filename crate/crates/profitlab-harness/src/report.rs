//! CSV tables and JSON summaries of suite runs.

use std::path::Path;

use anyhow::{Context, Result};
use profitlab::rational::to_f64;
use profitlab::Q;
use serde::Serialize;

use crate::io::fmt_q;
use crate::montecarlo::Estimate;
use crate::suites::SuiteReport;

pub const CSV_COLUMNS: [&str; 14] = [
    "instance_id",
    "opt_profit",
    "ip",
    "pp",
    "pb",
    "csip",
    "rspp",
    "spb",
    "most_surplus",
    "prophet",
    "less_surplus",
    "tail",
    "core",
    "checks_passed",
];

fn cell(x: &Option<Q>) -> String {
    x.as_ref().map(fmt_q).unwrap_or_default()
}

pub fn write_csv(report: &SuiteReport, out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in &report.rows {
        let f = &r.figures;
        let passed = r.checks.iter().filter(|c| c.holds()).count();
        w.write_record([
            r.id.to_string(),
            cell(&f.opt),
            cell(&f.ip),
            cell(&f.pp),
            cell(&f.pb),
            cell(&f.csip),
            cell(&f.rspp),
            cell(&f.spb),
            cell(&f.most_surplus),
            cell(&f.prophet),
            cell(&f.less_surplus),
            cell(&f.tail),
            cell(&f.core),
            format!("{passed}/{}", r.checks.len()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct FailureEntry {
    pub instance_id: Option<usize>,
    pub check: String,
    pub lhs: String,
    pub rhs: String,
    pub margin: String,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub suite: &'static str,
    pub seed: u64,
    pub instances: usize,
    pub checks: usize,
    pub failed: usize,
    pub passed: bool,
    /// Largest OPT / max(simple mechanism) observed, as "p/q" and as a float.
    pub worst_ratio: Option<(String, f64)>,
    /// Smallest exact margin over all checks, as "p/q".
    pub tightest_margin: Option<String>,
    pub failures: Vec<FailureEntry>,
    pub estimates: Vec<(usize, Estimate)>,
}

pub fn summarize(report: &SuiteReport) -> Summary {
    let failures: Vec<FailureEntry> = report
        .failures()
        .into_iter()
        .map(|(id, c)| FailureEntry {
            instance_id: id,
            check: c.name.clone(),
            lhs: fmt_q(&c.lhs),
            rhs: fmt_q(&c.rhs),
            margin: fmt_q(&c.margin()),
        })
        .collect();
    Summary {
        suite: report.suite.name(),
        seed: report.seed,
        instances: report.rows.len(),
        checks: report.checks().count(),
        failed: failures.len(),
        passed: failures.is_empty(),
        worst_ratio: report.worst_ratio().map(|r| (fmt_q(&r), to_f64(&r))),
        tightest_margin: report.checks().map(|c| c.margin()).min().map(|m| fmt_q(&m)),
        failures,
        estimates: report.rows.iter().filter_map(|r| r.estimate.clone().map(|e| (r.id, e))).collect(),
    }
}

/// Writes `<suite>.csv` and `<suite>.json` into `dir`.
pub fn write_report(report: &SuiteReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = report.suite.name();
    let csv = std::fs::File::create(dir.join(format!("{name}.csv")))?;
    write_csv(report, csv)?;
    let json = serde_json::to_string_pretty(&summarize(report))?;
    std::fs::write(dir.join(format!("{name}.json")), json)?;
    Ok(())
}

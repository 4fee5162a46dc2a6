use std::process::Command;

use profitlab_harness::generate::generate_corpus;
use profitlab_harness::io::{instance_json, read_instance};
use profitlab_harness::report::{summarize, write_csv, write_report, CSV_COLUMNS};
use profitlab_harness::suites::{run_suite, Suite};

#[test]
fn empty_corpus_gives_an_empty_passing_report() {
    for suite in Suite::ALL.into_iter().filter(|&s| s != Suite::Example) {
        let report = run_suite(suite, &[], 0).unwrap();
        assert!(report.rows.is_empty());
        assert!(report.passed());
        assert_eq!(summarize(&report).instances, 0);
    }
}

#[test]
fn reports_have_the_documented_columns() {
    let corpus = Suite::Benchmark.default_corpus(0).unwrap();
    let report = run_suite(Suite::Benchmark, &corpus[..5], 0).unwrap();
    let mut buf = Vec::new();
    write_csv(&report, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(lines.count(), 5);

    let dir = tempfile::tempdir().unwrap();
    write_report(&report, dir.path()).unwrap();
    assert!(dir.path().join("benchmark.csv").exists());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("benchmark.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], serde_json::Value::Bool(true));
}

#[test]
fn saved_instances_replay_identically() {
    let (params, _) = Suite::MultiBuyer.corpus().unwrap();
    let corpus = generate_corpus(&params, 4, 77).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let replayed: Vec<_> = corpus
        .iter()
        .enumerate()
        .map(|(k, inst)| {
            let path = dir.path().join(format!("{k}.json"));
            std::fs::write(&path, instance_json(inst)).unwrap();
            read_instance(&path).unwrap()
        })
        .collect();
    let a = run_suite(Suite::MultiBuyer, &corpus, 77).unwrap();
    let b = run_suite(Suite::MultiBuyer, &replayed, 77).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.figures, y.figures);
        assert_eq!(x.checks, y.checks);
    }
}

#[test]
fn example_suite_reports_three_sizes() {
    let report = run_suite(Suite::Example, &[], 0).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert!(report.passed());
}

#[test]
fn single_buyer_additive_ratio_stays_within_six() {
    let corpus = Suite::Additive.default_corpus(5).unwrap();
    let report = run_suite(Suite::Additive, &corpus[..30], 5).unwrap();
    assert!(report.worst_ratio().unwrap() <= profitlab::rational::int(6));
}

#[test]
fn command_line_generates_runs_and_evaluates() {
    let exe = env!("CARGO_BIN_EXE_profitlab");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let status = Command::new(exe)
        .args(["generate", "--suite", "single-item", "--count", "3", "--seed", "4", "--out"])
        .arg(out)
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(out.join("instances/instance_0002.json").exists());
    assert!(out.join("example_1_1/m8_k6.json").exists());

    let reports = out.join("reports");
    let status = Command::new(exe)
        .args(["run", "--suite", "single-item", "--instance"])
        .arg(out.join("instances"))
        .arg("--out")
        .arg(&reports)
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(reports.join("single-item.csv").exists());

    let eval = Command::new(exe)
        .args(["eval", "--kind", "PB", "--samples", "2000", "--instance"])
        .arg(out.join("instances/instance_0000.json"))
        .arg("--out")
        .arg(out.join("spec.json"))
        .output()
        .unwrap();
    assert!(eval.status.success());
    let text = String::from_utf8(eval.stdout).unwrap();
    assert!(text.contains("profit: ") && text.contains("monte carlo"));

    let replay = Command::new(exe)
        .args(["eval", "--instance"])
        .arg(out.join("instances/instance_0000.json"))
        .arg("--spec")
        .arg(out.join("spec.json"))
        .output()
        .unwrap();
    let replay_text = String::from_utf8(replay.stdout).unwrap();
    let profit_line = |t: &str| t.lines().find(|l| l.starts_with("profit: ")).map(str::to_owned);
    assert_eq!(profit_line(&replay_text), profit_line(&text));

    let missing = Command::new(exe).args(["eval", "--instance", "/nonexistent.json", "--kind", "IP"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

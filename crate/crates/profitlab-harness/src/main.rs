use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use profitlab::mechanisms::{evaluate, incentive_gain, search_best, Kind};
use profitlab::model::Instance;
use profitlab::oracles::example_1_1;
use profitlab_harness::generate::generate_corpus;
use profitlab_harness::io::{fmt_q, instance_json, read_instance, read_spec, spec_json};
use profitlab_harness::montecarlo::sample_profit;
use profitlab_harness::report::{summarize, write_report};
use profitlab_harness::suites::{run_suite, Suite, SuiteReport};

#[derive(Parser)]
#[command(name = "profitlab", version, about = "Exact profit-maximization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random corpus (and the equal-revenue example family) as JSON files.
    Generate {
        #[arg(long, value_enum, default_value = "benchmark")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of instances; defaults to the suite's corpus size.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one suite and write `<suite>.csv` and `<suite>.json`.
    Run {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instance file or directory of instance files; generated from the seed when absent.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Run every suite with its default corpus and print one line per suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Evaluate a mechanism on one instance: from a spec file, or the best of a kind on the price grid.
    Eval {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, conflicts_with = "kind")]
        spec: Option<PathBuf>,
        /// IP, PP, PB, CSIP, RSPP or SPB.
        #[arg(long)]
        kind: Option<String>,
        /// Also estimate the profit from this many samples.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to save the evaluated spec.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_corpus(path: &Path) -> Result<Vec<Instance>> {
    if path.is_file() {
        return Ok(vec![read_instance(path)?]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("listing {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files.iter().map(|p| read_instance(p)).collect()
}

fn corpus_for(suite: Suite, seed: u64, count: Option<usize>) -> Result<Vec<Instance>> {
    match (suite.corpus(), count) {
        (Some((params, _)), Some(count)) => generate_corpus(&params, count, seed),
        _ => suite.default_corpus(seed),
    }
}

/// Runs a suite, writing the failing instance next to the reports if verification errors out.
fn run_and_write(suite: Suite, corpus: &[Instance], seed: u64, out: &Path) -> Result<SuiteReport> {
    match run_suite(suite, corpus, seed) {
        Ok(report) => {
            write_report(&report, out)?;
            Ok(report)
        }
        Err(failure) => {
            std::fs::create_dir_all(out)?;
            let path = out.join(format!("{}_failing_instance_{}.json", suite.name(), failure.id));
            std::fs::write(&path, &failure.instance_json)?;
            bail!("{failure}; instance saved to {}", path.display())
        }
    }
}

fn print_summary(report: &SuiteReport) {
    let s = summarize(report);
    let ratio = s.worst_ratio.map(|(q, f)| format!(", worst OPT/simple {q} ≈ {f:.4}")).unwrap_or_default();
    println!(
        "{:<12} {} instances, {}/{} checks hold{ratio}: {}",
        s.suite,
        s.instances,
        s.checks - s.failed,
        s.checks,
        if s.passed { "PASS" } else { "FAIL" }
    );
    for f in s.failures.iter().take(10) {
        println!("    instance {:?}: {} ({} vs {})", f.instance_id, f.check, f.lhs, f.rhs);
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate { suite, seed, count, out } => {
            let corpus = corpus_for(suite, seed, count)?;
            let dir = out.join("instances");
            std::fs::create_dir_all(&dir)?;
            for (id, inst) in corpus.iter().enumerate() {
                std::fs::write(dir.join(format!("instance_{id:04}.json")), instance_json(inst))?;
            }
            let example_dir = out.join("example_1_1");
            std::fs::create_dir_all(&example_dir)?;
            for m in [2, 4, 8] {
                std::fs::write(example_dir.join(format!("m{m}_k6.json")), instance_json(&example_1_1(m, 6)?))?;
            }
            println!("wrote {} instances to {}", corpus.len(), dir.display());
            Ok(true)
        }
        Command::Run { suite, seed, instance, count, out } => {
            let corpus = match instance {
                Some(path) => load_corpus(&path)?,
                None => corpus_for(suite, seed, count)?,
            };
            let report = run_and_write(suite, &corpus, seed, &out)?;
            print_summary(&report);
            Ok(report.passed())
        }
        Command::Verify { seed, out } => {
            let mut all = true;
            for suite in Suite::ALL {
                let report = run_and_write(suite, &suite.default_corpus(seed)?, seed, &out)?;
                print_summary(&report);
                all &= report.passed();
            }
            Ok(all)
        }
        Command::Eval { instance, spec, kind, samples, seed, out } => {
            let inst = read_instance(&instance)?;
            let spec = match (spec, kind) {
                (Some(path), _) => read_spec(&path, &inst)?,
                (None, Some(k)) => {
                    let kind = Kind::parse(&k).with_context(|| format!("unknown mechanism kind {k:?}"))?;
                    search_best(&inst, kind, None)?.spec
                }
                (None, None) => bail!("pass --spec or --kind"),
            };
            let result = evaluate(&inst, &spec)?;
            println!("mechanism: {}", spec.label);
            println!("profit: {}", fmt_q(&result.profit));
            for i in 0..inst.n() {
                println!("buyer {i}: revenue {}, cost {}", fmt_q(&result.revenue(i)), fmt_q(&result.cost[i]));
            }
            let gain = incentive_gain(&inst, &spec, &result);
            println!("largest gain from imitating another type: {}", fmt_q(&gain));
            if let Some(samples) = samples {
                if samples == 0 {
                    bail!("--samples must be positive");
                }
                let e = sample_profit(&inst, &spec, &result, samples, seed);
                println!("monte carlo ({samples} samples, seed {seed}): {:.6} ± {:.6}", e.mean, e.half_width);
            }
            if let Some(path) = out {
                std::fs::write(&path, spec_json(&spec))?;
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

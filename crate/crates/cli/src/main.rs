use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use oca_core::harness::{gen_subset_sum, run_campaign, FuzzSpec};
use oca_core::oracle::ExplorationBudget;
use oca_core::pessimistic::{decide_pessimistic_reach, PessimisticCertificate};
use oca_core::solver::{
    decide_full, evidence_to_text, parse_evidence, run_to_text, verify_unreachability, RunFile, SolverOptions,
    Verdict,
};
use oca_core::structure::Analysis;
use oca_core::{Configuration, Oca};

#[derive(Parser)]
#[command(name = "oca", version, about = "Reachability for one-counter automata with counter tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Endpoints {
    /// Source configuration, e.g. `q:0`. Defaults to the file's `# src` line.
    #[arg(long)]
    src: Option<String>,
    /// Target configuration. Defaults to the file's `# trg` line.
    #[arg(long)]
    trg: Option<String>,
}

#[derive(Args)]
struct Budget {
    /// Largest counter value explored by fallback searches.
    #[arg(long)]
    budget_values: Option<i64>,
    /// Largest number of configurations explored by a single search.
    #[arg(long)]
    budget_nodes: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Decide reachability and optionally write the run or witness.
    Decide {
        file: PathBuf,
        #[command(flatten)]
        endpoints: Endpoints,
        #[command(flatten)]
        budget: Budget,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Check a run, witness or pessimistic certificate file.
    Verify {
        file: PathBuf,
        evidence: PathBuf,
        #[command(flatten)]
        endpoints: Endpoints,
    },
    /// Print components, positive cycles and chains.
    Analyze { file: PathBuf },
    /// Search for a pessimistic run and optionally write its certificate.
    Pessimistic {
        file: PathBuf,
        #[command(flatten)]
        endpoints: Endpoints,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Print the subset-sum automaton for `target` and `values`.
    GenSubsetSum {
        target: i64,
        values: Vec<i64>,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Compare the solver with the oracle on random instances.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        states: usize,
        #[arg(long, default_value_t = 8)]
        max_update: i64,
        #[arg(long, default_value_t = 20)]
        max_guard: i64,
        #[arg(long, default_value_t = 12)]
        transitions: usize,
        #[arg(long, default_value_t = 0.6)]
        guard_rate: f64,
        #[arg(long, default_value_t = 0.0)]
        equality_rate: f64,
        #[command(flatten)]
        budget: Budget,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

/// Outcome of a command that completed: exit 0 or 1.
enum Answer {
    Yes,
    No,
}

fn read(path: &FsPath) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &FsPath) -> Result<(Oca, String)> {
    let text = read(path)?;
    let oca = Oca::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((oca, text))
}

fn endpoints(oca: &Oca, text: &str, e: &Endpoints) -> Result<(Configuration, Configuration)> {
    let directive = |key: &str| {
        text.lines()
            .find_map(|l| l.trim().strip_prefix('#')?.trim().strip_prefix(key).map(|s| s.trim().to_string()))
    };
    let pick = |flag: &Option<String>, key: &str| -> Result<Configuration> {
        let literal = flag.clone().or_else(|| directive(key)).with_context(|| format!("missing --{key}"))?;
        oca.parse_configuration(&literal).with_context(|| format!("bad --{key} `{literal}`"))
    };
    Ok((pick(&e.src, "src")?, pick(&e.trg, "trg")?))
}

fn options(b: &Budget) -> SolverOptions {
    let mut budget = ExplorationBudget::default();
    if let Some(v) = b.budget_values {
        budget.value_cap = v;
    }
    if let Some(n) = b.budget_nodes {
        budget.node_cap = n;
    }
    SolverOptions { cross_check: false, budget }
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(()),
    }
}

fn verify(file: &FsPath, evidence: &FsPath, e: &Endpoints) -> Result<Answer> {
    let (a, _) = load(file)?;
    let text = read(evidence)?;
    let header = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .context("empty evidence file")?;
    let check_endpoints = |src: Configuration, trg: Configuration| -> Result<()> {
        for (flag, got, key) in [(&e.src, src, "src"), (&e.trg, trg, "trg")] {
            if let Some(lit) = flag {
                let want = a.parse_configuration(lit).with_context(|| format!("bad --{key}"))?;
                if want != got {
                    bail!("--{key} {lit} does not match the evidence file");
                }
            }
        }
        Ok(())
    };
    match header {
        "run" => {
            let rf = RunFile::parse(&a, &text)?;
            check_endpoints(rf.src, rf.trg)?;
            match rf.replay(&a) {
                Ok(run) => {
                    println!("verified: run of length {}", run.len());
                    Ok(Answer::Yes)
                }
                Err(m) => {
                    println!("refuted: {m}");
                    Ok(Answer::No)
                }
            }
        }
        "witness" => {
            let (src, trg, ev) = parse_evidence(&a, &text)?;
            check_endpoints(src, trg)?;
            match verify_unreachability(&a, src, trg, &ev) {
                Ok(()) => {
                    println!("verified: {} certified pairs", ev.queries.len());
                    Ok(Answer::Yes)
                }
                Err(err) => {
                    println!("refuted: {err}");
                    Ok(Answer::No)
                }
            }
        }
        "certificate" => {
            let cert = PessimisticCertificate::parse(&a, &text)?;
            check_endpoints(cert.src, cert.trg)?;
            match cert.verify(&a, cert.src, cert.trg) {
                Ok(run) => {
                    println!("verified: pessimistic run of length {}", run.len());
                    Ok(Answer::Yes)
                }
                Err(r) => {
                    println!("refuted: {r}");
                    Ok(Answer::No)
                }
            }
        }
        other => bail!("unknown evidence header `{other}`"),
    }
}

fn run(cli: Cli) -> Result<Answer> {
    match cli.command {
        Command::Decide { file, endpoints: e, budget, emit } => {
            let (a, text) = load(&file)?;
            let (src, trg) = endpoints(&a, &text, &e)?;
            match decide_full(&a, src, trg, &options(&budget)) {
                Verdict::Reachable(run) => {
                    println!("reachable: run of length {}", run.len());
                    write_out(&emit, &run_to_text(&a, &run))?;
                    Ok(Answer::Yes)
                }
                Verdict::Unreachable(ev) => {
                    println!("unreachable: {} certified pairs", ev.queries.len());
                    write_out(&emit, &evidence_to_text(&a, src, trg, &ev))?;
                    Ok(Answer::No)
                }
                Verdict::ResourceExceeded(r) => bail!("resource exceeded: {r}"),
            }
        }
        Command::Verify { file, evidence, endpoints: e } => verify(&file, &evidence, &e),
        Command::Analyze { file } => {
            let (a, _) = load(&file)?;
            print!("{}", Analysis::new(&a).report());
            Ok(Answer::Yes)
        }
        Command::Pessimistic { file, endpoints: e, emit } => {
            let (a, text) = load(&file)?;
            let (src, trg) = endpoints(&a, &text, &e)?;
            let an = Analysis::new(&a);
            match decide_pessimistic_reach(&an, src, trg) {
                Some(run) => {
                    println!("pessimistic run of length {}", run.len());
                    write_out(&emit, &PessimisticCertificate::from_run(&a, &run).to_text(&a))?;
                    Ok(Answer::Yes)
                }
                None => {
                    println!("no pessimistic run");
                    Ok(Answer::No)
                }
            }
        }
        Command::GenSubsetSum { target, values, emit } => {
            if target < 0 || values.iter().any(|&v| v < 0) {
                bail!("values and target must be nonnegative");
            }
            let text = gen_subset_sum(&values, target).to_string();
            match emit {
                Some(_) => write_out(&emit, &text)?,
                None => print!("{text}"),
            }
            Ok(Answer::Yes)
        }
        Command::Fuzz {
            count,
            seed,
            states,
            max_update,
            max_guard,
            transitions,
            guard_rate,
            equality_rate,
            budget,
            emit,
        } => {
            if !(0.0..=1.0).contains(&guard_rate) || !(0.0..=1.0).contains(&equality_rate) {
                bail!("rates must lie in [0, 1]");
            }
            let spec = FuzzSpec {
                max_states: states,
                max_update,
                max_guard,
                max_transitions: transitions,
                equality_rate,
                guard_rate,
            };
            let start = Instant::now();
            let report = run_campaign(&spec, count, seed, &options(&budget));
            eprintln!("elapsed {:.2?}", start.elapsed());
            let text = report.to_string();
            print!("{text}");
            write_out(&emit, &text)?;
            Ok(if report.disagreements.is_empty() { Answer::Yes } else { Answer::No })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Answer::Yes) => ExitCode::from(0),
        Ok(Answer::No) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

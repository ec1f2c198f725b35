//! Command-line front end.

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process;

use clap::{Parser, Subcommand};

use crate::absorption::{self, ClauseCheck, Phase3Result};
use crate::cdcl::{self, RestartPolicy, SolveStatus, SolverConfig};
use crate::cnf::{parse_dimacs, Cnf, VarSet};
use crate::harness::{self, ParamBudgets};
use crate::lsr;
use crate::sepgen::{self, MinDMode, Ordering};

#[derive(Parser)]
#[command(name = "satlens", version, about = "CDCL solving with learning-trace instrumentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a DIMACS file and print status, stats, and any model.
    Solve {
        cnf: PathBuf,
        /// Restart policy: luby, always, never.
        #[arg(long, default_value = "luby")]
        policy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Conflict limit; exceeding it ends the run as UNKNOWN.
        #[arg(long)]
        limit: Option<u64>,
    },
    /// Solve with dependency tracking, print the backdoor report, and write the
    /// backdoor file (one 1-based variable per line).
    Lsr {
        cnf: PathBuf,
        /// Backdoor file destination; default is the input with extension .bd.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a claimed backdoor by replaying the learnt-clause sequence through
    /// absorption.
    Verify {
        cnf: PathBuf,
        backdoor: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Emit an ordered-family instance as DIMACS.
    GenFo {
        #[arg(long)]
        n: u32,
        /// Ordering: lex or interleaved.
        #[arg(long, default_value = "lex")]
        ordering: String,
    },
    /// Minimum displacement of an ordering over decision trees.
    MinD {
        #[arg(long)]
        n: u32,
        /// Ordering: lex or interleaved.
        #[arg(long, default_value = "lex")]
        ordering: String,
        /// Sample this many random trees instead of exhausting them.
        #[arg(long)]
        sample: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Structural parameters of every .cnf file in a directory, as CSV.
    Params {
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Restart-policy comparison over every .cnf file in a directory. CSV on
    /// stdout, the aggregate table on stderr.
    Lens {
        dir: PathBuf,
        /// Comma-separated policies to compare.
        #[arg(long, default_value = "luby,always,never")]
        policies: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        limit: Option<u64>,
    },
    /// Ridge regression of log solve time on a feature CSV.
    Regress {
        features: PathBuf,
        /// Comma-separated base feature names to expand.
        #[arg(long, value_delimiter = ',', required = true)]
        base: Vec<String>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
}

pub fn cli_main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {}", e);
        process::exit(1);
    }
}

fn run(command: Command) -> Result<(), Box<dyn Error>> {
    match command {
        Command::Solve { cnf, policy, seed, limit } => {
            let f = load_cnf(&cnf)?;
            let cfg = SolverConfig {
                restart_policy: policy_from_name(&policy)?,
                seed,
                conflict_limit: limit,
                ..SolverConfig::default()
            };
            let (out, _) = cdcl::solve(&f, cfg)?;
            for (name, value) in out.stats.as_map() {
                println!("c {} {}", name, value);
            }
            match out.status {
                SolveStatus::Sat => {
                    println!("s SATISFIABLE");
                    let model = out.model.expect("sat outcome carries a model");
                    print_model(&model);
                }
                SolveStatus::Unsat => println!("s UNSATISFIABLE"),
                SolveStatus::Inconclusive | SolveStatus::Limit => println!("s UNKNOWN"),
            }
        }
        Command::Lsr { cnf, out, seed } => {
            let f = load_cnf(&cnf)?;
            let cfg = SolverConfig { seed, ..SolverConfig::default() };
            let (outcome, records) = cdcl::solve(&f, cfg)?;
            let report = lsr::extract_lsr(&outcome, &records)?;
            print!("{}", lsr::render_report(&report));
            let path = out.unwrap_or_else(|| cnf.with_extension("bd"));
            let mut text = String::new();
            for v in report.backdoor.iter() {
                text.push_str(&format!("{}\n", v + 1));
            }
            fs::write(&path, text)?;
            eprintln!("backdoor written to {}", path.display());
        }
        Command::Verify { cnf, backdoor, seed } => {
            let f = load_cnf(&cnf)?;
            let text = fs::read_to_string(&backdoor)?;
            let b = parse_backdoor_text(&text, f.num_vars)?;
            let cfg = SolverConfig { seed, ..SolverConfig::default() };
            let report = absorption::verify_lsr(&f, &b, &cfg)?;
            println!("phase 1: backdoor with {} variables", report.phase1_backdoor.len());
            println!("phase 2: {} recorded clauses in scope", report.phase2_sequence_len);
            let mut already = 0usize;
            let mut replayed = 0usize;
            let mut driven = 0u64;
            for check in &report.checks {
                match check {
                    ClauseCheck::AlreadyAbsorbed => already += 1,
                    ClauseCheck::AbsorbedNow { conflicts } => {
                        replayed += 1;
                        driven += conflicts;
                    }
                    ClauseCheck::NotOneProvable => {}
                }
            }
            println!("  absorbed on arrival: {}", already);
            println!("  absorbed by replay:  {} ({} driven conflicts)", replayed, driven);
            match &report.phase3_result {
                Phase3Result::Pass { status } => {
                    println!("phase 3: completion run finished {}", harness::status_str(*status));
                }
                Phase3Result::Fail { reason, failing_clause } => match failing_clause {
                    Some(i) => println!("phase 3: failed at clause {}: {}", i, reason),
                    None => println!("phase 3: failed: {}", reason),
                },
            }
            if report.passed() {
                println!("verdict: PASS");
            } else {
                println!("verdict: FAIL");
                process::exit(1);
            }
        }
        Command::GenFo { n, ordering } => {
            let o = ordering_from_name(&ordering, n)?;
            print!("{}", sepgen::gen_fo(&o).to_dimacs());
        }
        Command::MinD { n, ordering, sample, seed } => {
            let o = ordering_from_name(&ordering, n)?;
            let mode = match sample {
                Some(k) => MinDMode::Sample { k, seed },
                None => MinDMode::Exhaustive,
            };
            let r = sepgen::min_d_over_trees(&o, &mode)?;
            println!("min d = {} over {} trees", r.value, r.trees_examined);
            let ot = sepgen::ordering_from_tree(&r.witness, n)?;
            let width = n as usize;
            let strings: Vec<String> =
                ot.seq().iter().map(|&a| format!("{:0w$b}", a, w = width)).collect();
            println!("witness tree ordering: {}", strings.join(" "));
        }
        Command::Params { dir, seed } => {
            let corpus = load_dir(&dir)?;
            let rows = harness::run_params(&corpus, ParamBudgets::default(), seed);
            print!("{}", harness::params_csv(&rows));
        }
        Command::Lens { dir, policies, seed, limit } => {
            let corpus = load_dir(&dir)?;
            let selected = parse_policies(&policies)?;
            let rows = harness::run_lens(&corpus, &selected, seed, limit);
            print!("{}", harness::lens_csv(&rows));
            let names: Vec<String> = selected.iter().map(|(n, _)| n.clone()).collect();
            let aggs = harness::lens_aggregate(&rows, &names);
            eprint!("{}", harness::render_lens_table(&aggs));
        }
        Command::Regress { features, base, lambda } => {
            let text = fs::read_to_string(&features)?;
            let rows = harness::parse_features_csv(&text)?;
            let model = harness::ridge_fit(&rows, &base, lambda)?;
            print!("{}", harness::render_model(&model));
        }
    }
    Ok(())
}

fn policy_from_name(name: &str) -> Result<RestartPolicy, String> {
    match name {
        "luby" => Ok(RestartPolicy::Luby { base: 100 }),
        "always" => Ok(RestartPolicy::Always),
        "never" => Ok(RestartPolicy::Never),
        other => Err(format!("unknown restart policy {:?}; use luby, always, or never", other)),
    }
}

fn parse_policies(arg: &str) -> Result<Vec<(String, RestartPolicy)>, String> {
    let mut out = Vec::new();
    for name in arg.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push((name.to_string(), policy_from_name(name)?));
    }
    if out.is_empty() {
        return Err("no policies selected".to_string());
    }
    Ok(out)
}

fn ordering_from_name(name: &str, n: u32) -> Result<Ordering, Box<dyn Error>> {
    match name {
        "lex" => Ok(Ordering::lex(n)?),
        "interleaved" => Ok(Ordering::interleaved(n)?),
        other => Err(format!("unknown ordering {:?}; use lex or interleaved", other).into()),
    }
}

fn load_cnf(path: &Path) -> Result<Cnf, Box<dyn Error>> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {}", path.display(), e))?;
    let parsed = parse_dimacs(&text).map_err(|e| format!("{}: {}", path.display(), e))?;
    Ok(parsed.cnf)
}

fn load_dir(dir: &Path) -> Result<Vec<(String, Cnf)>, Box<dyn Error>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| format!("cannot read {}: {}", dir.display(), e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map_or(false, |ext| ext == "cnf"))
        .collect();
    paths.sort();
    let mut corpus = Vec::with_capacity(paths.len());
    for p in paths {
        let name =
            p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        corpus.push((name, load_cnf(&p)?));
    }
    Ok(corpus)
}

/// Backdoor file format: one 1-based variable index per line; blank lines and
/// lines starting with `c` are skipped.
fn parse_backdoor_text(text: &str, num_vars: usize) -> Result<VarSet, String> {
    let mut vars = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let v: usize = line
            .parse()
            .map_err(|_| format!("backdoor line {}: expected a variable, got {:?}", idx + 1, line))?;
        if v == 0 || v > num_vars {
            return Err(format!(
                "backdoor line {}: variable {} out of range 1..={}",
                idx + 1,
                v,
                num_vars
            ));
        }
        vars.push((v - 1) as u32);
    }
    Ok(VarSet::from_vec(vars))
}

fn print_model(model: &[bool]) {
    let mut line = String::from("v");
    for (i, &value) in model.iter().enumerate() {
        let lit = if value { (i + 1) as i64 } else { -((i + 1) as i64) };
        line.push_str(&format!(" {}", lit));
        if line.len() > 72 {
            println!("{}", line);
            line = String::from("v");
        }
    }
    line.push_str(" 0");
    println!("{}", line);
}

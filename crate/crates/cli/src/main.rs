use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hhl_core::backend::{self, SolverConfig, DEFAULT_TIMEOUT_MS};
use hhl_core::labels::SolverName;
use hhl_core::report::{self, Counts, ErrorRecord, ResultRecord, VcRecord, VcsReport, SCHEMA};
use hhl_core::sim::{self, Budget};
use hhl_core::vcgen::VerificationCondition;

#[derive(Parser)]
#[command(name = "hhl", version, about = "Verify annotated hybrid programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and check verification conditions.
    Verify {
        file: PathBuf,
        /// Print the machine-readable report.
        #[arg(long)]
        json: bool,
        /// Per-VC solver timeout in milliseconds.
        #[arg(long, default_value_t = DEFAULT_TIMEOUT_MS)]
        timeout: u64,
        /// Number of solver processes run at once.
        #[arg(long)]
        jobs: Option<usize>,
        /// List the VCs without running a solver.
        #[arg(long)]
        vcs_only: bool,
        /// Use this solver for every VC, ignoring hints.
        #[arg(long)]
        solver: Option<SolverName>,
    },
    /// Run random simulations and check the postconditions.
    Simulate {
        file: PathBuf,
        #[arg(long, default_value_t = 500)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        max_loop_iters: u32,
        #[arg(long)]
        json: bool,
    },
    /// Pretty-print a program.
    Fmt { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Verify { file, json, timeout, jobs, vcs_only, solver } => {
            verify(&file, json, timeout, jobs, vcs_only, solver)
        }
        Command::Simulate { file, runs, seed, max_loop_iters, json } => {
            simulate(&file, runs, seed, max_loop_iters, json)
        }
        Command::Fmt { file } => fmt(&file),
    };
    ExitCode::from(code)
}

fn read(path: &Path) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        2
    })
}

fn print_error(path: &Path, e: &ErrorRecord) {
    match (e.line, e.col) {
        (Some(l), Some(c)) => eprintln!("{}:{l}:{c}: {}: {}", path.display(), e.kind, e.message),
        _ => eprintln!("{}: {}: {}", path.display(), e.kind, e.message),
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn verify(path: &Path, json: bool, timeout: u64, jobs: Option<usize>, vcs_only: bool, solver: Option<SolverName>) -> u8 {
    let src = match read(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let prepared = match report::prepare(&src) {
        Ok(p) => p,
        Err(e) => {
            if json {
                print_json(&VcsReport::failed(e));
            } else {
                print_error(path, &e);
            }
            return 2;
        }
    };
    let mut vcs = prepared.vcs;
    if let Some(s) = solver {
        vcs.iter_mut().for_each(|vc| vc.solver = s);
    }
    if !json {
        for w in &prepared.warnings {
            eprintln!("warning: {w}");
        }
    }
    if vcs_only {
        if json {
            print_json(&VcsReport::listing(&vcs, prepared.warnings));
        } else {
            print_table(&vcs, None);
            println!("{} VCs", vcs.len());
        }
        return 0;
    }

    let cfg = SolverConfig { timeout_ms: timeout, ..SolverConfig::default() };
    let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let checked = backend::check_all_timed(&vcs, &cfg, jobs);
    let counts = Counts::of(checked.iter().map(|(r, _)| r));
    if json {
        let records = vcs
            .iter()
            .zip(&checked)
            .map(|(vc, (r, t))| VcRecord {
                result: Some(ResultRecord::new(r, Some(t.as_millis() as u64))),
                ..VcRecord::new(vc)
            })
            .collect();
        print_json(&VcsReport {
            schema: SCHEMA,
            vcs: records,
            errors: Vec::new(),
            warnings: prepared.warnings,
            summary: Some(counts.clone()),
        });
    } else {
        let rows: Vec<ResultRecord> =
            checked.iter().map(|(r, t)| ResultRecord::new(r, Some(t.as_millis() as u64))).collect();
        print_table(&vcs, Some(&rows));
        println!("{} VCs, {} proved", counts.total, counts.proved);
    }
    if counts.all_proved() {
        0
    } else {
        1
    }
}

fn print_table(vcs: &[VerificationCondition], results: Option<&[ResultRecord]>) {
    for (i, vc) in vcs.iter().enumerate() {
        let label = if vc.label.is_empty() { "-".to_string() } else { vc.label.to_string() };
        let mut line = format!("{}  {:<16} {:<22} {:<8}", vc.id, label, vc.origin.path.to_string(), vc.solver.as_str());
        if let Some(rows) = results {
            let r = &rows[i];
            line.push_str(&format!(" {:<9} {:>6} ms", r.status, r.time_ms.unwrap_or(0)));
        }
        println!("{line}");
        println!("    {}", vc.formula);
        if let Some(r) = results.map(|rows| &rows[i]) {
            if let Some(m) = &r.model {
                let parts: Vec<String> = m.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                println!("    counterexample: {}", parts.join(", "));
            }
            if let Some(msg) = &r.message {
                println!("    {msg}");
            }
        }
    }
}

fn simulate(path: &Path, runs: usize, seed: u64, max_loop_iters: u32, json: bool) -> u8 {
    let src = match read(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let file = match hhl_core::parser::parse(&src) {
        Ok(f) => f,
        Err(e) => {
            print_error(path, &ErrorRecord::parse(&e, &src));
            return 2;
        }
    };
    let budget = Budget { max_loop_iters, ..Budget::default() };
    let summary = match sim::simulate_many(&file, runs, seed, &budget) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if json {
        print_json(&serde_json::json!({ "schema": SCHEMA, "simulation": &summary }));
    } else {
        println!(
            "{} runs: {} terminated, {} exceeded the budget, {} without a start state, {} violations",
            summary.runs,
            summary.terminated,
            summary.budget_exceeded,
            summary.unsampled,
            summary.violations.len()
        );
        for v in summary.violations.iter().take(5) {
            println!("  run {}: from {:?} to {:?}", v.run, v.initial, v.last);
        }
    }
    if summary.violations.is_empty() {
        0
    } else {
        1
    }
}

fn fmt(path: &Path) -> u8 {
    let src = match read(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    match hhl_core::parser::parse(&src) {
        Ok(f) => {
            print!("{}", hhl_core::parser::print(&f));
            0
        }
        Err(e) => {
            print_error(path, &ErrorRecord::parse(&e, &src));
            2
        }
    }
}

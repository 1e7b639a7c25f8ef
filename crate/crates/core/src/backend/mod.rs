//! Discharging VCs with an external SMT solver.

mod model;
mod smtlib;

pub use model::{parse_decimal, parse_model};
pub use smtlib::{emit_smt, formula_text};

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::expr::{Formula, Rational};
use crate::labels::SolverName;
use crate::vcgen::{CheckResult, VerificationCondition};

pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    /// Path of the z3 executable.
    pub z3_path: String,
    /// Wolfram Engine bridge; the backend is unavailable when unset.
    pub wolfram_path: Option<String>,
    pub timeout_ms: u64,
    pub logic: String,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            z3_path: std::env::var("HHL_Z3").unwrap_or_else(|_| "z3".to_string()),
            wolfram_path: None,
            timeout_ms: DEFAULT_TIMEOUT_MS,
            logic: "NRA".to_string(),
        }
    }
}

/// Checks validity of `f` with the chosen solver.
pub fn check_formula(f: &Formula, solver: SolverName, cfg: &SolverConfig) -> CheckResult {
    match solver {
        SolverName::Z3 => check_z3(f, cfg),
        SolverName::Wolfram => match &cfg.wolfram_path {
            None => CheckResult::SolverError("backend unavailable".to_string()),
            Some(_) => CheckResult::SolverError("wolfram backend is not implemented".to_string()),
        },
    }
}

pub fn check(vc: &VerificationCondition, cfg: &SolverConfig) -> CheckResult {
    check_formula(&vc.formula, vc.solver, cfg)
}

/// Checks every VC with up to `jobs` solver processes at once. Results are
/// in input order.
pub fn check_all(vcs: &[VerificationCondition], cfg: &SolverConfig, jobs: usize) -> Vec<CheckResult> {
    check_all_timed(vcs, cfg, jobs).into_iter().map(|(r, _)| r).collect()
}

/// Like [`check_all`], also reporting the wall-clock time of each check.
pub fn check_all_timed(vcs: &[VerificationCondition], cfg: &SolverConfig, jobs: usize) -> Vec<(CheckResult, Duration)> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<(CheckResult, Duration)>>> = Mutex::new(vec![None; vcs.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(vcs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(vc) = vcs.get(i) else { break };
                let start = Instant::now();
                let r = check(vc, cfg);
                results.lock().expect("results lock")[i] = Some((r, start.elapsed()));
            });
        }
    });
    results.into_inner().expect("results lock").into_iter().map(|r| r.expect("every VC checked")).collect()
}

fn check_z3(f: &Formula, cfg: &SolverConfig) -> CheckResult {
    let mut script = emit_smt(f, &cfg.logic);
    script.push_str("(get-model)\n");
    let secs = cfg.timeout_ms.div_ceil(1000).max(1);
    let child = Command::new(&cfg.z3_path)
        .arg("-in")
        .arg(format!("-T:{secs}"))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn();
    let mut child = match child {
        Ok(c) => c,
        Err(e) => return CheckResult::SolverError(format!("cannot run `{}`: {e}", cfg.z3_path)),
    };
    if let Some(mut stdin) = child.stdin.take() {
        if let Err(e) = stdin.write_all(script.as_bytes()) {
            let _ = child.kill();
            let _ = child.wait();
            return CheckResult::SolverError(format!("writing to solver: {e}"));
        }
    }
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let deadline = Instant::now() + Duration::from_millis(cfg.timeout_ms) + Duration::from_millis(500);
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break Some(status),
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(2)),
            Err(e) => return CheckResult::SolverError(e.to_string()),
        }
    };
    let out = reader.join().unwrap_or_default();
    let Some(status) = status else { return CheckResult::Timeout };
    interpret(f, &out, status.success())
}

fn interpret(f: &Formula, out: &str, exited_ok: bool) -> CheckResult {
    let mut lines = out.lines().map(str::trim).filter(|l| !l.is_empty());
    let first = lines.next().unwrap_or("");
    match first {
        "unsat" => CheckResult::Proved,
        "sat" => {
            let rest: String = out.splitn(2, "sat").nth(1).unwrap_or("").to_string();
            CheckResult::Unproved { model: parse_model(&rest).and_then(|m| confirm_model(f, m)) }
        }
        "unknown" => CheckResult::Unproved { model: None },
        "timeout" => CheckResult::Timeout,
        "" if !exited_ok => CheckResult::SolverError("solver exited without output".to_string()),
        other => CheckResult::SolverError(format!("unexpected solver output: {other}")),
    }
}

/// Keeps the model only if it falsifies `f` under exact evaluation.
/// Variables the solver left unconstrained are set to 0.
pub fn confirm_model(f: &Formula, mut model: BTreeMap<String, Rational>) -> Option<BTreeMap<String, Rational>> {
    if !f.is_quantifier_free() {
        return None;
    }
    let free = f.free_vars();
    model.retain(|k, _| free.contains(k));
    for v in free {
        model.entry(v).or_insert_with(|| Rational::from_integer(0.into()));
    }
    (f.eval(&model) == Some(false)).then_some(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn lowering() {
        let s = emit_smt(&f("x >= 0 -> x + 1 >= 1"), "NRA");
        assert!(s.contains("(assert (not (=> (>= x 0) (>= (+ x 1) 1))))"), "{s}");
        assert!(s.starts_with("(set-logic NRA)\n(declare-fun x () Real)\n"));
        assert_eq!(formula_text(&f("x^3 != -0.5")), "(not (= (* x x x) (- (/ 1 2))))");
        assert_eq!(
            formula_text(&f("exists y z. x*y >= 0 && y*z^2 == 1")),
            "(exists ((y Real) (z Real)) (and (>= (* x y) 0) (= (* y (* z z)) 1)))"
        );
        assert_eq!(
            formula_text(&f("forall t. t > 0 -> (forall 0 <= s < t. s + x < 2)")),
            "(forall ((t Real)) (=> (> t 0) (forall ((s Real)) (=> (and (<= 0 s) (< s t)) (< (+ s x) 2)))))"
        );
        assert_eq!(formula_text(&f("_tick >= 0")), "(>= |_tick| 0)");
    }

    #[test]
    fn emission_is_deterministic() {
        let g = f("y > 0 && x > 0 -> x*y > 0");
        assert_eq!(emit_smt(&g, "NRA"), emit_smt(&g, "NRA"));
        assert!(emit_smt(&g, "NRA").contains("(declare-fun x () Real)\n(declare-fun y () Real)"));
    }

    #[test]
    fn interprets_outputs() {
        let g = f("x >= 0 -> x - 1 >= 1");
        assert_eq!(interpret(&g, "unsat\n", true), CheckResult::Proved);
        match interpret(&g, "sat\n((define-fun x () Real 0.0))\n", true) {
            CheckResult::Unproved { model: Some(m) } => assert_eq!(m["x"], Rational::from_integer(0.into())),
            other => panic!("{other:?}"),
        }
        // a model that does not falsify the formula is dropped
        assert_eq!(interpret(&g, "sat\n((define-fun x () Real 5.0))\n", true), CheckResult::Unproved { model: None });
        assert_eq!(interpret(&g, "timeout\n", true), CheckResult::Timeout);
        assert!(matches!(interpret(&g, "(error \"x\")\n", false), CheckResult::SolverError(_)));
    }

    #[test]
    fn wolfram_is_a_stub() {
        let r = check_formula(&f("x > 0"), SolverName::Wolfram, &SolverConfig::default());
        assert_eq!(r, CheckResult::SolverError("backend unavailable".to_string()));
    }

    #[test]
    fn missing_binary() {
        let cfg = SolverConfig { z3_path: "/nonexistent/z3".to_string(), ..SolverConfig::default() };
        assert!(matches!(check_formula(&f("x > 0"), SolverName::Z3, &cfg), CheckResult::SolverError(_)));
    }

    #[test]
    fn z3_roundtrip() {
        let cfg = SolverConfig::default();
        assert_eq!(check_formula(&f("t >= 0 -> 2 >= 0"), SolverName::Z3, &cfg), CheckResult::Proved);
        match check_formula(&f("x >= 0 -> x - 1 >= 1"), SolverName::Z3, &cfg) {
            CheckResult::Unproved { model: Some(m) } => {
                let x = &m["x"];
                assert!(*x >= Rational::from_integer(0.into()) && *x < Rational::from_integer(2.into()));
            }
            other => panic!("{other:?}"),
        }
    }
}

//! Numeric simulation of annotated programs, used as a falsification oracle
//! for generated VCs.
//!
//! State is `f64` throughout. ODEs are integrated with classical RK4 and stop
//! at the first step leaving the domain, after which the crossing is
//! bisected. Choices, loop counts and nondeterministic assignments are drawn
//! from a seeded ChaCha stream, so a run is a pure function of its inputs.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::expr::{Formula, OdeSystem, RelOp};
use crate::parser::{HoareFile, Node, NodeKind, OdeAnnotation};

pub type State = BTreeMap<String, f64>;

pub const STEP: f64 = 1e-3;
pub const BISECT_TOL: f64 = 1e-9;
pub const POST_SLACK: f64 = 1e-6;
const SAMPLE_RANGE: f64 = 10.0;
const MAX_TRIES: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct Budget {
    /// Loop iteration counts are drawn uniformly from `0..=max_loop_iters`.
    pub max_loop_iters: u32,
    /// Longest time a single ODE may evolve.
    pub max_ode_time: f64,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_loop_iters: 10, max_ode_time: 100.0, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("cannot evaluate {0}")]
    Undefined(String),
}

/// Every variable read or written by the program, its annotations included.
pub fn program_vars(file: &HoareFile) -> BTreeSet<String> {
    fn node(n: &Node, out: &mut BTreeSet<String>) {
        match &n.kind {
            NodeKind::Skip => {}
            NodeKind::Assign { var, expr } => {
                out.insert(var.clone());
                out.extend(expr.vars());
            }
            NodeKind::NondetAssign { var, cond } => {
                out.insert(var.clone());
                out.extend(cond.free_vars());
            }
            NodeKind::Seq(items) | NodeKind::Choice(items) => items.iter().for_each(|i| node(i, out)),
            NodeKind::If { branches, else_branch } => {
                for b in branches {
                    out.extend(b.cond.free_vars());
                    node(&b.body, out);
                }
                if let Some(e) = else_branch {
                    node(e, out);
                }
            }
            NodeKind::Loop { body, invariants } => {
                node(body, out);
                invariants.iter().for_each(|a| out.extend(a.formula.free_vars()));
            }
            NodeKind::Ode(ode) => {
                for (x, e) in &ode.system.0 {
                    out.insert(x.clone());
                    out.extend(e.vars());
                }
                out.extend(ode.domain.free_vars());
                if let OdeAnnotation::Invariants { ghosts, .. } = &ode.annotation {
                    // ghosts are proof devices and never take part in a run
                    for g in ghosts {
                        out.remove(&g.var);
                    }
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    file.pre.iter().chain(&file.post).for_each(|a| out.extend(a.formula.free_vars()));
    node(&file.body, &mut out);
    out
}

pub fn pre_holds(file: &HoareFile, s: &State) -> Option<bool> {
    holds_all(file.pre.iter().map(|a| &a.formula), s, BISECT_TOL)
}

/// Whether every postcondition holds with inequalities relaxed by [`POST_SLACK`].
pub fn post_holds(file: &HoareFile, s: &State) -> Option<bool> {
    holds_all(file.post.iter().map(|a| &a.formula), s, POST_SLACK)
}

fn holds_all<'a>(fs: impl Iterator<Item = &'a Formula>, s: &State, slack: f64) -> Option<bool> {
    let env = |v: &str| s.get(v).copied().unwrap_or(f64::NAN);
    for f in fs {
        if !f.eval_f64(&env, slack)? {
            return Some(false);
        }
    }
    Some(true)
}

/// Draws a state satisfying the preconditions. Variables start uniform in
/// `[-10, 10]`, widened to `[-100, 100]` for the second half of the tries;
/// equality conjuncts linear in some variable are then solved
/// for it so that point preconditions such as `v == 14` can be met.
pub fn sample_pre(file: &HoareFile, rng: &mut impl Rng) -> Option<State> {
    let vars = program_vars(file);
    let mut eqs = Vec::new();
    for a in &file.pre {
        for c in a.formula.conjuncts() {
            if let Formula::Cmp(l, RelOp::Eq, r) = c {
                if let Ok(p) = crate::expr::Term::sub(l.clone(), r.clone()).to_poly() {
                    eqs.push(p);
                }
            }
        }
    }
    for attempt in 0..MAX_TRIES {
        let r = if attempt < MAX_TRIES / 2 { SAMPLE_RANGE } else { 10.0 * SAMPLE_RANGE };
        let mut s: State = vars.iter().map(|v| (v.clone(), rng.gen_range(-r..=r))).collect();
        let mut solved = BTreeSet::new();
        for p in &eqs {
            let pivot = p.vars().into_iter().rev().find(|v| {
                !solved.contains(v) && p.degree_in(v) == 1 && {
                    let coeff = p.derivative(v);
                    coeff.as_constant().is_some()
                }
            });
            let Some(v) = pivot else { continue };
            let c = p.derivative(&v).as_constant().and_then(|c| c.to_f64()).unwrap_or(0.0);
            let rest = p.eval_f64(&|x: &str| if x == v { 0.0 } else { s.get(x).copied().unwrap_or(f64::NAN) });
            s.insert(v.clone(), -rest / c);
            solved.insert(v);
        }
        if pre_holds(file, &s) == Some(true) {
            return Some(s);
        }
    }
    None
}

/// Runs the program from `s0` with choices drawn from `budget.seed`.
pub fn run(file: &HoareFile, s0: &State, budget: &Budget) -> Result<State, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    run_with(file, s0, budget, &mut rng)
}

pub fn run_with(file: &HoareFile, s0: &State, budget: &Budget, rng: &mut impl Rng) -> Result<State, SimError> {
    let mut m = Machine::new(s0);
    m.exec(&file.body, budget, rng)?;
    Ok(m.into_state())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Violation {
    pub run: usize,
    pub initial: State,
    pub last: State,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub runs: usize,
    pub terminated: usize,
    pub budget_exceeded: usize,
    /// Runs for which no precondition-satisfying start state was found.
    pub unsampled: usize,
    pub violations: Vec<Violation>,
}

/// `runs` independent simulations from sampled start states, each checking
/// the postconditions at termination.
pub fn simulate_many(file: &HoareFile, runs: usize, seed: u64, budget: &Budget) -> Result<Summary, SimError> {
    let mut summary = Summary { runs, ..Summary::default() };
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
        let Some(initial) = sample_pre(file, &mut rng) else {
            summary.unsampled += 1;
            continue;
        };
        match run_with(file, &initial, budget, &mut rng) {
            Ok(last) => {
                summary.terminated += 1;
                match post_holds(file, &last) {
                    Some(true) => {}
                    Some(false) => summary.violations.push(Violation { run, initial, last }),
                    None => return Err(SimError::Undefined("postcondition".to_string())),
                }
            }
            Err(SimError::BudgetExceeded(_)) => summary.budget_exceeded += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(summary)
}

/// Right-hand side with variables resolved to state indices.
struct CompiledRhs {
    targets: Vec<usize>,
    terms: Vec<Vec<(f64, Vec<(usize, i32)>)>>,
}

impl CompiledRhs {
    fn eval(&self, vals: &[f64], out: &mut [f64]) {
        for (o, poly) in out.iter_mut().zip(&self.terms) {
            *o = poly.iter().map(|(c, ps)| ps.iter().fold(*c, |acc, (i, e)| acc * vals[*i].powi(*e))).sum();
        }
    }
}

struct Machine {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    vals: Vec<f64>,
}

impl Machine {
    fn new(s0: &State) -> Machine {
        let names: Vec<String> = s0.keys().cloned().collect();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Machine { names, index, vals: s0.values().copied().collect() }
    }

    fn into_state(self) -> State {
        self.names.into_iter().zip(self.vals).collect()
    }

    fn slot(&mut self, v: &str) -> usize {
        if let Some(&i) = self.index.get(v) {
            return i;
        }
        self.names.push(v.to_string());
        self.vals.push(f64::NAN);
        self.index.insert(v.to_string(), self.vals.len() - 1);
        self.vals.len() - 1
    }

    fn test(&self, f: &Formula, vals: &[f64]) -> Result<bool, SimError> {
        let env = |v: &str| self.index.get(v).map_or(f64::NAN, |&i| vals[i]);
        f.eval_f64(&env, 0.0).ok_or_else(|| SimError::Undefined(f.to_string()))
    }

    fn exec(&mut self, n: &Node, budget: &Budget, rng: &mut impl Rng) -> Result<(), SimError> {
        match &n.kind {
            NodeKind::Skip => {}
            NodeKind::Assign { var, expr } => {
                let value = {
                    let env = |v: &str| self.index.get(v).map_or(f64::NAN, |&i| self.vals[i]);
                    expr.eval_f64(&env)
                };
                if !value.is_finite() {
                    return Err(SimError::Undefined(expr.to_string()));
                }
                let i = self.slot(var);
                self.vals[i] = value;
            }
            NodeKind::NondetAssign { var, cond } => {
                let i = self.slot(var);
                let mut trial = self.vals.clone();
                let mut found = false;
                for _ in 0..MAX_TRIES {
                    trial[i] = rng.gen_range(-SAMPLE_RANGE..=SAMPLE_RANGE);
                    if self.test(cond, &trial)? {
                        found = true;
                        break;
                    }
                }
                if !found {
                    return Err(SimError::BudgetExceeded(format!("no value for {var} satisfies {cond}")));
                }
                self.vals = trial;
            }
            NodeKind::Seq(items) => {
                for item in items {
                    self.exec(item, budget, rng)?;
                }
            }
            NodeKind::Choice(items) => {
                let k = rng.gen_range(0..items.len());
                self.exec(&items[k], budget, rng)?;
            }
            NodeKind::If { branches, else_branch } => {
                for b in branches {
                    if self.test(&b.cond, &self.vals)? {
                        return self.exec(&b.body, budget, rng);
                    }
                }
                if let Some(e) = else_branch {
                    self.exec(e, budget, rng)?;
                }
            }
            NodeKind::Loop { body, .. } => {
                let iters = rng.gen_range(0..=budget.max_loop_iters);
                for _ in 0..iters {
                    self.exec(body, budget, rng)?;
                }
            }
            NodeKind::Ode(ode) => self.ode(&ode.system, &ode.domain, budget)?,
        }
        Ok(())
    }

    fn compile(&mut self, sys: &OdeSystem) -> Result<CompiledRhs, SimError> {
        let mut targets = Vec::new();
        let mut terms = Vec::new();
        for (x, e) in &sys.0 {
            targets.push(self.slot(x));
            let p = e.to_poly().map_err(|err| SimError::Undefined(err.to_string()))?;
            let mut compiled = Vec::new();
            for (m, c) in p.terms() {
                let powers = m.powers().iter().map(|(v, k)| (self.slot(v), *k as i32)).collect();
                compiled.push((c.to_f64().unwrap_or(f64::NAN), powers));
            }
            terms.push(compiled);
        }
        Ok(CompiledRhs { targets, terms })
    }

    fn rk4(&self, rhs: &CompiledRhs, vals: &[f64], h: f64) -> Vec<f64> {
        let n = rhs.targets.len();
        let mut k = vec![vec![0.0; n]; 4];
        let mut tmp = vals.to_vec();
        rhs.eval(&tmp, &mut k[0]);
        for stage in 1..4 {
            let w = if stage == 3 { h } else { h / 2.0 };
            let (done, rest) = k.split_at_mut(stage);
            for (j, &i) in rhs.targets.iter().enumerate() {
                tmp[i] = vals[i] + w * done[stage - 1][j];
            }
            rhs.eval(&tmp, &mut rest[0]);
        }
        let mut out = vals.to_vec();
        for (j, &i) in rhs.targets.iter().enumerate() {
            out[i] = vals[i] + h / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]);
        }
        out
    }

    fn ode(&mut self, sys: &OdeSystem, domain: &Formula, budget: &Budget) -> Result<(), SimError> {
        let rhs = self.compile(sys)?;
        if !self.test(domain, &self.vals)? {
            return Ok(());
        }
        let mut elapsed = 0.0;
        loop {
            if elapsed > budget.max_ode_time {
                return Err(SimError::BudgetExceeded(format!("ODE ran past t = {}", budget.max_ode_time)));
            }
            let next = self.rk4(&rhs, &self.vals, STEP);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(SimError::BudgetExceeded("solution diverged".to_string()));
            }
            if self.test(domain, &next)? {
                self.vals = next;
                elapsed += STEP;
                continue;
            }
            let (mut lo, mut hi, mut exit) = (0.0, STEP, next);
            while hi - lo > BISECT_TOL {
                let mid = (lo + hi) / 2.0;
                let s = self.rk4(&rhs, &self.vals, mid);
                if self.test(domain, &s)? {
                    lo = mid;
                } else {
                    hi = mid;
                    exit = s;
                }
            }
            self.vals = exit;
            return Ok(());
        }
    }
}

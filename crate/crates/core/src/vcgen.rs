//! Weakest-precondition style VC generation.
//!
//! `wp` walks the program backwards and returns the pair (pre, vc) for a set
//! of conclusion conditions. Every condition remembers the assertion it was
//! started from, its label and the source spans that contributed to it.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::expr::{boundary, closure, fresh_name, ExprError, Formula, Poly, RelOp, Term};
use crate::labels::{AssertionPath, AssertionRole, BranchAtom, Category, Label, SolverName};
use crate::odesolve::{self, CofactorKind, SolveError};
use crate::parser::{Assertion, Ghost, HoareFile, Node, NodeKind, Ode, OdeAnnotation, OdeInv, OdeRule, Span};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VcError {
    #[error("loop has no invariant annotation")]
    UnannotatedLoop(Span),
    #[error("{1}")]
    UnsupportedDomain(Span, String),
    #[error("ODE has no polynomial solution")]
    SolutionNotPolynomial(Span),
    #[error("solution rule needs an ODE that is linear in its variables")]
    NotLinear(Span),
    #[error("{1}")]
    BadRuleShape(Span, String),
    #[error("ghost `{1}` must be affine in the ghost variables")]
    NonAffineGhost(Span, String),
    #[error("no polynomial cofactor found for `{1}`; give one with {{dbx g}}")]
    CofactorNotFound(Span, String),
    #[error("ghost variable `{1}` is not fresh")]
    GhostNotFresh(Span, String),
    #[error("two different VCs share origin {0} and label `{1}`")]
    LabelCollision(String, String),
}

impl VcError {
    pub fn span(&self) -> Option<Span> {
        match self {
            VcError::UnannotatedLoop(s)
            | VcError::UnsupportedDomain(s, _)
            | VcError::SolutionNotPolynomial(s)
            | VcError::NotLinear(s)
            | VcError::BadRuleShape(s, _)
            | VcError::NonAffineGhost(s, _)
            | VcError::CofactorNotFound(s, _)
            | VcError::GhostNotFresh(s, _) => Some(*s),
            VcError::LabelCollision(..) => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            VcError::UnannotatedLoop(_) => "UnannotatedLoop",
            VcError::UnsupportedDomain(..) => "UnsupportedDomain",
            VcError::SolutionNotPolynomial(_) => "SolutionNotPolynomial",
            VcError::NotLinear(_) => "NotLinear",
            VcError::BadRuleShape(..) => "BadRuleShape",
            VcError::NonAffineGhost(..) => "NonAffineGhost",
            VcError::CofactorNotFound(..) => "CofactorNotFound",
            VcError::GhostNotFresh(..) => "GhostNotFresh",
            VcError::LabelCollision(..) => "LabelCollision",
        }
    }
}

type VResult<T> = Result<T, VcError>;

/// Outcome of checking one VC.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckResult {
    Proved,
    /// Not valid. The model, if any, is a counterexample that was confirmed
    /// by exact evaluation.
    Unproved { model: Option<BTreeMap<String, crate::expr::Rational>> },
    Timeout,
    SolverError(String),
}

impl CheckResult {
    pub fn status(&self) -> &'static str {
        match self {
            CheckResult::Proved => "proved",
            CheckResult::Unproved { .. } => "unproved",
            CheckResult::Timeout => "timeout",
            CheckResult::SolverError(_) => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AssertionRef {
    #[serde(serialize_with = "display_path")]
    pub path: AssertionPath,
    pub kind: &'static str,
    pub text: String,
}

fn display_path<S: serde::Serializer>(p: &AssertionPath, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(p)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationCondition {
    /// 16 hex digits, stable across edits that keep the origin and label.
    pub id: String,
    pub formula: Formula,
    pub origin: AssertionRef,
    pub label: Label,
    pub spans: BTreeSet<Span>,
    pub assumption_spans: BTreeSet<Span>,
    pub solver: SolverName,
    pub result: Option<CheckResult>,
}

/// A condition under construction.
#[derive(Clone, Debug)]
struct Cond {
    formula: Formula,
    origin: AssertionPath,
    category: Category,
    atoms: Vec<BranchAtom>,
    /// Atoms and derived flags stashed when entering enclosing branches.
    saved: Vec<(Vec<BranchAtom>, bool)>,
    /// Whether the condition descends from a conclusion passed into the
    /// innermost enclosing branch (rather than being created inside it).
    derived: bool,
    spans: BTreeSet<Span>,
    assumption_spans: BTreeSet<Span>,
}

impl Cond {
    fn new(formula: Formula, origin: AssertionPath, category: Category, spans: BTreeSet<Span>) -> Cond {
        Cond {
            formula,
            origin,
            category,
            atoms: Vec::new(),
            saved: Vec::new(),
            derived: false,
            spans,
            assumption_spans: BTreeSet::new(),
        }
    }

    fn with_formula(&self, formula: Formula) -> Cond {
        Cond { formula, ..self.clone() }
    }

    fn span(mut self, s: Span) -> Cond {
        self.spans.insert(s);
        self
    }

    fn spans<I: IntoIterator<Item = Span>>(mut self, it: I) -> Cond {
        self.spans.extend(it);
        self
    }

    fn assume<I: IntoIterator<Item = Span> + Clone>(mut self, it: I) -> Cond {
        self.spans.extend(it.clone());
        self.assumption_spans.extend(it);
        self
    }

    fn prefix_atom(mut self, a: BranchAtom) -> Cond {
        self.atoms.insert(0, a);
        self
    }

    fn enter_branch(mut self) -> Cond {
        let atoms = std::mem::take(&mut self.atoms);
        self.saved.push((atoms, self.derived));
        self.derived = true;
        self
    }

    fn leave_branch(mut self, index: u32) -> Cond {
        let inner = std::mem::take(&mut self.atoms);
        self.atoms = vec![BranchAtom::Index(index, inner)];
        if self.derived {
            let (outer, derived) = self.saved.pop().expect("branch stack");
            self.atoms.extend(outer);
            self.derived = derived;
        }
        self
    }

    fn label(&self) -> Label {
        Label::new(self.category, self.atoms.clone())
    }
}

/// `a1 && ... && an -> c`, dropping literal `true` antecedents.
fn implies(ants: impl IntoIterator<Item = Formula>, concl: Formula) -> Formula {
    let ants: Vec<Formula> = ants.into_iter().filter(|a| *a != Formula::True).collect();
    if ants.is_empty() {
        concl
    } else {
        Formula::imp(Formula::conj(ants), concl)
    }
}

struct Gen {
    file_vars: BTreeSet<String>,
}

/// All VCs of an annotated file, sorted by origin path and label.
pub fn generate(file: &HoareFile) -> VResult<Vec<VerificationCondition>> {
    let gen = Gen { file_vars: file.all_vars() };
    let posts: Vec<Cond> = file
        .post
        .iter()
        .enumerate()
        .map(|(i, a)| Cond::new(a.formula.clone(), AssertionPath::post(i), Category::None, BTreeSet::from([a.span])))
        .collect();
    let (pre, vc) = gen.wp(&file.body, posts)?;

    let mut assigned = BTreeSet::new();
    file.body.assigned_vars(&mut assigned);
    let all_pre: Vec<&Assertion> = file.pre.iter().filter(|a| a.formula != Formula::True).collect();
    let stable_pre: Vec<&Assertion> =
        all_pre.iter().copied().filter(|a| a.formula.free_vars().is_disjoint(&assigned)).collect();

    let close = |c: Cond, ants: &[&Assertion]| {
        let formula = implies(ants.iter().map(|a| a.formula.clone()), c.formula.clone());
        c.with_formula(formula).assume(ants.iter().map(|a| a.span).collect::<Vec<_>>())
    };
    let conds: Vec<Cond> =
        pre.into_iter().map(|c| close(c, &all_pre)).chain(vc.into_iter().map(|c| close(c, &stable_pre))).collect();
    finish(file, conds)
}

fn finish(file: &HoareFile, conds: Vec<Cond>) -> VResult<Vec<VerificationCondition>> {
    let mut merged: BTreeMap<(AssertionPath, String), Cond> = BTreeMap::new();
    for c in conds {
        let key = (c.origin.clone(), c.label().to_string());
        match merged.get_mut(&key) {
            Some(existing) if existing.formula == c.formula => {
                existing.spans.extend(c.spans);
                existing.assumption_spans.extend(c.assumption_spans);
            }
            Some(_) => return Err(VcError::LabelCollision(key.0.to_string(), key.1)),
            None => {
                merged.insert(key, c);
            }
        }
    }
    let mut out: Vec<VerificationCondition> = merged
        .into_values()
        .map(|c| {
            let label = c.label();
            let origin = assertion_ref(file, &c.origin);
            VerificationCondition {
                id: vc_id(&c.origin, &label),
                formula: c.formula,
                origin,
                label,
                spans: normalize_spans(c.spans),
                assumption_spans: normalize_spans(c.assumption_spans),
                solver: SolverName::Z3,
                result: None,
            }
        })
        .collect();
    out.sort_by(|a, b| (&a.origin.path, a.label.to_string()).cmp(&(&b.origin.path, b.label.to_string())));
    crate::labels::bind_solvers(file, &mut out);
    Ok(out)
}

/// FNV-1a over `path|label`.
pub fn vc_id(path: &AssertionPath, label: &Label) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in format!("{path}|{label}").bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Drops spans contained in another span of the set.
fn normalize_spans(spans: BTreeSet<Span>) -> BTreeSet<Span> {
    spans.iter().copied().filter(|s| !spans.iter().any(|o| o != s && o.contains(*s))).collect()
}

fn assertion_ref(file: &HoareFile, path: &AssertionPath) -> AssertionRef {
    let text = if path.role == AssertionRole::OdeInvs {
        crate::labels::resolve_node(file, &path.node)
            .and_then(|n| match &n.kind {
                NodeKind::Ode(ode) => match &ode.annotation {
                    OdeAnnotation::Invariants { invariants, .. } => Some(
                        invariants.iter().map(|i| format!("[{}]", i.assertion.formula)).collect::<Vec<_>>().join(" "),
                    ),
                    OdeAnnotation::Solution => None,
                },
                _ => None,
            })
            .unwrap_or_default()
    } else {
        crate::labels::resolve_assertion(file, path).map(|a| a.formula.to_string()).unwrap_or_default()
    };
    AssertionRef { path: path.clone(), kind: path.role.kind(), text }
}

impl Gen {
    fn wp(&self, node: &Node, qs: Vec<Cond>) -> VResult<(Vec<Cond>, Vec<Cond>)> {
        self.wp_at(node, &mut Vec::new(), qs)
    }

    fn wp_at(&self, node: &Node, path: &mut Vec<usize>, qs: Vec<Cond>) -> VResult<(Vec<Cond>, Vec<Cond>)> {
        match &node.kind {
            NodeKind::Skip => Ok((qs.into_iter().map(|q| q.span(node.span)).collect(), Vec::new())),
            NodeKind::Assign { var, expr } => {
                let pre = qs.into_iter().map(|q| q.with_formula(q.formula.substitute(var, expr)).span(node.span)).collect();
                Ok((pre, Vec::new()))
            }
            NodeKind::NondetAssign { var, cond } => {
                let pre = qs
                    .into_iter()
                    .map(|q| {
                        let mut avoid = self.file_vars.clone();
                        avoid.extend(q.formula.all_vars());
                        let y = Term::Var(fresh_name(var, &avoid));
                        let f = Formula::imp(cond.substitute(var, &y), q.formula.substitute(var, &y));
                        q.with_formula(f).span(node.span)
                    })
                    .collect();
                Ok((pre, Vec::new()))
            }
            NodeKind::Seq(items) => {
                let mut cur = qs;
                let mut vcs = Vec::new();
                for (i, item) in items.iter().enumerate().rev() {
                    path.push(i);
                    let (p, v) = self.wp_at(item, path, cur)?;
                    path.pop();
                    cur = p;
                    vcs.extend(v);
                }
                Ok((cur, vcs))
            }
            NodeKind::Choice(items) => {
                let branches: Vec<(Option<&Node>, Formula, Vec<Span>)> =
                    items.iter().map(|n| (Some(n), Formula::True, Vec::new())).collect();
                self.branches(path, &branches, qs)
            }
            NodeKind::If { branches, else_branch } => {
                let mut out = Vec::new();
                for (i, b) in branches.iter().enumerate() {
                    let mut guard: Vec<Formula> = branches[..i].iter().map(|p| Formula::not(p.cond.clone())).collect();
                    guard.push(b.cond.clone());
                    let spans = branches[..=i].iter().map(|p| p.cond_span).collect();
                    out.push((Some(&b.body), Formula::conj(guard), spans));
                }
                let guard = Formula::conj(branches.iter().map(|p| Formula::not(p.cond.clone())));
                let spans = branches.iter().map(|p| p.cond_span).collect();
                out.push((else_branch.as_deref(), guard, spans));
                self.branches(path, &out, qs)
            }
            NodeKind::Loop { body, invariants } => self.wp_loop(node, body, invariants, path, qs),
            NodeKind::Ode(ode) => match &ode.annotation {
                OdeAnnotation::Solution => Ok((self.wp_solution(ode, qs)?, Vec::new())),
                OdeAnnotation::Invariants { ghosts, invariants } => self.wp_ode(ode, ghosts, invariants, path, qs),
            },
        }
    }

    /// Shared case for if-then-else and choice. A missing body is an
    /// implicit `skip`.
    fn branches(
        &self,
        path: &mut Vec<usize>,
        branches: &[(Option<&Node>, Formula, Vec<Span>)],
        qs: Vec<Cond>,
    ) -> VResult<(Vec<Cond>, Vec<Cond>)> {
        let mut pre = Vec::new();
        let mut vcs = Vec::new();
        for (i, (body, guard, guard_spans)) in branches.iter().enumerate() {
            let index = i as u32 + 1;
            let entered: Vec<Cond> = qs.iter().cloned().map(Cond::enter_branch).collect();
            let (p, v) = match body {
                Some(n) => {
                    path.push(i);
                    let r = self.wp_at(n, path, entered)?;
                    path.pop();
                    r
                }
                None => (entered, Vec::new()),
            };
            pre.extend(p.into_iter().map(|c| {
                let f = implies([guard.clone()], c.formula.clone());
                c.with_formula(f).spans(guard_spans.iter().copied()).leave_branch(index)
            }));
            vcs.extend(v.into_iter().map(|c| c.leave_branch(index)));
        }
        Ok((pre, vcs))
    }

    fn wp_loop(
        &self,
        node: &Node,
        body: &Node,
        invariants: &[Assertion],
        path: &mut Vec<usize>,
        qs: Vec<Cond>,
    ) -> VResult<(Vec<Cond>, Vec<Cond>)> {
        if invariants.is_empty() {
            return Err(VcError::UnannotatedLoop(node.span));
        }
        let inv_spans: Vec<Span> = invariants.iter().map(|a| a.span).collect();
        let inv_conj: Vec<Formula> = invariants.iter().map(|a| a.formula.clone()).collect();
        let inv_cond = |i: usize, a: &Assertion, cat| {
            let origin = AssertionPath { node: path.clone(), role: AssertionRole::LoopInv, index: i };
            Cond::new(a.formula.clone(), origin, cat, BTreeSet::from([a.span]))
        };
        let pre: Vec<Cond> = invariants.iter().enumerate().map(|(i, a)| inv_cond(i, a, Category::Init)).collect();
        let maintain: Vec<Cond> =
            invariants.iter().enumerate().map(|(i, a)| inv_cond(i, a, Category::Maintain)).collect();

        path.push(0);
        let (body_pre, body_vc) = self.wp_at(body, path, maintain)?;
        path.pop();

        let mut vcs = body_vc;
        for q in qs {
            let f = implies(inv_conj.clone(), q.formula.clone());
            vcs.push(q.with_formula(f).assume(inv_spans.clone()));
        }
        for p in body_pre {
            let f = implies(inv_conj.clone(), p.formula.clone());
            vcs.push(p.with_formula(f).assume(inv_spans.clone()));
        }
        Ok((pre, vcs))
    }

    fn skip_conds(&self, ode: &Ode, qs: &[Cond]) -> Vec<Cond> {
        qs.iter()
            .map(|q| {
                let f = Formula::imp(Formula::not(ode.domain.clone()), q.formula.clone());
                q.with_formula(f).spans(ode.domain_span).prefix_atom(BranchAtom::Skip)
            })
            .collect()
    }

    fn wp_solution(&self, ode: &Ode, qs: Vec<Cond>) -> VResult<Vec<Cond>> {
        let mut pre = self.skip_conds(ode, &qs);
        let mut avoid = self.file_vars.clone();
        for q in &qs {
            avoid.extend(q.formula.all_vars());
        }
        let name = |base: &str, avoid: &BTreeSet<String>| {
            if avoid.contains(base) {
                fresh_name(base, avoid)
            } else {
                base.to_string()
            }
        };
        let t = name("t", &avoid);
        avoid.insert(t.clone());
        let tau = name("tau", &avoid);
        let sol = odesolve::solve(&ode.system, &t).map_err(|e| match e {
            SolveError::NotLinear => VcError::NotLinear(ode.head_span),
            _ => VcError::SolutionNotPolynomial(ode.head_span),
        })?;
        let at = |time: &str| -> BTreeMap<String, Term> {
            let shift = BTreeMap::from([(t.clone(), Poly::var(time))]);
            sol.iter().map(|(x, u)| (x.clone(), u.substitute(&shift).to_term())).collect()
        };
        let (u_t, u_tau) = (at(&t), at(&tau));
        let inside = Formula::BoundedForall {
            var: tau.clone(),
            lower: Term::int(0),
            upper: Term::Var(t.clone()),
            body: Box::new(ode.domain.substitute_many(&u_tau)),
        };
        let exits = Formula::and(inside, Formula::not(ode.domain.substitute_many(&u_t)));
        for q in qs {
            let body = Formula::imp(
                Formula::cmp(Term::Var(t.clone()), RelOp::Gt, Term::int(0)),
                Formula::imp(exits.clone(), q.formula.substitute_many(&u_t)),
            );
            let f = Formula::imp(ode.domain.clone(), Formula::Forall(vec![t.clone()], Box::new(body)));
            pre.push(q.with_formula(f).span(ode.head_span).prefix_atom(BranchAtom::Exec));
        }
        Ok(pre)
    }

    fn wp_ode(
        &self,
        ode: &Ode,
        ghosts: &[Ghost],
        invariants: &[OdeInv],
        path: &[usize],
        qs: Vec<Cond>,
    ) -> VResult<(Vec<Cond>, Vec<Cond>)> {
        self.check_ghosts(ode, ghosts, &qs)?;
        let default_inv;
        let invs: &[OdeInv] = if invariants.is_empty() {
            default_inv = [OdeInv {
                assertion: Assertion {
                    formula: Formula::True,
                    span: ode.head_span,
                    hints: Vec::new(),
                    hints_span: None,
                    insert_at: 0,
                },
                rule: OdeRule::DI,
            }];
            &default_inv
        } else {
            invariants
        };
        let explicit = !invariants.is_empty();
        let inv_path = |i: usize| AssertionPath { node: path.to_vec(), role: AssertionRole::OdeInv, index: i };
        let inv_spans: Vec<Span> = if explicit { invs.iter().map(|i| i.assertion.span).collect() } else { Vec::new() };
        let ghost_spans: Vec<Span> = ghosts.iter().map(|g| g.span).collect();
        let inv_formulas: Vec<Formula> =
            invs.iter().map(|i| i.assertion.formula.clone()).filter(|f| *f != Formula::True).collect();
        let dom = |e: ExprError| VcError::UnsupportedDomain(ode.domain_span.unwrap_or(ode.head_span), e.to_string());
        let closed = closure(&ode.domain).map_err(dom)?;
        let edge = boundary(&ode.domain).map_err(dom)?;

        let mut pre = self.skip_conds(ode, &qs);
        if ghosts.is_empty() {
            for (j, inv) in invs.iter().enumerate() {
                if inv.assertion.formula == Formula::True {
                    continue;
                }
                let f = implies([ode.domain.clone()], inv.assertion.formula.clone());
                let c = Cond::new(f, inv_path(j), Category::Init, BTreeSet::from([inv.assertion.span]));
                pre.push(c.spans(ode.domain_span));
            }
        } else if !inv_formulas.is_empty() {
            let vars = ghosts.iter().map(|g| g.var.clone()).collect();
            let f = implies([ode.domain.clone()], Formula::Exists(vars, Box::new(Formula::conj(inv_formulas.clone()))));
            let origin = AssertionPath { node: path.to_vec(), role: AssertionRole::OdeInvs, index: 0 };
            let c = Cond::new(f, origin, Category::InitAll, inv_spans.iter().copied().collect());
            pre.push(c.spans(ghost_spans.iter().copied()).spans(ode.domain_span));
        }

        let mut vcs = Vec::new();
        let only_false = invs.len() == 1 && invs[0].assertion.formula == Formula::False;
        if !only_false {
            for q in &qs {
                let mut ants = inv_formulas.clone();
                ants.push(edge.clone());
                let f = Formula::imp(Formula::conj(ants), q.formula.clone());
                let c = q
                    .with_formula(f)
                    .assume(inv_spans.clone())
                    .spans(ghost_spans.iter().copied())
                    .spans(ode.domain_span)
                    .prefix_atom(BranchAtom::Exec);
                vcs.push(c);
            }
        }

        let extra: Vec<(String, Term)> = ghosts.iter().map(|g| (g.var.clone(), g.rhs.clone())).collect();
        let sys = ode.system.extended(&extra);
        for (j, inv) in invs.iter().enumerate() {
            let Some(rule_vc) = rule_condition(&sys, &closed, inv)? else { continue };
            let earlier: Vec<Formula> = invs[..j].iter().map(|i| i.assertion.formula.clone()).collect();
            let f = implies(earlier, rule_vc);
            let mut c = Cond::new(f, inv_path(j), Category::Maintain, BTreeSet::from([ode.head_span]));
            c = c.assume(inv_spans[..j].to_vec()).span(inv.assertion.span).spans(ghost_spans.iter().copied());
            vcs.push(c);
        }
        Ok((pre, vcs))
    }

    fn check_ghosts(&self, ode: &Ode, ghosts: &[Ghost], qs: &[Cond]) -> VResult<()> {
        let ghost_vars: BTreeSet<String> = ghosts.iter().map(|g| g.var.clone()).collect();
        let mut taken = ode.system.var_set();
        for (_, e) in &ode.system.0 {
            taken.extend(e.vars());
        }
        taken.extend(ode.domain.all_vars());
        for q in qs {
            taken.extend(q.formula.free_vars());
        }
        let mut seen = BTreeSet::new();
        for g in ghosts {
            if taken.contains(&g.var) || !seen.insert(g.var.clone()) {
                return Err(VcError::GhostNotFresh(g.span, g.var.clone()));
            }
            let rhs = g.rhs.to_poly().map_err(|e| VcError::NonAffineGhost(g.span, e.to_string()))?;
            let affine = rhs.terms().all(|(m, _)| {
                m.powers().iter().filter(|(v, _)| ghost_vars.contains(v)).map(|(_, k)| k).sum::<u32>() <= 1
            });
            if !affine {
                return Err(VcError::NonAffineGhost(g.span, g.var.clone()));
            }
        }
        Ok(())
    }
}

/// The premise of the rule annotated on one ODE invariant, or `None` for the
/// trivial invariants `true` and `false`.
fn rule_condition(
    sys: &crate::expr::OdeSystem,
    closed_domain: &Formula,
    inv: &OdeInv,
) -> VResult<Option<Formula>> {
    let span = inv.assertion.span;
    let (a, op, b) = match &inv.assertion.formula {
        Formula::True | Formula::False => return Ok(None),
        Formula::Cmp(a, op, b) => (a, *op, b),
        other => {
            return Err(VcError::BadRuleShape(span, format!("invariant `{other}` must be a single comparison for this rule")))
        }
    };
    let f = match op {
        RelOp::Lt | RelOp::Le => Term::sub(b.clone(), a.clone()),
        _ => Term::sub(a.clone(), b.clone()),
    };
    let bad = |e: ExprError| VcError::BadRuleShape(span, e.to_string());
    let fdot = sys.lie_derivative(&f).map_err(bad)?;
    let zero = Term::int(0);
    let premise = match &inv.rule {
        OdeRule::DI => match op {
            RelOp::Eq | RelOp::Ne => Formula::cmp(fdot.to_term(), RelOp::Eq, zero),
            _ => Formula::cmp(fdot.to_term(), RelOp::Ge, zero),
        },
        OdeRule::Dbx(g) => {
            let kind = match op {
                RelOp::Eq => CofactorKind::Eq,
                RelOp::Ne => {
                    return Err(VcError::BadRuleShape(span, "dbx needs an equation or inequality, not `!=`".to_string()))
                }
                _ => CofactorKind::Ineq,
            };
            let g = match g {
                Some(g) => g.clone(),
                None => {
                    let fp = f.to_poly().map_err(bad)?;
                    odesolve::synthesize_cofactor(&fp, &fdot, kind)
                        .ok_or_else(|| VcError::CofactorNotFound(span, inv.assertion.formula.to_string()))?
                        .to_term()
                }
            };
            let rel = if kind == CofactorKind::Eq { RelOp::Eq } else { RelOp::Ge };
            Formula::cmp(fdot.to_term(), rel, Term::mul(g, f))
        }
        OdeRule::Bc => {
            if matches!(op, RelOp::Eq | RelOp::Ne) {
                return Err(VcError::BadRuleShape(span, "bc needs an inequality".to_string()));
            }
            let on_edge = Formula::cmp(f, RelOp::Eq, zero.clone());
            let g = Formula::cmp(fdot.to_term(), RelOp::Gt, zero);
            return Ok(Some(implies([Formula::conj([closed_domain.clone(), on_edge].into_iter().filter(|x| *x != Formula::True))], g)));
        }
    };
    Ok(Some(implies([closed_domain.clone()], premise)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse, parse_formula};

    fn gen(src: &str) -> Vec<VerificationCondition> {
        generate(&parse(src).unwrap()).unwrap()
    }

    fn table(vcs: &[VerificationCondition]) -> Vec<(String, String, String)> {
        vcs.iter().map(|v| (v.origin.path.to_string(), v.label.to_string(), v.formula.to_string())).collect()
    }

    fn has(vcs: &[VerificationCondition], label: &str, formula: &str) -> bool {
        let f = parse_formula(formula).unwrap();
        vcs.iter().any(|v| v.label.to_string() == label && v.formula.equiv_canonical(&f))
    }

    #[test]
    fn loop_example() {
        let vcs = gen("pre [x <= 0]; x := -x; { x := x + 1; ++ x := x + 2; }* invariant [x >= 0]; x := x + 1; post [x >= 1];");
        assert_eq!(vcs.len(), 4, "{:#?}", table(&vcs));
        assert!(has(&vcs, "init", "x <= 0 -> -x >= 0"));
        assert!(has(&vcs, "", "x >= 0 -> x + 1 >= 1"));
        assert!(has(&vcs, "maintain 1", "x >= 0 -> x + 1 >= 0"));
        assert!(has(&vcs, "maintain 2", "x >= 0 -> x + 2 >= 0"));
    }

    #[test]
    fn nondet_and_ode() {
        let vcs = gen("pre [x >= 0]; x := x + 1; t := *(t >= 0); {t_dot = -1, x_dot = 2 & t > 0} invariant [x >= 1]; post [x >= 1];");
        assert_eq!(vcs.len(), 4, "{:#?}", table(&vcs));
        assert!(has(&vcs, "init", "x >= 0 -> t1 >= 0 -> t1 > 0 -> x + 1 >= 1"));
        assert!(has(&vcs, "skip", "x >= 0 -> t1 >= 0 -> !(t1 > 0) -> x + 1 >= 1"));
        assert!(has(&vcs, "exec", "x >= 1 && t == 0 -> x >= 1"));
        assert!(has(&vcs, "maintain", "t >= 0 -> 2 >= 0"));
    }

    #[test]
    fn nested_labels() {
        let vcs = gen("pre [true]; if (x < 1) { x := x + 1; ++ x := x + 2; } else { skip; } post [x >= 1];");
        let labels: Vec<String> = vcs.iter().map(|v| v.label.to_string()).collect();
        assert_eq!(labels, vec!["1(1)", "1(2)", "2"]);
    }

    #[test]
    fn unannotated_loop() {
        let e = generate(&parse("pre [true]; { x := 1; }*; post [true];").unwrap()).unwrap_err();
        assert!(matches!(e, VcError::UnannotatedLoop(_)));
    }

    #[test]
    fn ghost_checks() {
        let e = generate(&parse("pre [x > 0]; {x_dot = x & x < 2} invariant ghost y (y_dot = y^2) [x*y > 0]; post [x > 0];").unwrap())
            .unwrap_err();
        assert!(matches!(e, VcError::NonAffineGhost(..)));
        let e = generate(&parse("pre [x > 0]; {x_dot = x & x < 2} invariant ghost x (x_dot = 1) [x > 0]; post [x > 0];").unwrap())
            .unwrap_err();
        assert!(matches!(e, VcError::GhostNotFresh(..)));
    }

    #[test]
    fn ids_are_stable() {
        let a = gen("pre [x <= 0]; x := -x; { x := x + 1; }* invariant [x >= 0]; post [x >= 0];");
        let b = gen("pre [x <= 0]; x := -2*x; { x := x + 1; }* invariant [x >= 0]; post [x >= 0];");
        assert_eq!(a.iter().map(|v| &v.id).collect::<Vec<_>>(), b.iter().map(|v| &v.id).collect::<Vec<_>>());
        let init = |v: &[VerificationCondition]| v.iter().find(|x| x.label.to_string() == "init").unwrap().formula.clone();
        assert_ne!(init(&a), init(&b));
    }
}

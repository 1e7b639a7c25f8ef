use std::collections::BTreeSet;

use serde::Serialize;

use crate::expr::{Formula, OdeSystem, Term};
use crate::labels::{Label, SolverName};

/// Byte range `[start, end)` in the source text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }

    pub fn contains(self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn slice(self, src: &str) -> &str {
        &src[self.start..self.end]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hint {
    pub label: Label,
    pub solver: SolverName,
}

/// A bracketed assertion `[φ]` with its optional `{{...}}` hint block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assertion {
    pub formula: Formula,
    /// Covers the brackets.
    pub span: Span,
    pub hints: Vec<Hint>,
    pub hints_span: Option<Span>,
    /// Byte offset where a new hint block would be inserted.
    pub insert_at: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoareFile {
    pub pre: Vec<Assertion>,
    pub body: Node,
    pub post: Vec<Assertion>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IfBranch {
    pub cond: Formula,
    pub cond_span: Span,
    pub body: Node,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Skip,
    Assign { var: String, expr: Term },
    NondetAssign { var: String, cond: Formula },
    Seq(Vec<Node>),
    If { branches: Vec<IfBranch>, else_branch: Option<Box<Node>> },
    Choice(Vec<Node>),
    Loop { body: Box<Node>, invariants: Vec<Assertion> },
    Ode(Box<Ode>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ghost {
    pub var: String,
    pub rhs: Term,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OdeRule {
    DI,
    Dbx(Option<Term>),
    Bc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OdeInv {
    pub assertion: Assertion,
    pub rule: OdeRule,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OdeAnnotation {
    Invariants { ghosts: Vec<Ghost>, invariants: Vec<OdeInv> },
    Solution,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ode {
    pub system: OdeSystem,
    /// `true` when no `&` clause is written.
    pub domain: Formula,
    pub domain_span: Option<Span>,
    /// The braces `{x_dot = e & D}`.
    pub head_span: Span,
    pub annotation: OdeAnnotation,
}

impl Assertion {
    fn strip(&mut self) {
        self.span = Span::default();
        self.hints_span = None;
        self.insert_at = 0;
    }
}

impl Node {
    fn strip(&mut self) {
        self.span = Span::default();
        match &mut self.kind {
            NodeKind::Skip | NodeKind::Assign { .. } | NodeKind::NondetAssign { .. } => {}
            NodeKind::Seq(items) | NodeKind::Choice(items) => items.iter_mut().for_each(Node::strip),
            NodeKind::If { branches, else_branch } => {
                for b in branches {
                    b.cond_span = Span::default();
                    b.body.strip();
                }
                if let Some(e) = else_branch {
                    e.strip();
                }
            }
            NodeKind::Loop { body, invariants } => {
                body.strip();
                invariants.iter_mut().for_each(Assertion::strip);
            }
            NodeKind::Ode(ode) => {
                ode.domain_span = None;
                ode.head_span = Span::default();
                if let OdeAnnotation::Invariants { ghosts, invariants } = &mut ode.annotation {
                    ghosts.iter_mut().for_each(|g| g.span = Span::default());
                    invariants.iter_mut().for_each(|i| i.assertion.strip());
                }
            }
        }
    }

    /// Variables assigned, nondeterministically chosen, evolved or used as
    /// ghosts anywhere in the node.
    pub fn assigned_vars(&self, out: &mut BTreeSet<String>) {
        match &self.kind {
            NodeKind::Skip => {}
            NodeKind::Assign { var, .. } | NodeKind::NondetAssign { var, .. } => {
                out.insert(var.clone());
            }
            NodeKind::Seq(items) | NodeKind::Choice(items) => items.iter().for_each(|n| n.assigned_vars(out)),
            NodeKind::If { branches, else_branch } => {
                branches.iter().for_each(|b| b.body.assigned_vars(out));
                if let Some(e) = else_branch {
                    e.assigned_vars(out);
                }
            }
            NodeKind::Loop { body, .. } => body.assigned_vars(out),
            NodeKind::Ode(ode) => {
                out.extend(ode.system.var_set());
                if let OdeAnnotation::Invariants { ghosts, .. } = &ode.annotation {
                    out.extend(ghosts.iter().map(|g| g.var.clone()));
                }
            }
        }
    }

    /// Every variable name occurring in the node, annotations included.
    pub fn all_vars(&self, out: &mut BTreeSet<String>) {
        match &self.kind {
            NodeKind::Skip => {}
            NodeKind::Assign { var, expr } => {
                out.insert(var.clone());
                out.extend(expr.vars());
            }
            NodeKind::NondetAssign { var, cond } => {
                out.insert(var.clone());
                out.extend(cond.all_vars());
            }
            NodeKind::Seq(items) | NodeKind::Choice(items) => items.iter().for_each(|n| n.all_vars(out)),
            NodeKind::If { branches, else_branch } => {
                for b in branches {
                    out.extend(b.cond.all_vars());
                    b.body.all_vars(out);
                }
                if let Some(e) = else_branch {
                    e.all_vars(out);
                }
            }
            NodeKind::Loop { body, invariants } => {
                body.all_vars(out);
                invariants.iter().for_each(|a| out.extend(a.formula.all_vars()));
            }
            NodeKind::Ode(ode) => {
                for (v, e) in &ode.system.0 {
                    out.insert(v.clone());
                    out.extend(e.vars());
                }
                out.extend(ode.domain.all_vars());
                if let OdeAnnotation::Invariants { ghosts, invariants } = &ode.annotation {
                    for g in ghosts {
                        out.insert(g.var.clone());
                        out.extend(g.rhs.vars());
                    }
                    for i in invariants {
                        out.extend(i.assertion.formula.all_vars());
                        if let OdeRule::Dbx(Some(g)) = &i.rule {
                            out.extend(g.vars());
                        }
                    }
                }
            }
        }
    }
}

impl HoareFile {
    /// A copy with every span and offset zeroed, for structural comparison.
    pub fn without_spans(&self) -> HoareFile {
        let mut f = self.clone();
        f.pre.iter_mut().for_each(Assertion::strip);
        f.post.iter_mut().for_each(Assertion::strip);
        f.body.strip();
        f
    }

    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in self.pre.iter().chain(&self.post) {
            out.extend(a.formula.all_vars());
        }
        self.body.all_vars(&mut out);
        out
    }
}

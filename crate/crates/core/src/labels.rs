//! VC labels, assertion paths and solver-choice persistence.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::parser::{Assertion, HoareFile, Node, NodeKind, OdeAnnotation};
use crate::vcgen::VerificationCondition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Category {
    #[default]
    None,
    Init,
    Maintain,
    InitAll,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::None => "",
            Category::Init => "init",
            Category::Maintain => "maintain",
            Category::InitAll => "init_all",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BranchAtom {
    Index(u32, Vec<BranchAtom>),
    Skip,
    Exec,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Label {
    pub category: Category,
    pub branch: Vec<BranchAtom>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid label `{0}`")]
pub struct LabelParseError(pub String);

fn render_branch(atoms: &[BranchAtom], out: &mut String) {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            out.push('.');
        }
        match a {
            BranchAtom::Skip => out.push_str("skip"),
            BranchAtom::Exec => out.push_str("exec"),
            BranchAtom::Index(n, inner) => {
                out.push_str(&n.to_string());
                if !inner.is_empty() {
                    out.push('(');
                    render_branch(inner, out);
                    out.push(')');
                }
            }
        }
    }
}

impl Label {
    pub fn new(category: Category, branch: Vec<BranchAtom>) -> Label {
        Label { category, branch }
    }

    pub fn is_empty(&self) -> bool {
        self.category == Category::None && self.branch.is_empty()
    }

    /// Rendered form used in hint blocks, where the empty label is `_`.
    pub fn hint_text(&self) -> String {
        if self.is_empty() {
            "_".to_string()
        } else {
            self.to_string()
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut branch = String::new();
        render_branch(&self.branch, &mut branch);
        match (self.category.as_str(), branch.as_str()) {
            ("", b) => f.write_str(b),
            (c, "") => f.write_str(c),
            (c, b) => write!(f, "{c} {b}"),
        }
    }
}

struct BranchParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl BranchParser<'_> {
    fn list(&mut self) -> Option<Vec<BranchAtom>> {
        let mut out = vec![self.atom()?];
        while self.s.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            out.push(self.atom()?);
        }
        Some(out)
    }

    fn atom(&mut self) -> Option<BranchAtom> {
        let rest = &self.s[self.pos..];
        for (word, atom) in [(&b"skip"[..], BranchAtom::Skip), (&b"exec"[..], BranchAtom::Exec)] {
            if rest.starts_with(word) {
                self.pos += word.len();
                return Some(atom);
            }
        }
        let digits = rest.iter().take_while(|c| c.is_ascii_digit()).count();
        if digits == 0 {
            return None;
        }
        let n: u32 = std::str::from_utf8(&rest[..digits]).ok()?.parse().ok()?;
        if n == 0 {
            return None;
        }
        self.pos += digits;
        let mut inner = Vec::new();
        if self.s.get(self.pos) == Some(&b'(') {
            self.pos += 1;
            inner = self.list()?;
            if self.s.get(self.pos) != Some(&b')') {
                return None;
            }
            self.pos += 1;
        }
        Some(BranchAtom::Index(n, inner))
    }
}

impl FromStr for Label {
    type Err = LabelParseError;

    /// Accepts the rendered form; `_` and the empty string denote the empty label.
    fn from_str(s: &str) -> Result<Label, LabelParseError> {
        let err = || LabelParseError(s.to_string());
        let t = s.trim();
        if t.is_empty() || t == "_" {
            return Ok(Label::default());
        }
        let (category, rest) = [Category::InitAll, Category::Init, Category::Maintain]
            .into_iter()
            .find_map(|c| {
                let rest = t.strip_prefix(c.as_str())?;
                if rest.is_empty() {
                    Some((c, ""))
                } else {
                    rest.strip_prefix(' ').map(|r| (c, r))
                }
            })
            .unwrap_or((Category::None, t));
        if rest.is_empty() {
            return Ok(Label::new(category, Vec::new()));
        }
        let mut p = BranchParser { s: rest.as_bytes(), pos: 0 };
        let branch = p.list().ok_or_else(err)?;
        if p.pos != rest.len() {
            return Err(err());
        }
        Ok(Label::new(category, branch))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverName {
    #[default]
    Z3,
    Wolfram,
}

impl SolverName {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverName::Z3 => "z3",
            SolverName::Wolfram => "wolfram",
        }
    }
}

impl fmt::Display for SolverName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "z3" => Ok(SolverName::Z3),
            "wolfram" => Ok(SolverName::Wolfram),
            other => Err(format!("unknown solver `{other}`")),
        }
    }
}

/// Kind of assertion a VC concludes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AssertionRole {
    Post,
    LoopInv,
    OdeInv,
    /// All invariants of one ODE jointly (the ghost initialization VC).
    OdeInvs,
}

impl AssertionRole {
    pub fn kind(self) -> &'static str {
        match self {
            AssertionRole::Post => "postcondition",
            AssertionRole::LoopInv => "loop_invariant",
            AssertionRole::OdeInv => "ode_invariant",
            AssertionRole::OdeInvs => "ode_invariants_joint",
        }
    }
}

/// Structural address of an assertion: the command path from the program
/// body plus the position in that command's annotation list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AssertionPath {
    pub node: Vec<usize>,
    pub role: AssertionRole,
    pub index: usize,
}

impl AssertionPath {
    pub fn post(index: usize) -> Self {
        AssertionPath { node: Vec::new(), role: AssertionRole::Post, index }
    }

    fn key(&self) -> (bool, &[usize], AssertionRole, usize) {
        (self.role != AssertionRole::Post, &self.node, self.role, self.index)
    }
}

impl Ord for AssertionPath {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for AssertionPath {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for AssertionPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.role == AssertionRole::Post {
            return write!(f, "post[{}]", self.index);
        }
        f.write_str("body")?;
        for i in &self.node {
            write!(f, ".{i}")?;
        }
        match self.role {
            AssertionRole::LoopInv => write!(f, ":inv[{}]", self.index),
            AssertionRole::OdeInv => write!(f, ":ode_inv[{}]", self.index),
            AssertionRole::OdeInvs => f.write_str(":ode_invs"),
            AssertionRole::Post => unreachable!(),
        }
    }
}

impl FromStr for AssertionPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let err = || format!("invalid assertion path `{s}`");
        let index_of = |rest: &str, prefix: &str| -> Option<usize> {
            rest.strip_prefix(prefix)?.strip_suffix(']')?.parse().ok()
        };
        if let Some(i) = index_of(s, "post[") {
            return Ok(AssertionPath::post(i));
        }
        let (node_part, role_part) = s.split_once(':').ok_or_else(err)?;
        let mut parts = node_part.split('.');
        if parts.next() != Some("body") {
            return Err(err());
        }
        let node = parts
            .map(|p| p.parse::<usize>().map_err(|_| err()))
            .collect::<Result<Vec<_>, _>>()?;
        let (role, index) = if role_part == "ode_invs" {
            (AssertionRole::OdeInvs, 0)
        } else if let Some(i) = index_of(role_part, "inv[") {
            (AssertionRole::LoopInv, i)
        } else if let Some(i) = index_of(role_part, "ode_inv[") {
            (AssertionRole::OdeInv, i)
        } else {
            return Err(err());
        };
        Ok(AssertionPath { node, role, index })
    }
}

/// Child of `node` at position `i` in the structural path scheme: sequence
/// and choice elements, if-branches (the else branch last) and loop bodies.
pub fn child(node: &Node, i: usize) -> Option<&Node> {
    match &node.kind {
        NodeKind::Seq(items) | NodeKind::Choice(items) => items.get(i),
        NodeKind::If { branches, else_branch } => {
            if i < branches.len() {
                Some(&branches[i].body)
            } else if i == branches.len() {
                else_branch.as_deref()
            } else {
                None
            }
        }
        NodeKind::Loop { body, .. } if i == 0 => Some(body),
        _ => None,
    }
}

pub fn resolve_node<'a>(file: &'a HoareFile, path: &[usize]) -> Option<&'a Node> {
    path.iter().try_fold(&file.body, |n, &i| child(n, i))
}

/// The assertion carrying hints for `path`. Joint ODE invariants store their
/// hints on the first invariant of the ODE.
pub fn resolve_assertion<'a>(file: &'a HoareFile, path: &AssertionPath) -> Option<&'a Assertion> {
    if path.role == AssertionRole::Post {
        return file.post.get(path.index);
    }
    let node = resolve_node(file, &path.node)?;
    match (&node.kind, path.role) {
        (NodeKind::Loop { invariants, .. }, AssertionRole::LoopInv) => invariants.get(path.index),
        (NodeKind::Ode(ode), AssertionRole::OdeInv) => match &ode.annotation {
            OdeAnnotation::Invariants { invariants, .. } => invariants.get(path.index).map(|i| &i.assertion),
            OdeAnnotation::Solution => None,
        },
        (NodeKind::Ode(ode), AssertionRole::OdeInvs) => match &ode.annotation {
            OdeAnnotation::Invariants { ghosts, invariants } if !ghosts.is_empty() => {
                invariants.first().map(|i| &i.assertion)
            }
            _ => None,
        },
        _ => None,
    }
}

/// Every hint-bearing assertion path in the file.
pub fn assertion_paths(file: &HoareFile) -> Vec<AssertionPath> {
    fn walk(node: &Node, path: &mut Vec<usize>, out: &mut Vec<AssertionPath>) {
        match &node.kind {
            NodeKind::Loop { invariants, .. } => {
                for i in 0..invariants.len() {
                    out.push(AssertionPath { node: path.clone(), role: AssertionRole::LoopInv, index: i });
                }
            }
            NodeKind::Ode(ode) => {
                if let OdeAnnotation::Invariants { invariants, .. } = &ode.annotation {
                    for i in 0..invariants.len() {
                        out.push(AssertionPath { node: path.clone(), role: AssertionRole::OdeInv, index: i });
                    }
                }
            }
            _ => {}
        }
        let mut i = 0;
        while let Some(c) = child(node, i) {
            path.push(i);
            walk(c, path, out);
            path.pop();
            i += 1;
        }
    }
    let mut out: Vec<AssertionPath> = (0..file.post.len()).map(AssertionPath::post).collect();
    walk(&file.body, &mut Vec::new(), &mut out);
    out
}

/// Sets each VC's solver from the hints on its origin assertion and returns
/// warnings for hints that match no VC.
pub fn bind_solvers(file: &HoareFile, vcs: &mut [VerificationCondition]) -> Vec<String> {
    let mut used: BTreeSet<(String, String)> = BTreeSet::new();
    for vc in vcs.iter_mut() {
        vc.solver = SolverName::Z3;
        let Some(assertion) = resolve_assertion(file, &vc.origin.path) else { continue };
        if let Some(h) = assertion.hints.iter().find(|h| h.label == vc.label) {
            vc.solver = h.solver;
            used.insert((hint_owner(&vc.origin.path), h.label.to_string()));
        }
    }
    let mut warnings = Vec::new();
    for path in assertion_paths(file) {
        let Some(assertion) = resolve_assertion(file, &path) else { continue };
        for h in &assertion.hints {
            if !used.contains(&(hint_owner(&path), h.label.to_string())) {
                warnings.push(format!("hint `{}: {}` on {} matches no VC", h.label.hint_text(), h.solver, path));
            }
        }
    }
    warnings
}

fn hint_owner(path: &AssertionPath) -> String {
    let mut p = path.clone();
    if p.role == AssertionRole::OdeInvs {
        p.role = AssertionRole::OdeInv;
        p.index = 0;
    }
    p.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_examples() {
        let l = Label::new(Category::Maintain, vec![BranchAtom::Index(2, vec![])]);
        assert_eq!(l.to_string(), "maintain 2");
        let l = Label::new(Category::None, vec![BranchAtom::Index(1, vec![BranchAtom::Index(2, vec![])])]);
        assert_eq!(l.to_string(), "1(2)");
        assert_eq!(Label::new(Category::Init, vec![BranchAtom::Index(1, vec![])]).to_string(), "init 1");
        assert_eq!(Label::new(Category::None, vec![BranchAtom::Skip]).to_string(), "skip");
        assert_eq!(Label::new(Category::InitAll, vec![]).to_string(), "init_all");
        assert_eq!(Label::default().to_string(), "");
        assert_eq!(Label::default().hint_text(), "_");
    }

    #[test]
    fn parse_examples() {
        for s in ["maintain 1(1(1)).skip", "1.2", "init_all", "exec", "init 2", "2(1.exec).skip"] {
            assert_eq!(s.parse::<Label>().unwrap().to_string(), s);
        }
        assert_eq!("_".parse::<Label>().unwrap(), Label::default());
        assert!("maintain 0".parse::<Label>().is_err());
        assert!("1(2".parse::<Label>().is_err());
        assert!("foo".parse::<Label>().is_err());
    }

    #[test]
    fn path_roundtrip() {
        for s in ["post[0]", "body:inv[1]", "body.1.0.2:ode_inv[0]", "body.3:ode_invs"] {
            assert_eq!(s.parse::<AssertionPath>().unwrap().to_string(), s);
        }
        assert!("body.x:inv[0]".parse::<AssertionPath>().is_err());
    }

    #[test]
    fn posts_sort_first() {
        let a: AssertionPath = "body:inv[0]".parse().unwrap();
        let b: AssertionPath = "post[1]".parse().unwrap();
        assert!(b < a);
    }
}

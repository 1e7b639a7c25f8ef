use num_traits::{Signed, ToPrimitive, Zero};

use super::lexer::{lex_at, skip_trivia, Tok};
use super::*;
use crate::expr::{Formula, OdeSystem, RelOp, Term};
use crate::labels::{Label, SolverName};

const KEYWORDS: &[&str] = &[
    "pre", "post", "skip", "if", "else", "invariant", "solution", "ghost", "true", "false", "exists", "forall",
];

type PResult<T> = Result<T, ParseError>;

pub(super) struct Parser<'a> {
    src: &'a str,
    pos: usize,
    last_end: usize,
}

impl<'a> Parser<'a> {
    pub(super) fn new(src: &'a str) -> Self {
        Parser { src, pos: 0, last_end: 0 }
    }

    fn peek(&self) -> PResult<(Tok, Span)> {
        lex_at(self.src, self.pos).map_err(|(span, message)| ParseError::new(span, message, Vec::new()))
    }

    fn bump(&mut self) -> PResult<(Tok, Span)> {
        let (t, sp) = self.peek()?;
        self.pos = sp.end;
        self.last_end = sp.end;
        Ok((t, sp))
    }

    fn start(&self) -> usize {
        skip_trivia(self.src, self.pos)
    }

    fn span_from(&self, start: usize) -> Span {
        Span::new(start, self.last_end.max(start))
    }

    fn checkpoint(&self) -> (usize, usize) {
        (self.pos, self.last_end)
    }

    fn restore(&mut self, cp: (usize, usize)) {
        self.pos = cp.0;
        self.last_end = cp.1;
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Ok((Tok::Sym(t), _)) if t == s)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Ok((Tok::Ident(t), _)) if t == kw)
    }

    fn eat_sym(&mut self, s: &str) -> PResult<bool> {
        if self.at_sym(s) {
            self.bump()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expected(&self, what: &[&str]) -> ParseError {
        match self.peek() {
            Ok((tok, span)) => {
                let list = what.join(" or ");
                ParseError::new(span, format!("expected {list}, found {tok}"), what.iter().map(|s| s.to_string()).collect())
            }
            Err(e) => e,
        }
    }

    fn expect_sym(&mut self, s: &'static str) -> PResult<Span> {
        if self.at_sym(s) {
            Ok(self.bump()?.1)
        } else {
            Err(self.expected(&[&format!("`{s}`")]))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.bump()?.1)
        } else {
            Err(self.expected(&[&format!("`{kw}`")]))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Span)> {
        match self.peek()? {
            (Tok::Ident(s), _) if !KEYWORDS.contains(&s.as_str()) => {
                let (_, sp) = self.bump()?;
                Ok((s, sp))
            }
            _ => Err(self.expected(&["identifier"])),
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        match self.peek()? {
            (Tok::Eof, _) => Ok(()),
            _ => Err(self.expected(&["end of input"])),
        }
    }

    // ---- file and commands ----

    pub(super) fn file(&mut self) -> PResult<HoareFile> {
        if !self.at_kw("pre") {
            let span = self.peek().map(|(_, s)| s).unwrap_or_default();
            return Err(ParseError::new(span, "expected pre block".to_string(), vec!["`pre`".to_string()]));
        }
        self.bump()?;
        let mut pre = Vec::new();
        while self.at_sym("[") {
            pre.push(self.assertion(false)?);
        }
        self.expect_sym(";")?;
        let body = self.choice()?;
        if !self.at_kw("post") {
            return Err(self.expected(&["command", "`post`"]));
        }
        self.bump()?;
        let mut post = Vec::new();
        while self.at_sym("[") {
            post.push(self.assertion(true)?);
        }
        self.expect_sym(";")?;
        self.expect_eof()?;
        Ok(HoareFile { pre, body, post })
    }

    fn at_seq_end(&self) -> bool {
        matches!(self.peek(), Ok((Tok::Eof, _)))
            || self.at_sym("++")
            || self.at_sym("}")
            || self.at_kw("post")
    }

    fn choice(&mut self) -> PResult<Node> {
        let first = self.seq()?;
        if !self.at_sym("++") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_sym("++")? {
            items.push(self.seq()?);
        }
        let span = items[0].span.join(items[items.len() - 1].span);
        Ok(Node { kind: NodeKind::Choice(items), span })
    }

    fn seq(&mut self) -> PResult<Node> {
        let mut items: Vec<Node> = Vec::new();
        while !self.at_seq_end() {
            let cmd = self.command()?;
            match cmd.kind {
                NodeKind::Seq(inner) => items.extend(inner),
                _ => items.push(cmd),
            }
        }
        match items.len() {
            0 => Err(self.expected(&["command"])),
            1 => Ok(items.pop().expect("one item")),
            _ => {
                let span = items[0].span.join(items[items.len() - 1].span);
                Ok(Node { kind: NodeKind::Seq(items), span })
            }
        }
    }

    fn command(&mut self) -> PResult<Node> {
        let start = self.start();
        let (tok, _) = self.peek()?;
        match tok {
            Tok::Ident(ref k) if k == "skip" => {
                self.bump()?;
                let span = self.span_from(start);
                self.expect_sym(";")?;
                Ok(Node { kind: NodeKind::Skip, span })
            }
            Tok::Ident(ref k) if k == "if" => self.if_command(),
            Tok::Sym("{") => {
                if self.at_ode_head() {
                    self.ode()
                } else {
                    self.block_command()
                }
            }
            Tok::Ident(ref k) if !KEYWORDS.contains(&k.as_str()) => self.assignment(),
            _ => Err(self.expected(&["command"])),
        }
    }

    /// `{ x_dot =` starts an ODE rather than a block.
    fn at_ode_head(&self) -> bool {
        let Ok((_, brace)) = self.peek() else { return false };
        let Ok((Tok::Ident(v), first)) = lex_at(self.src, brace.end) else { return false };
        v.ends_with("_dot") && matches!(lex_at(self.src, first.end), Ok((Tok::Sym("="), _)))
    }

    fn assignment(&mut self) -> PResult<Node> {
        let start = self.start();
        let (var, _) = self.expect_ident()?;
        self.expect_sym(":=")?;
        let kind = if self.eat_sym("*")? {
            self.expect_sym("(")?;
            let (cond, _) = self.formula_spanned()?;
            self.expect_sym(")")?;
            NodeKind::NondetAssign { var, cond }
        } else {
            NodeKind::Assign { var, expr: self.term()? }
        };
        let span = self.span_from(start);
        self.expect_sym(";")?;
        Ok(Node { kind, span })
    }

    fn block(&mut self) -> PResult<Node> {
        self.expect_sym("{")?;
        let body = self.choice()?;
        self.expect_sym("}")?;
        Ok(body)
    }

    fn if_command(&mut self) -> PResult<Node> {
        let start = self.start();
        self.expect_kw("if")?;
        let mut branches = Vec::new();
        let mut else_branch = None;
        loop {
            self.expect_sym("(")?;
            let (cond, cond_span) = self.formula_spanned()?;
            self.expect_sym(")")?;
            let body = self.block()?;
            branches.push(IfBranch { cond, cond_span, body });
            if !self.at_kw("else") {
                break;
            }
            self.bump()?;
            if self.at_kw("if") {
                self.bump()?;
                continue;
            }
            else_branch = Some(Box::new(self.block()?));
            break;
        }
        Ok(Node { kind: NodeKind::If { branches, else_branch }, span: self.span_from(start) })
    }

    fn block_command(&mut self) -> PResult<Node> {
        let start = self.start();
        let body = self.block()?;
        if !self.eat_sym("*")? {
            self.eat_sym(";")?;
            return Ok(body);
        }
        let mut invariants = Vec::new();
        if self.at_kw("invariant") {
            self.bump()?;
            while self.at_sym("[") {
                invariants.push(self.assertion(true)?);
            }
        }
        let span = self.span_from(start);
        self.expect_sym(";")?;
        Ok(Node { kind: NodeKind::Loop { body: Box::new(body), invariants }, span })
    }

    fn dot_var(&mut self) -> PResult<(String, Span)> {
        match self.peek()? {
            (Tok::Ident(s), _) if s.ends_with("_dot") && s.len() > 4 => {
                let (_, sp) = self.bump()?;
                Ok((s[..s.len() - 4].to_string(), sp))
            }
            _ => Err(self.expected(&["derivative `x_dot`"])),
        }
    }

    fn ode(&mut self) -> PResult<Node> {
        let start = self.start();
        self.expect_sym("{")?;
        let mut eqs: Vec<(String, Term)> = Vec::new();
        loop {
            let (var, vspan) = self.dot_var()?;
            if eqs.iter().any(|(v, _)| *v == var) {
                return Err(ParseError::new(vspan, format!("duplicate equation for `{var}`"), Vec::new()));
            }
            self.expect_sym("=")?;
            eqs.push((var, self.term()?));
            if !self.eat_sym(",")? {
                break;
            }
        }
        let (domain, domain_span) = if self.eat_sym("&")? {
            let (d, sp) = self.formula_spanned()?;
            (d, Some(sp))
        } else {
            (Formula::True, None)
        };
        self.expect_sym("}")?;
        let head_span = self.span_from(start);
        let annotation = if self.at_kw("solution") {
            self.bump()?;
            OdeAnnotation::Solution
        } else if self.at_kw("invariant") {
            self.bump()?;
            let mut ghosts = Vec::new();
            while self.at_kw("ghost") {
                ghosts.push(self.ghost()?);
            }
            let mut invariants = Vec::new();
            while self.at_sym("[") {
                invariants.push(self.ode_inv()?);
            }
            OdeAnnotation::Invariants { ghosts, invariants }
        } else {
            OdeAnnotation::Invariants { ghosts: Vec::new(), invariants: Vec::new() }
        };
        let span = self.span_from(start);
        self.expect_sym(";")?;
        let ode = Ode { system: OdeSystem(eqs), domain, domain_span, head_span, annotation };
        Ok(Node { kind: NodeKind::Ode(Box::new(ode)), span })
    }

    fn ghost(&mut self) -> PResult<Ghost> {
        let start = self.start();
        self.expect_kw("ghost")?;
        let (var, _) = self.expect_ident()?;
        self.expect_sym("(")?;
        let (dvar, dspan) = self.dot_var()?;
        if dvar != var {
            return Err(ParseError::new(dspan, format!("expected `{var}_dot`"), vec![format!("`{var}_dot`")]));
        }
        self.expect_sym("=")?;
        let rhs = self.term()?;
        self.expect_sym(")")?;
        Ok(Ghost { var, rhs, span: self.span_from(start) })
    }

    fn ode_inv(&mut self) -> PResult<OdeInv> {
        let mut assertion = self.assertion(false)?;
        let mut rule = OdeRule::DI;
        let p = self.start();
        if self.src[p..].starts_with('{') && !self.src[p..].starts_with("{{") {
            self.expect_sym("{")?;
            match self.peek()? {
                (Tok::Ident(k), _) if k == "dbx" => {
                    self.bump()?;
                    let g = if self.at_sym("}") { None } else { Some(self.term()?) };
                    rule = OdeRule::Dbx(g);
                }
                (Tok::Ident(k), _) if k == "bc" => {
                    self.bump()?;
                    rule = OdeRule::Bc;
                }
                _ => return Err(self.expected(&["`dbx`", "`bc`"])),
            }
            self.expect_sym("}")?;
            assertion.insert_at = self.last_end;
        }
        self.hints(&mut assertion)?;
        Ok(OdeInv { assertion, rule })
    }

    fn assertion(&mut self, with_hints: bool) -> PResult<Assertion> {
        let start = self.start();
        self.expect_sym("[")?;
        let (formula, _) = self.formula_spanned()?;
        self.expect_sym("]")?;
        let span = self.span_from(start);
        let mut a = Assertion { formula, span, hints: Vec::new(), hints_span: None, insert_at: span.end };
        if with_hints {
            self.hints(&mut a)?;
        }
        Ok(a)
    }

    fn hints(&mut self, a: &mut Assertion) -> PResult<()> {
        let p = self.start();
        if !self.src[p..].starts_with("{{") {
            return Ok(());
        }
        let close = self.src[p + 2..]
            .find("}}")
            .map(|i| p + 2 + i)
            .ok_or_else(|| ParseError::new(Span::new(p, p + 2), "unterminated hint block".to_string(), vec!["`}}`".to_string()]))?;
        let mut offset = p + 2;
        for entry in self.src[p + 2..close].split(',') {
            let entry_span = Span::new(offset, offset + entry.len());
            offset += entry.len() + 1;
            if entry.trim().is_empty() {
                continue;
            }
            let bad = |msg: String| ParseError::new(entry_span, msg, vec!["`label: solver`".to_string()]);
            let (label, solver) = entry.rsplit_once(':').ok_or_else(|| bad("expected `label: solver`".to_string()))?;
            let label: Label = label.parse().map_err(|e: crate::labels::LabelParseError| bad(e.to_string()))?;
            let solver: SolverName = solver.parse().map_err(bad)?;
            a.hints.push(Hint { label, solver });
        }
        a.hints_span = Some(Span::new(p, close + 2));
        self.pos = close + 2;
        self.last_end = close + 2;
        Ok(())
    }

    // ---- formulas ----

    pub(super) fn formula_spanned(&mut self) -> PResult<(Formula, Span)> {
        let start = self.start();
        let f = self.formula()?;
        Ok((f, self.span_from(start)))
    }

    pub(super) fn formula(&mut self) -> PResult<Formula> {
        if self.at_kw("exists") || self.at_kw("forall") {
            return self.quantifier();
        }
        let lhs = self.disjunction()?;
        if self.eat_sym("->")? {
            let rhs = self.formula()?;
            return Ok(Formula::imp(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let mut f = self.conjunction()?;
        while self.eat_sym("||")? {
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut f = self.negation()?;
        while self.eat_sym("&&")? {
            f = Formula::and(f, self.negation()?);
        }
        Ok(f)
    }

    fn negation(&mut self) -> PResult<Formula> {
        if self.eat_sym("!")? {
            return Ok(Formula::not(self.negation()?));
        }
        if self.at_kw("exists") || self.at_kw("forall") {
            return self.quantifier();
        }
        self.atom()
    }

    fn var_list_dot(&mut self) -> PResult<Vec<String>> {
        let mut vars = vec![self.expect_ident()?.0];
        while !self.at_sym(".") {
            vars.push(self.expect_ident()?.0);
        }
        self.expect_sym(".")?;
        Ok(vars)
    }

    fn quantifier(&mut self) -> PResult<Formula> {
        let (tok, _) = self.bump()?;
        let exists = tok == Tok::Ident("exists".to_string());
        if exists {
            let vars = self.var_list_dot()?;
            return Ok(Formula::Exists(vars, Box::new(self.formula()?)));
        }
        let cp = self.checkpoint();
        if let Ok(vars) = self.var_list_dot() {
            return Ok(Formula::Forall(vars, Box::new(self.formula()?)));
        }
        self.restore(cp);
        let lower = self.term()?;
        self.expect_sym("<=")?;
        let (var, _) = self.expect_ident()?;
        self.expect_sym("<")?;
        let upper = self.term()?;
        self.expect_sym(".")?;
        let body = self.formula()?;
        Ok(Formula::BoundedForall { var, lower, upper, body: Box::new(body) })
    }

    fn relop(&mut self) -> PResult<RelOp> {
        let op = match self.peek()?.0 {
            Tok::Sym("==") => RelOp::Eq,
            Tok::Sym("!=") => RelOp::Ne,
            Tok::Sym("<") => RelOp::Lt,
            Tok::Sym("<=") => RelOp::Le,
            Tok::Sym(">") => RelOp::Gt,
            Tok::Sym(">=") => RelOp::Ge,
            _ => return Err(self.expected(&["comparison operator"])),
        };
        self.bump()?;
        Ok(op)
    }

    fn atom(&mut self) -> PResult<Formula> {
        if self.at_kw("true") {
            self.bump()?;
            return Ok(Formula::True);
        }
        if self.at_kw("false") {
            self.bump()?;
            return Ok(Formula::False);
        }
        if self.at_sym("(") {
            let cp = self.checkpoint();
            self.bump()?;
            let attempt = self.formula().and_then(|f| {
                self.expect_sym(")")?;
                Ok(f)
            });
            let continues_term = matches!(
                self.peek(),
                Ok((Tok::Sym("+" | "-" | "*" | "/" | "^" | "==" | "!=" | "<" | "<=" | ">" | ">="), _))
            );
            match attempt {
                Ok(f) if !continues_term => return Ok(f),
                Ok(_) => self.restore(cp),
                Err(formula_err) => {
                    self.restore(cp);
                    return self.comparison().map_err(|term_err| {
                        if term_err.span.start >= formula_err.span.start {
                            term_err
                        } else {
                            formula_err
                        }
                    });
                }
            }
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Formula> {
        let a = self.term()?;
        let op = self.relop()?;
        let b = self.term()?;
        Ok(Formula::Cmp(a, op, b))
    }

    // ---- terms ----

    pub(super) fn term(&mut self) -> PResult<Term> {
        let mut t = self.product()?;
        loop {
            if self.eat_sym("+")? {
                t = Term::add(t, self.product()?);
            } else if self.eat_sym("-")? {
                t = Term::sub(t, self.product()?);
            } else {
                return Ok(t);
            }
        }
    }

    fn product(&mut self) -> PResult<Term> {
        let mut t = self.unary()?;
        loop {
            if self.eat_sym("*")? {
                t = Term::mul(t, self.unary()?);
            } else if self.at_sym("/") {
                self.bump()?;
                let start = self.start();
                let d = self.unary()?;
                let span = self.span_from(start);
                match d.to_poly().ok().and_then(|p| p.as_constant()) {
                    Some(c) if !c.is_zero() => {}
                    Some(_) => return Err(ParseError::new(span, "division by zero".to_string(), Vec::new())),
                    None => {
                        return Err(ParseError::new(span, "divisor must be a nonzero constant".to_string(), Vec::new()))
                    }
                }
                t = Term::Div(Box::new(t), Box::new(d));
            } else {
                return Ok(t);
            }
        }
    }

    fn unary(&mut self) -> PResult<Term> {
        if self.eat_sym("-")? {
            return Ok(Term::Neg(Box::new(self.unary()?)));
        }
        let base = self.primary()?;
        if self.eat_sym("^")? {
            return match self.peek()? {
                (Tok::Number(n), sp) => {
                    let e = n.is_integer().then(|| n.to_integer()).filter(|e| !e.is_negative()).and_then(|e| e.to_u32());
                    match e {
                        Some(e) => {
                            self.bump()?;
                            Ok(Term::Pow(Box::new(base), e))
                        }
                        None => Err(ParseError::new(sp, "exponent must be a natural number".to_string(), Vec::new())),
                    }
                }
                _ => Err(self.expected(&["natural-number exponent"])),
            };
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Term> {
        match self.peek()? {
            (Tok::Number(n), _) => {
                self.bump()?;
                Ok(Term::Const(n))
            }
            (Tok::Ident(s), _) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump()?;
                Ok(Term::Var(s))
            }
            (Tok::Sym("("), _) => {
                self.bump()?;
                let t = self.term()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            _ => Err(self.expected(&["term"])),
        }
    }

    pub(super) fn finish(&self) -> PResult<()> {
        self.expect_eof()
    }
}

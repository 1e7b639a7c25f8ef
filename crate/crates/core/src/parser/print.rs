use std::fmt::Write;

use super::*;

/// Pretty-prints a file in the concrete syntax accepted by [`parse`].
pub fn print(file: &HoareFile) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    p.out.push_str("pre");
    for a in &file.pre {
        p.out.push(' ');
        p.assertion(a);
    }
    p.out.push_str(";\n");
    p.choice_level(&file.body);
    p.out.push_str("post");
    for a in &file.post {
        p.out.push(' ');
        p.assertion(a);
    }
    p.out.push_str(";\n");
    p.out
}

struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn line_start(&mut self) {
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
    }

    fn assertion(&mut self, a: &Assertion) {
        write!(self.out, "[{}]", a.formula).unwrap();
        self.hints(a);
    }

    fn hints(&mut self, a: &Assertion) {
        if a.hints.is_empty() {
            return;
        }
        let items: Vec<String> = a.hints.iter().map(|h| format!("{}: {}", h.label.hint_text(), h.solver)).collect();
        write!(self.out, " {{{{{}}}}}", items.join(", ")).unwrap();
    }

    /// Body of a block, a branch or the whole program.
    fn choice_level(&mut self, n: &Node) {
        match &n.kind {
            NodeKind::Choice(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        self.line_start();
                        self.out.push_str("++\n");
                    }
                    self.seq_level(item);
                }
            }
            _ => self.seq_level(n),
        }
    }

    fn seq_level(&mut self, n: &Node) {
        match &n.kind {
            NodeKind::Seq(items) => items.iter().for_each(|c| self.command(c)),
            _ => self.command(n),
        }
    }

    fn block(&mut self, body: &Node) {
        self.out.push_str("{\n");
        self.indent += 1;
        self.choice_level(body);
        self.indent -= 1;
        self.line_start();
        self.out.push('}');
    }

    fn command(&mut self, n: &Node) {
        self.line_start();
        match &n.kind {
            NodeKind::Skip => self.out.push_str("skip;\n"),
            NodeKind::Assign { var, expr } => writeln!(self.out, "{var} := {expr};").unwrap(),
            NodeKind::NondetAssign { var, cond } => writeln!(self.out, "{var} := *({cond});").unwrap(),
            NodeKind::Seq(_) | NodeKind::Choice(_) => {
                self.block(n);
                self.out.push('\n');
            }
            NodeKind::If { branches, else_branch } => {
                for (i, b) in branches.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(" else ");
                    }
                    write!(self.out, "if ({}) ", b.cond).unwrap();
                    self.block(&b.body);
                }
                if let Some(e) = else_branch {
                    self.out.push_str(" else ");
                    self.block(e);
                }
                self.out.push('\n');
            }
            NodeKind::Loop { body, invariants } => {
                self.block(body);
                self.out.push('*');
                if !invariants.is_empty() {
                    self.out.push_str(" invariant");
                    for a in invariants {
                        self.out.push(' ');
                        self.assertion(a);
                    }
                }
                self.out.push_str(";\n");
            }
            NodeKind::Ode(ode) => {
                self.ode(ode);
                self.out.push_str(";\n");
            }
        }
    }

    fn ode(&mut self, ode: &Ode) {
        self.out.push('{');
        for (i, (v, e)) in ode.system.0.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            write!(self.out, "{v}_dot = {e}").unwrap();
        }
        if ode.domain != crate::expr::Formula::True {
            write!(self.out, " & {}", ode.domain).unwrap();
        }
        self.out.push('}');
        match &ode.annotation {
            OdeAnnotation::Solution => self.out.push_str(" solution"),
            OdeAnnotation::Invariants { ghosts, invariants } => {
                if ghosts.is_empty() && invariants.is_empty() {
                    return;
                }
                self.out.push_str(" invariant");
                for g in ghosts {
                    write!(self.out, " ghost {} ({}_dot = {})", g.var, g.var, g.rhs).unwrap();
                }
                for inv in invariants {
                    write!(self.out, " [{}]", inv.assertion.formula).unwrap();
                    match &inv.rule {
                        OdeRule::DI => {}
                        OdeRule::Dbx(None) => self.out.push_str(" {dbx}"),
                        OdeRule::Dbx(Some(g)) => write!(self.out, " {{dbx {g}}}").unwrap(),
                        OdeRule::Bc => self.out.push_str(" {bc}"),
                    }
                    self.hints(&inv.assertion);
                }
            }
        }
    }
}

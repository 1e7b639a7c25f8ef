use std::fmt::Write;

use num_traits::{One, Signed};

use crate::expr::{Formula, RelOp, Rational, Term};

const RESERVED: &[&str] = &[
    "and", "or", "not", "xor", "ite", "let", "exists", "forall", "true", "false", "distinct", "div", "mod", "abs",
    "to_real", "to_int", "is_int", "pi", "exp", "sin", "cos", "tan", "root-obj", "par", "_", "!", "as",
];

pub fn symbol(name: &str) -> String {
    if RESERVED.contains(&name) || name.starts_with('_') {
        format!("|{name}|")
    } else {
        name.to_string()
    }
}

fn rational(r: &Rational, out: &mut String) {
    if r.is_negative() {
        out.push_str("(- ");
        rational(&-r.clone(), out);
        out.push(')');
    } else if r.denom().is_one() {
        write!(out, "{}", r.numer()).unwrap();
    } else {
        write!(out, "(/ {} {})", r.numer(), r.denom()).unwrap();
    }
}

fn term(t: &Term, out: &mut String) {
    let bin = |op: &str, a: &Term, b: &Term, out: &mut String| {
        write!(out, "({op} ").unwrap();
        term(a, out);
        out.push(' ');
        term(b, out);
        out.push(')');
    };
    match t {
        Term::Const(c) => rational(c, out),
        Term::Var(v) => out.push_str(&symbol(v)),
        Term::Neg(a) => {
            out.push_str("(- ");
            term(a, out);
            out.push(')');
        }
        Term::Add(a, b) => bin("+", a, b, out),
        Term::Sub(a, b) => bin("-", a, b, out),
        Term::Mul(a, b) => bin("*", a, b, out),
        Term::Div(a, b) => bin("/", a, b, out),
        Term::Pow(_, 0) => out.push('1'),
        Term::Pow(a, 1) => term(a, out),
        Term::Pow(a, n) => {
            out.push_str("(*");
            for _ in 0..*n {
                out.push(' ');
                term(a, out);
            }
            out.push(')');
        }
    }
}

fn binders(vars: &[String], out: &mut String) {
    out.push('(');
    for (i, v) in vars.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "({} Real)", symbol(v)).unwrap();
    }
    out.push(')');
}

fn formula(f: &Formula, out: &mut String) {
    let nary = |op: &str, a: &Formula, b: &Formula, out: &mut String| {
        write!(out, "({op} ").unwrap();
        formula(a, out);
        out.push(' ');
        formula(b, out);
        out.push(')');
    };
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Cmp(a, op, b) => {
            let sym = match op {
                RelOp::Eq | RelOp::Ne => "=",
                RelOp::Lt => "<",
                RelOp::Le => "<=",
                RelOp::Gt => ">",
                RelOp::Ge => ">=",
            };
            if *op == RelOp::Ne {
                out.push_str("(not ");
            }
            write!(out, "({sym} ").unwrap();
            term(a, out);
            out.push(' ');
            term(b, out);
            out.push(')');
            if *op == RelOp::Ne {
                out.push(')');
            }
        }
        Formula::Not(a) => {
            out.push_str("(not ");
            formula(a, out);
            out.push(')');
        }
        Formula::And(a, b) => nary("and", a, b, out),
        Formula::Or(a, b) => nary("or", a, b, out),
        Formula::Imp(a, b) => nary("=>", a, b, out),
        Formula::Exists(vs, body) | Formula::Forall(vs, body) => {
            let q = if matches!(f, Formula::Exists(..)) { "exists" } else { "forall" };
            write!(out, "({q} ").unwrap();
            binders(vs, out);
            out.push(' ');
            formula(body, out);
            out.push(')');
        }
        Formula::BoundedForall { var, lower, upper, body } => {
            out.push_str("(forall ");
            binders(std::slice::from_ref(var), out);
            out.push_str(" (=> (and (<= ");
            term(lower, out);
            write!(out, " {}) (< {} ", symbol(var), symbol(var)).unwrap();
            term(upper, out);
            out.push_str(")) ");
            formula(body, out);
            out.push_str("))");
        }
    }
}

pub fn formula_text(f: &Formula) -> String {
    let mut out = String::new();
    formula(f, &mut out);
    out
}

/// Script asking whether the negation of `f` is satisfiable.
pub fn emit_smt(f: &Formula, logic: &str) -> String {
    let mut out = String::new();
    writeln!(out, "(set-logic {logic})").unwrap();
    for v in f.free_vars() {
        writeln!(out, "(declare-fun {} () Real)", symbol(&v)).unwrap();
    }
    writeln!(out, "(assert (not {}))", formula_text(f)).unwrap();
    out.push_str("(check-sat)\n");
    out
}


//! Concrete-syntax printing for terms and formulas.

use std::fmt::{self, Display, Formatter, Write};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};

use super::{Formula, Rational, Term};

/// Decimal notation when the denominator divides a power of ten, `p/q`
/// otherwise.
pub fn format_rational(r: &Rational) -> String {
    let mut out = String::new();
    if r.is_negative() {
        out.push('-');
    }
    let r = r.abs();
    let (num, den) = (r.numer().clone(), r.denom().clone());
    if den.is_one() {
        write!(out, "{num}").ok();
        return out;
    }
    let mut d = den.clone();
    let (mut twos, mut fives) = (0u32, 0u32);
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while d.is_multiple_of(&two) {
        d /= &two;
        twos += 1;
    }
    while d.is_multiple_of(&five) {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        write!(out, "{num}/{den}").ok();
        return out;
    }
    let digits = twos.max(fives);
    let scaled = &num * num_traits::pow(BigInt::from(10), digits as usize) / &den;
    let (int, frac) = scaled.div_rem(&num_traits::pow(BigInt::from(10), digits as usize));
    write!(out, "{int}.{:0>width$}", frac.to_string(), width = digits as usize).ok();
    out
}

fn const_prec(c: &Rational) -> u8 {
    if c.is_negative() {
        3
    } else if c.denom().is_one() || format_rational(c).contains('.') {
        5
    } else {
        2
    }
}

fn term_prec(t: &Term) -> u8 {
    match t {
        Term::Const(c) => const_prec(c),
        Term::Var(_) => 5,
        Term::Add(..) | Term::Sub(..) => 1,
        Term::Mul(..) | Term::Div(..) => 2,
        Term::Neg(_) => 3,
        Term::Pow(..) => 4,
    }
}

fn write_term(t: &Term, min: u8, f: &mut Formatter<'_>) -> fmt::Result {
    let prec = term_prec(t);
    if prec < min {
        f.write_char('(')?;
    }
    match t {
        Term::Const(c) if c.is_negative() => {
            f.write_char('-')?;
            write_term(&Term::Const(-c), 3, f)?;
        }
        Term::Const(c) => f.write_str(&format_rational(c))?,
        Term::Var(v) => f.write_str(v)?,
        Term::Add(a, b) => {
            write_term(a, 1, f)?;
            f.write_str(" + ")?;
            write_term(b, 2, f)?;
        }
        Term::Sub(a, b) => {
            write_term(a, 1, f)?;
            f.write_str(" - ")?;
            write_term(b, 2, f)?;
        }
        Term::Mul(a, b) => {
            write_term(a, 2, f)?;
            f.write_char('*')?;
            write_term(b, 3, f)?;
        }
        Term::Div(a, b) => {
            write_term(a, 2, f)?;
            f.write_char('/')?;
            write_term(b, 3, f)?;
        }
        Term::Neg(a) => {
            f.write_char('-')?;
            write_term(a, 3, f)?;
        }
        Term::Pow(a, n) => {
            write_term(a, 5, f)?;
            write!(f, "^{n}")?;
        }
    }
    if prec < min {
        f.write_char(')')?;
    }
    Ok(())
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_term(self, 0, f)
    }
}

fn formula_prec(phi: &Formula) -> u8 {
    match phi {
        Formula::Exists(..) | Formula::Forall(..) | Formula::BoundedForall { .. } => 0,
        Formula::Imp(..) => 1,
        Formula::Or(..) => 2,
        Formula::And(..) => 3,
        Formula::Not(_) => 4,
        Formula::True | Formula::False | Formula::Cmp(..) => 5,
    }
}

fn write_formula(phi: &Formula, min: u8, f: &mut Formatter<'_>) -> fmt::Result {
    let prec = formula_prec(phi);
    if prec < min {
        f.write_char('(')?;
    }
    match phi {
        Formula::True => f.write_str("true")?,
        Formula::False => f.write_str("false")?,
        Formula::Cmp(a, op, b) => write!(f, "{a} {} {b}", op.symbol())?,
        Formula::Not(a) => {
            f.write_char('!')?;
            let min = if a.is_atomic() { 6 } else { 4 };
            write_formula(a, min, f)?;
        }
        Formula::And(a, b) => {
            write_formula(a, 3, f)?;
            f.write_str(" && ")?;
            write_formula(b, 4, f)?;
        }
        Formula::Or(a, b) => {
            write_formula(a, 2, f)?;
            f.write_str(" || ")?;
            write_formula(b, 3, f)?;
        }
        Formula::Imp(a, b) => {
            write_formula(a, 2, f)?;
            f.write_str(" -> ")?;
            write_formula(b, 1, f)?;
        }
        Formula::Exists(vs, body) | Formula::Forall(vs, body) => {
            let kw = if matches!(phi, Formula::Exists(..)) { "exists" } else { "forall" };
            write!(f, "{kw} {}. ", vs.join(" "))?;
            write_formula(body, 0, f)?;
        }
        Formula::BoundedForall { var, lower, upper, body } => {
            write!(f, "forall {lower} <= {var} < {upper}. ")?;
            write_formula(body, 0, f)?;
        }
    }
    if prec < min {
        f.write_char(')')?;
    }
    Ok(())
}

impl Display for Formula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_formula(self, 0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_term};

    #[test]
    fn rationals() {
        let r = |n: i64, d: i64| Rational::new(n.into(), d.into());
        assert_eq!(format_rational(&r(1, 1000)), "0.001");
        assert_eq!(format_rational(&r(27, 2)), "13.5");
        assert_eq!(format_rational(&r(-1, 2)), "-0.5");
        assert_eq!(format_rational(&r(1, 3)), "1/3");
        assert_eq!(format_rational(&r(7, 1)), "7");
    }

    #[test]
    fn terms_print_minimal_parens() {
        for s in ["x + 1", "(x + 1)*y", "x - (y - z)", "-x^2", "(-x)^2", "y*z*(z/2)", "1.3*(I - 750)^2"] {
            assert_eq!(parse_term(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn formulas_print() {
        for s in [
            "x >= 0 -> t1 >= 0 -> t1 > 0 -> x + 1 >= 1",
            "x >= 0 -> t1 >= 0 -> !(t1 > 0) -> x + 1 >= 1",
            "(a > 0 -> b > 0) -> c > 0",
            "x >= 1 && t == 0 -> x >= 1",
            "a > 0 || b > 0 && c > 0",
            "t > 0 -> (forall t2. t2 > 0 -> (forall 0 <= tau < t2. tau + x < 2) && !(t2 + x < 2) -> y == 2)",
            "exists y z. x*y >= 0 && y*z^2 == 1",
        ] {
            assert_eq!(parse_formula(s).unwrap().to_string(), s);
        }
    }
}

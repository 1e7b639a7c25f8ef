use std::collections::{BTreeMap, BTreeSet};

use num_traits::{ToPrimitive, Zero};

use super::{ExprError, Poly, Rational};

/// Polynomial arithmetic expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Const(Rational),
    Var(String),
    Neg(Box<Term>),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    /// Division; the parser only admits nonzero constant divisors.
    Div(Box<Term>, Box<Term>),
    Pow(Box<Term>, u32),
}

impl Term {
    pub fn int(n: i64) -> Term {
        Term::Const(Rational::from_integer(n.into()))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::Mul(Box::new(a), Box::new(b))
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Const(_) => {}
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Neg(a) | Term::Pow(a, _) => a.collect_vars(out),
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Simultaneous substitution; terms have no binders.
    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Const(_) => self.clone(),
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Neg(a) => Term::Neg(Box::new(a.substitute(map))),
            Term::Pow(a, n) => Term::Pow(Box::new(a.substitute(map)), *n),
            Term::Add(a, b) => Term::add(a.substitute(map), b.substitute(map)),
            Term::Sub(a, b) => Term::sub(a.substitute(map), b.substitute(map)),
            Term::Mul(a, b) => Term::mul(a.substitute(map), b.substitute(map)),
            Term::Div(a, b) => Term::Div(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
        }
    }

    pub fn to_poly(&self) -> Result<Poly, ExprError> {
        Ok(match self {
            Term::Const(c) => Poly::constant(c.clone()),
            Term::Var(v) => Poly::var(v),
            Term::Neg(a) => a.to_poly()?.neg(),
            Term::Add(a, b) => a.to_poly()?.add(&b.to_poly()?),
            Term::Sub(a, b) => a.to_poly()?.sub(&b.to_poly()?),
            Term::Mul(a, b) => a.to_poly()?.mul(&b.to_poly()?),
            Term::Pow(a, n) => a.to_poly()?.pow(*n),
            Term::Div(a, b) => {
                let den = b.to_poly()?;
                match den.as_constant() {
                    Some(c) if !c.is_zero() => a.to_poly()?.scale(&(Rational::from_integer(1.into()) / c)),
                    Some(_) => return Err(ExprError::DivisionByZero),
                    None => return Err(ExprError::NonConstantDivisor(b.to_string())),
                }
            }
        })
    }

    /// Canonical polynomial form as a term.
    pub fn normalize(&self) -> Result<Term, ExprError> {
        Ok(self.to_poly()?.to_term())
    }

    pub fn eval(&self, env: &BTreeMap<String, Rational>) -> Option<Rational> {
        Some(match self {
            Term::Const(c) => c.clone(),
            Term::Var(v) => env.get(v)?.clone(),
            Term::Neg(a) => -a.eval(env)?,
            Term::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Term::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Term::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Term::Div(a, b) => {
                let d = b.eval(env)?;
                if d.is_zero() {
                    return None;
                }
                a.eval(env)? / d
            }
            Term::Pow(a, n) => num_traits::pow(a.eval(env)?, *n as usize),
        })
    }

    pub fn eval_f64(&self, env: &dyn Fn(&str) -> f64) -> f64 {
        match self {
            Term::Const(c) => c.to_f64().unwrap_or(f64::NAN),
            Term::Var(v) => env(v),
            Term::Neg(a) => -a.eval_f64(env),
            Term::Add(a, b) => a.eval_f64(env) + b.eval_f64(env),
            Term::Sub(a, b) => a.eval_f64(env) - b.eval_f64(env),
            Term::Mul(a, b) => a.eval_f64(env) * b.eval_f64(env),
            Term::Div(a, b) => a.eval_f64(env) / b.eval_f64(env),
            Term::Pow(a, n) => a.eval_f64(env).powi(*n as i32),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_term;

    #[test]
    fn division_by_constant_only() {
        assert!(parse_term("x/2").unwrap().to_poly().is_ok());
        let bad = Term::Div(Box::new(Term::var("x")), Box::new(Term::var("y")));
        assert!(matches!(bad.to_poly(), Err(ExprError::NonConstantDivisor(_))));
    }

    #[test]
    fn semantic_equality_via_normal_form() {
        let a = parse_term("(x + 1)^2").unwrap().to_poly().unwrap();
        let b = parse_term("x*x + 2*x + 1").unwrap().to_poly().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_evaluation() {
        let t = parse_term("0.001 * x - 1/3").unwrap();
        let env = BTreeMap::from([("x".to_string(), Rational::from_integer(3000.into()))]);
        assert_eq!(t.eval(&env).unwrap(), Rational::new(8.into(), 3.into()));
    }
}
